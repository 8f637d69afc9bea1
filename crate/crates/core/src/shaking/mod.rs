//! Shaken coefficients, the shaken value `v^δ` and its mollification `u^δ`.
//!
//! Controls are enlarged to triples `(α, r, y)` with `r ∈ (−1, 0)` and
//! `|y| < 1`, and coefficients are read at `(t + δ²r, x + δy)`. The shaken
//! value is then averaged over `s ∈ (t, t + δ²)` and `|x − z| < δ` with a
//! polynomial bump of unit mass.

mod checks;
mod mollify;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoeffSample, ControlId, ControlledCoefficients, ProblemInstance, MAX_DIM};
use crate::solve::{solve, LatticeOptions, LatticeSpec, Storage, ValueField};
use crate::verify::{barrier_validate, BarrierScope};

pub use checks::{
    check_bounds, check_supersolution, shake_sweep, write_sweep_csv, BoundsReport, SweepRow,
};
pub use mollify::{mollify, write_kernel_csv, Kernel, SmoothMajorant};

/// Gauss–Legendre nodes on `(−1, 1)`.
const GAUSS5: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShakingConfig {
    pub delta: f64,
    /// Smoothness order `q` of the kernel `((−r)(1 + r))^q (1 − |y|²)^q`.
    #[serde(default = "default_q")]
    pub q: u32,
    /// Number of time-shift samples in `(−1, 0)` (at most 5).
    #[serde(default = "default_nr")]
    pub n_r: usize,
    /// Radius of the axis samples of the unit ball (the centre is always
    /// included).
    #[serde(default = "default_ry")]
    pub y_radius: f64,
}

fn default_q() -> u32 {
    4
}
fn default_nr() -> usize {
    5
}
fn default_ry() -> f64 {
    0.5
}

impl ShakingConfig {
    pub fn new(delta: f64) -> Result<Self> {
        let c = Self {
            delta,
            q: 4,
            n_r: 5,
            y_radius: 0.5,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if !(1..=5).contains(&self.n_r) {
            return Err(Error::Config(format!(
                "n_r must be in 1..=5, got {}",
                self.n_r
            )));
        }
        if !(self.y_radius >= 0.0 && self.y_radius < 1.0) {
            return Err(Error::Config(format!(
                "y samples must lie in the open unit ball, radius {}",
                self.y_radius
            )));
        }
        if self.q == 0 {
            return Err(Error::Config("kernel order q must be positive".into()));
        }
        Ok(())
    }

    /// Time-shift samples in `(−1, 0)`: the central `n_r` Gauss nodes.
    pub fn r_samples(&self) -> Vec<f64> {
        let skip = (5 - self.n_r) / 2;
        GAUSS5[skip..skip + self.n_r]
            .iter()
            .map(|xi| 0.5 * (xi - 1.0))
            .collect()
    }

    /// Space-shift samples: the centre and `±y_radius` along each axis.
    pub fn y_samples(&self, d: usize) -> Vec<[f64; MAX_DIM]> {
        let mut out = vec![[0.0; MAX_DIM]];
        if self.y_radius > 0.0 {
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut y = [0.0; MAX_DIM];
                    y[i] = s * self.y_radius;
                    out.push(y);
                }
            }
        }
        out
    }
}

/// Coefficients of control `(α, r_j, y_k)` at `(t, x)`: those of `α` at
/// `(t + δ²r_j, x + δy_k)`.
pub struct ShiftedCoefficients {
    base: Arc<dyn ControlledCoefficients>,
    delta: f64,
    r: Vec<f64>,
    y: Vec<[f64; MAX_DIM]>,
}

impl ShiftedCoefficients {
    pub fn samples(&self) -> usize {
        self.r.len() * self.y.len()
    }

    /// Base control and shift of an enlarged control index.
    pub fn split(&self, control: ControlId) -> (ControlId, f64, [f64; MAX_DIM]) {
        let per = self.samples();
        let (a, j) = (control.0 / per, control.0 % per);
        let (jr, jy) = (j / self.y.len(), j % self.y.len());
        (ControlId(a), self.r[jr], self.y[jy])
    }
}

impl ControlledCoefficients for ShiftedCoefficients {
    fn state_dim(&self) -> usize {
        self.base.state_dim()
    }

    fn noise_dim(&self) -> usize {
        self.base.noise_dim()
    }

    fn sample(&self, control: ControlId, t: f64, x: &[f64], eps: f64) -> CoeffSample {
        let (a, r, y) = self.split(control);
        let mut z = [0.0; MAX_DIM];
        for i in 0..x.len() {
            z[i] = x[i] + self.delta * y[i];
        }
        self.base
            .sample(a, t + self.delta * self.delta * r, &z[..x.len()], eps)
    }

    fn time_homogeneous(&self) -> bool {
        self.base.time_homogeneous()
    }

    fn time_slab(&self) -> (f64, f64) {
        let (lo, hi) = self.base.time_slab();
        (lo + self.delta * self.delta, hi)
    }
}

/// The instance with controls `A × {r_j} × {y_k}` and shifted coefficients.
/// Fails when the shifted times leave the declared coefficient slab over
/// `[t_from, T]`.
pub fn augment_controls(
    instance: &ProblemInstance,
    config: &ShakingConfig,
    t_from: f64,
) -> Result<ProblemInstance> {
    config.validate()?;
    let d = instance.dim();
    let (lo, hi) = instance.coefficients.time_slab();
    let top = instance.domain.bbox().t1;
    let reach = t_from - config.delta * config.delta;
    if reach < lo || top > hi {
        return Err(Error::Domain(format!(
            "shifted times [{reach}, {top}] leave the coefficient slab [{lo}, {hi}]"
        )));
    }
    let r = config.r_samples();
    let y = config.y_samples(d);
    let shifted = ShiftedCoefficients {
        base: instance.coefficients.clone(),
        delta: config.delta,
        r: r.clone(),
        y: y.clone(),
    };
    let ny = y.len();
    let controls = instance.controls.product(r.len() * ny, |j| {
        let (jr, jy) = (j / ny, j % ny);
        format!("|r={:.4},y={:?}", r[jr], &y[jy][..d])
    });
    let mut out = instance.clone();
    out.name = format!("{} shaken(delta={})", instance.name, config.delta);
    out.controls = controls;
    out.coefficients = Arc::new(shifted);
    Ok(out)
}

/// Solves the original and the shaken problem on one lattice over `[0, T]`,
/// keeping every `stride`-th slice together with one predecessor and the
/// `m + 1` successors that the kernel reaches.
pub fn solve_shaken(
    instance: &ProblemInstance,
    config: &ShakingConfig,
    opts: &LatticeOptions,
    anchors: usize,
) -> Result<(ValueField, ValueField)> {
    let shaken = augment_controls(instance, config, 0.0)?;
    let level = instance.controls.n_levels();
    let base_opts = opts.clone().starting_at(0.0);
    let a = LatticeSpec::build(instance, &base_opts, level, 0.0)?;
    let b = LatticeSpec::build(&shaken, &base_opts, level, 0.0)?;
    let dt = a.dt.min(b.dt);
    let mut lattice = LatticeSpec::build(&shaken, &base_opts.clone().with_dt(dt), level, 0.0)?;
    let m = ((config.delta * config.delta) / lattice.dt).ceil() as usize;
    let stride = (lattice.steps / anchors.max(1)).max(m + 4);
    lattice.storage = Storage::Anchored {
        stride,
        after: m + 1,
    };
    let v = solve(instance, &lattice, level, 0.0)?;
    let vd = solve(&shaken, &lattice, level, 0.0)?;
    Ok((v, vd))
}

/// Largest `δ` among `candidates` for which the barrier still validates on
/// the shaken instance (in the given scope).
pub fn admissible_delta(
    instance: &ProblemInstance,
    candidates: &[f64],
    scope: BarrierScope,
    budget: usize,
    seed: u64,
) -> Result<f64> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for delta in sorted {
        let cfg = ShakingConfig::new(delta)?;
        let shaken = augment_controls(instance, &cfg, 0.0)?;
        let ok = match (&instance.barrier, scope) {
            (Some(b), BarrierScope::Favored) => {
                // every shift of the favored control must keep the inequality
                let fav = b.favored.ok_or_else(|| {
                    Error::Capability("barrier declares no favored control".into())
                })?;
                let per = cfg.n_r * cfg.y_samples(instance.dim()).len();
                let mut all = true;
                for j in 0..per {
                    let mut bb = b.clone();
                    bb.favored = Some(ControlId(fav.0 * per + j));
                    let probe = shaken.clone().with_barrier(bb);
                    all &= barrier_validate(&probe, scope, budget, 0.0, seed)?.pass;
                }
                all
            }
            _ => barrier_validate(&shaken, scope, budget, 0.0, seed)?.pass,
        };
        if ok {
            return Ok(delta);
        }
    }
    Err(Error::Precondition(
        "no candidate delta keeps the barrier valid".into(),
    ))
}
