//! Euler–Maruyama simulation of controlled paths up to the first exit from
//! `Q`, with discounted payoff accumulation and coupled-path moments.

mod policy;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlId, ProblemInstance, MAX_DIM};

pub use policy::{FeedbackTable, Policy};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub seed: u64,
    pub n_paths: usize,
}

impl PathConfig {
    /// Step budget sized for the time span of `instance` (with margin).
    pub fn for_instance(instance: &ProblemInstance, dt: f64, n_paths: usize, seed: u64) -> Self {
        let b = instance.domain.bbox();
        let max_steps = ((b.t1 - b.t0) / dt).ceil() as usize + 16;
        Self {
            dt,
            max_steps,
            seed,
            n_paths,
        }
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "path time step must be positive, got {}",
                self.dt
            )));
        }
        let b = instance.domain.bbox();
        if (self.max_steps as f64) * self.dt < b.t1 - b.t0 {
            return Err(Error::Config(format!(
                "max_steps × dt = {} does not cover the time span {}",
                self.max_steps as f64 * self.dt,
                b.t1 - b.t0
            )));
        }
        Ok(())
    }
}

/// Exit data and payoff of one simulated path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub path_id: u64,
    /// Elapsed time until the path stopped.
    pub tau: f64,
    pub exit_time: f64,
    pub exit_point: Vec<f64>,
    /// `∫₀^τ f e^{−φ} ds`.
    pub running: f64,
    /// `e^{−φ_τ}`.
    pub discount: f64,
    /// `g · e^{−φ_τ}` (or the stop valuation times the discount).
    pub terminal: f64,
    /// True when the path left through the top rather than sideways.
    pub by_time: bool,
    pub steps: usize,
}

impl PathOutcome {
    pub fn total(&self) -> f64 {
        self.running + self.terminal
    }
}

/// Mean, standard error and count of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], dt: f64, seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n as f64).sqrt(),
            n,
            dt,
            seed,
        }
    }
}

/// Counter-based stream for path `path_id`: reproducible regardless of the
/// order in which paths are scheduled.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

/// State of one discretized path.
#[derive(Clone, Debug)]
pub(crate) struct Walker {
    pub t: f64,
    pub x: [f64; MAX_DIM],
    pub disc: f64,
    pub running: f64,
    pub elapsed: f64,
    pub steps: usize,
    /// Time before the latest step.
    pub prev_t: f64,
}

impl Walker {
    pub fn new(t: f64, x: &[f64]) -> Self {
        let mut buf = [0.0; MAX_DIM];
        buf[..x.len()].copy_from_slice(x);
        Self {
            t,
            x: buf,
            disc: 1.0,
            running: 0.0,
            elapsed: 0.0,
            steps: 0,
            prev_t: t,
        }
    }

    /// One Euler step of length `h` with Wiener increment `dw`.
    pub fn advance(
        &mut self,
        instance: &ProblemInstance,
        control: ControlId,
        eps: f64,
        h: f64,
        dw: &[f64],
    ) -> Result<()> {
        let d = instance.dim();
        let s = instance.sample(control, self.t, &self.x[..d], eps);
        if !s.is_finite() {
            return Err(Error::Numeric {
                step: self.steps,
                what: format!("coefficients at t = {}, x = {:?}", self.t, &self.x[..d]),
            });
        }
        let c = s.discount;
        let decay = (-c * h).exp();
        let weight = if (c * h).abs() < 1e-12 {
            h
        } else {
            (1.0 - decay) / c
        };
        self.running += s.reward * self.disc * weight;
        self.disc *= decay;
        let mut next = self.x;
        for i in 0..d {
            let mut inc = s.drift[i] * h;
            for (k, w) in dw.iter().enumerate() {
                inc += s.sigma[i][k] * w;
            }
            next[i] += inc;
        }
        self.x = next;
        self.prev_t = self.t;
        self.t += h;
        self.elapsed += h;
        self.steps += 1;
        Ok(())
    }
}

#[inline]
pub(crate) fn gaussian_increments(rng: &mut ChaCha8Rng, h: f64, out: &mut [f64]) {
    let s = h.sqrt();
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = s * z;
    }
}

/// Why a path stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    Exit,
    Horizon,
    Subdomain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Snap {
    None,
    Top,
    Horizon,
}

/// Next step length, shortened to land exactly on the top of the time box or
/// on the elapsed-time horizon when either is closer than a full step.
fn clipped_step(dt: f64, t: f64, top: f64, elapsed: f64, horizon: f64) -> (f64, Snap) {
    let slack = 1e-12 * dt.max(1.0);
    let to_top = top - t;
    let to_horizon = horizon - elapsed;
    if to_horizon <= dt + slack && to_horizon <= to_top {
        (to_horizon, Snap::Horizon)
    } else if to_top <= dt + slack {
        (to_top, Snap::Top)
    } else {
        (dt, Snap::None)
    }
}

/// Steps a path until it leaves `Q`, reaches `horizon` elapsed time, or
/// leaves `keep_going`; the last step is clipped to land on the horizon or
/// on the top of the bounding box.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_until(
    instance: &ProblemInstance,
    policy: &Policy,
    t: f64,
    x: &[f64],
    eps: f64,
    config: &PathConfig,
    path_id: u64,
    horizon: f64,
    keep_going: &dyn Fn(f64, &[f64]) -> bool,
) -> Result<(Walker, Stop)> {
    let d = instance.dim();
    let d1 = instance.noise_dim();
    let top = instance.domain.bbox().t1;
    let mut w = Walker::new(t, x);
    if !instance.contains(t, x) {
        return Ok((w, Stop::Exit));
    }
    if !keep_going(t, x) {
        return Ok((w, Stop::Subdomain));
    }
    let mut rng = path_rng(config.seed, path_id);
    let mut dw = [0.0; MAX_DIM];
    loop {
        if w.steps >= config.max_steps {
            return Err(Error::Numeric {
                step: w.steps,
                what: "path did not stop within max_steps".into(),
            });
        }
        let (h, snap) = clipped_step(config.dt, w.t, top, w.elapsed, horizon);
        if h <= 0.0 {
            return Ok((w, Stop::Exit));
        }
        gaussian_increments(&mut rng, h, &mut dw[..d1]);
        let control = policy.control(w.t, &w.x[..d]);
        w.advance(instance, control, eps, h, &dw[..d1])?;
        match snap {
            Snap::Top => w.t = top,
            Snap::Horizon => w.elapsed = horizon,
            Snap::None => {}
        }
        if !instance.contains(w.t, &w.x[..d]) {
            return Ok((w, Stop::Exit));
        }
        if snap == Snap::Horizon {
            return Ok((w, Stop::Horizon));
        }
        if !keep_going(w.t, &w.x[..d]) {
            return Ok((w, Stop::Subdomain));
        }
    }
}

fn outcome(instance: &ProblemInstance, w: &Walker, eps: f64, path_id: u64) -> PathOutcome {
    let d = instance.dim();
    let x = &w.x[..d];
    let g = instance.g(w.t, x, eps);
    PathOutcome {
        path_id,
        tau: w.elapsed,
        exit_time: w.t,
        exit_point: x.to_vec(),
        running: w.running,
        discount: w.disc,
        terminal: g * w.disc,
        by_time: w.steps > 0 && instance.contains(w.prev_t, x),
        steps: w.steps,
    }
}

/// One Euler–Maruyama path from `(t, x)` until the first step endpoint
/// outside `Q`. Exterior starts return `τ = 0` and the payoff `g(t, x)`.
pub fn euler_path(
    instance: &ProblemInstance,
    policy: &Policy,
    t: f64,
    x: &[f64],
    eps: f64,
    config: &PathConfig,
    path_id: u64,
) -> Result<PathOutcome> {
    config.validate(instance)?;
    let (w, _) = run_until(
        instance,
        policy,
        t,
        x,
        eps,
        config,
        path_id,
        f64::INFINITY,
        &|_, _| true,
    )?;
    Ok(outcome(instance, &w, eps, path_id))
}

/// Monte Carlo estimate of `v^α(t, x)` for a fixed policy.
pub fn payoff_mc(
    instance: &ProblemInstance,
    policy: &Policy,
    t: f64,
    x: &[f64],
    eps: f64,
    config: &PathConfig,
) -> Result<McEstimate> {
    let paths = simulate_paths(instance, policy, t, x, eps, config)?;
    let totals: Vec<f64> = paths.iter().map(PathOutcome::total).collect();
    Ok(McEstimate::from_samples(&totals, config.dt, config.seed))
}

/// All path outcomes of a batch, in path-id order.
pub fn simulate_paths(
    instance: &ProblemInstance,
    policy: &Policy,
    t: f64,
    x: &[f64],
    eps: f64,
    config: &PathConfig,
) -> Result<Vec<PathOutcome>> {
    if config.n_paths < 2 {
        return Err(Error::Config("at least two paths are required".into()));
    }
    config.validate(instance)?;
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|id| euler_path(instance, policy, t, x, eps, config, id))
        .collect()
}

pub fn write_paths_csv(path: &Path, outcomes: &[PathOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["path_id", "tau", "payoff", "exit_by_time"])?;
    for o in outcomes {
        w.write_record([
            o.path_id.to_string(),
            format!("{:.15e}", o.tau),
            format!("{:.15e}", o.total()),
            o.by_time.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `M(p, K) = 2pK + p²K²`.
pub fn moment_rate(p: f64, k: f64) -> f64 {
    2.0 * p * k + p * p * k * k
}

/// Pair of paths from `(t, x)` at `ε = 0` and `(t, y)` at `ε` driven by the
/// same Wiener increments and the same control process (read off the first
/// path).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedPathOutcome {
    pub path_id: u64,
    /// `max_k e^{−M s_k}|x_k − y_k|^p` up to the first step where either path
    /// has left `Q` (inclusive).
    pub sup: f64,
    pub gamma: f64,
    pub steps: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn paired_path(
    instance: &ProblemInstance,
    policy: &Policy,
    p: f64,
    m: f64,
    t: f64,
    x: &[f64],
    y: &[f64],
    eps: f64,
    config: &PathConfig,
    path_id: u64,
) -> Result<PairedPathOutcome> {
    let d = instance.dim();
    let d1 = instance.noise_dim();
    let top = instance.domain.bbox().t1;
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    let mut wx = Walker::new(t, x);
    let mut wy = Walker::new(t, y);
    let mut sup = dist(x, y).powf(p);
    let mut rng = path_rng(config.seed, path_id);
    let mut dw = [0.0; MAX_DIM];
    let alive = |w: &Walker| instance.contains(w.t, &w.x[..d]);
    while alive(&wx) && alive(&wy) {
        if wx.steps >= config.max_steps {
            return Err(Error::Numeric {
                step: wx.steps,
                what: "paired path did not stop within max_steps".into(),
            });
        }
        let (h, snap) = clipped_step(config.dt, wx.t, top, wx.elapsed, f64::INFINITY);
        if h <= 0.0 {
            break;
        }
        gaussian_increments(&mut rng, h, &mut dw[..d1]);
        let a = policy.control(wx.t, &wx.x[..d]);
        wx.advance(instance, a, 0.0, h, &dw[..d1])?;
        wy.advance(instance, a, eps, h, &dw[..d1])?;
        if snap == Snap::Top {
            wx.t = top;
            wy.t = top;
        }
        let q = (-m * wx.elapsed).exp() * dist(&wx.x[..d], &wy.x[..d]).powf(p);
        sup = sup.max(q);
    }
    Ok(PairedPathOutcome {
        path_id,
        sup,
        gamma: wx.elapsed,
        steps: wx.steps,
    })
}

/// Empirical `E sup_{s≤γ} e^{−Ms}|x_s − y_s(ε)|^p` with its standard error and
/// the bound `3(|x − y|^p + ε^p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledEstimate {
    pub lhs: f64,
    pub se: f64,
    pub bound: f64,
    pub n: usize,
    pub p: f64,
    pub m: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn coupled_moment_lhs(
    instance: &ProblemInstance,
    policy: &Policy,
    p: f64,
    m: f64,
    t: f64,
    x: &[f64],
    y: &[f64],
    eps: f64,
    config: &PathConfig,
) -> Result<CoupledEstimate> {
    if !(p >= 0.0) || !(m >= 0.0) {
        return Err(Error::Input(format!(
            "need p ≥ 0 and M ≥ 0, got p = {p}, M = {m}"
        )));
    }
    config.validate(instance)?;
    let sups: Vec<f64> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|id| paired_path(instance, policy, p, m, t, x, y, eps, config, id).map(|o| o.sup))
        .collect::<Result<_>>()?;
    let est = McEstimate::from_samples(&sups, config.dt, config.seed);
    let dxy: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    Ok(CoupledEstimate {
        lhs: est.mean,
        se: est.se,
        bound: 3.0 * (dxy.powf(p) + eps.powf(p)),
        n: est.n,
        p,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn exterior_start_stops_immediately() {
        let inst = gallery::brownian_annulus();
        let cfg = PathConfig::for_instance(&inst, 1e-3, 4, 1);
        let out = euler_path(
            &inst,
            &Policy::Constant(ControlId(0)),
            0.0,
            &[0.5, 0.0],
            0.0,
            &cfg,
            0,
        )
        .unwrap();
        assert_eq!(out.tau, 0.0);
        assert_eq!(out.total(), inst.g(0.0, &[0.5, 0.0], 0.0));
    }

    #[test]
    fn motionless_path_runs_to_the_top() {
        let inst = gallery::pure_discount();
        let cfg = PathConfig::for_instance(&inst, 1e-3, 2, 0);
        let out = euler_path(
            &inst,
            &Policy::Constant(ControlId(0)),
            0.0,
            &[0.3],
            0.0,
            &cfg,
            0,
        )
        .unwrap();
        assert!(out.by_time);
        assert!((out.exit_time - 1.0).abs() < 1e-12);
        assert!((out.discount - (-1.0f64).exp()).abs() < 1e-12);
        // left-point rule on ∫ e^{−s} ds
        assert!((out.total() - gallery::pure_discount_exact(0.0)).abs() < 1e-3);
    }

    #[test]
    fn batches_are_reproducible() {
        let inst = gallery::brownian_annulus();
        let cfg = PathConfig::for_instance(&inst, 1e-2, 64, 9);
        let p = Policy::Constant(ControlId(0));
        let a = simulate_paths(&inst, &p, 0.0, &[1.5, 0.0], 0.0, &cfg).unwrap();
        let b = simulate_paths(&inst, &p, 0.0, &[1.5, 0.0], 0.0, &cfg).unwrap();
        assert_eq!(a, b);
        let other = PathConfig { seed: 10, ..cfg };
        let c = simulate_paths(&inst, &p, 0.0, &[1.5, 0.0], 0.0, &other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_path_batches_are_rejected() {
        let inst = gallery::pure_discount();
        let cfg = PathConfig::for_instance(&inst, 1e-2, 1, 0);
        let err = payoff_mc(
            &inst,
            &Policy::Constant(ControlId(0)),
            0.0,
            &[0.0],
            0.0,
            &cfg,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn moment_rate_matches_formula() {
        assert_eq!(moment_rate(1.0, 2.0), 8.0);
        assert_eq!(moment_rate(2.0, 1.5), 15.0);
    }

    #[test]
    fn coupled_paths_from_one_point_without_perturbation_coincide() {
        let inst = gallery::smooth_benchmark();
        let cfg = PathConfig::for_instance(&inst, 1e-3, 50, 2);
        let e = coupled_moment_lhs(
            &inst,
            &Policy::Constant(ControlId(0)),
            2.0,
            8.0,
            0.0,
            &[0.1],
            &[0.1],
            0.0,
            &cfg,
        )
        .unwrap();
        assert_eq!(e.lhs, 0.0);
        assert_eq!(e.bound, 0.0);
    }
}
