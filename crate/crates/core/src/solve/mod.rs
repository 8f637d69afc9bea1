//! Backward dynamic programming for `v = sup_α v^α` on a space-time lattice.
//!
//! Each time slice is obtained from its successor by
//! `v(t, x) = max_α [e^{−cΔt}(v + Δt L_h^α v)(t + Δt, x) + Δt f^α(t, x)]`
//! at nodes inside `Q`; nodes outside `Q` hold `g`.

mod field;
mod scheme;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{ControlId, ProblemInstance};

pub use field::{FieldMeta, Slice, ValueField};
use scheme::Update;
pub(crate) use scheme::{rates, Neighbors};

/// Which time slices a solve keeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Storage {
    All,
    /// Slices `k` with `k mod stride ∈ {stride − 1, 0, 1, …, after}`: every
    /// anchor keeps its predecessor and `after` successors.
    Anchored {
        stride: usize,
        after: usize,
    },
    /// Anchors with one predecessor and one successor, spaced so that about
    /// `values` numbers are stored.
    Budget {
        values: usize,
    },
}

impl Default for Storage {
    fn default() -> Self {
        Storage::Budget { values: 6_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    pub h: f64,
    /// Explicit time step; derived from the stability bound when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Fraction of the stability bound used when `dt` is derived.
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    /// First time of the lattice; the bottom of the domain when absent.
    #[serde(default)]
    pub t_start: Option<f64>,
    /// Extra grid layers around the bounding box, in units of `h`.
    #[serde(default = "default_pad")]
    pub pad: f64,
    #[serde(default)]
    pub storage: Storage,
}

fn default_safety() -> f64 {
    1.0
}

fn default_pad() -> f64 {
    2.0
}

impl LatticeOptions {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            dt: None,
            cfl_safety: 1.0,
            t_start: None,
            pad: 2.0,
            storage: Storage::default(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn starting_at(mut self, t: f64) -> Self {
        self.t_start = Some(t);
        self
    }

    pub fn with_pad(mut self, pad: f64) -> Self {
        self.pad = pad;
        self
    }

    pub fn with_storage(mut self, storage: Storage) -> Self {
        self.storage = storage;
        self
    }
}

/// Resolved lattice: spatial grid, uniform time grid `t_k = t_start + kΔt`,
/// and the stability bound it was checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub grid: Grid,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub dt: f64,
    /// `1 / max W`, the largest monotone time step.
    pub required_dt: f64,
    pub storage: Storage,
}

impl LatticeSpec {
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt
        }
    }

    /// Builds the lattice for `instance` at control level `level`, checking
    /// or deriving the time step from the stencil rates.
    pub fn build(
        instance: &ProblemInstance,
        opts: &LatticeOptions,
        level: usize,
        eps: f64,
    ) -> Result<Self> {
        if !(opts.h > 0.0) || !opts.h.is_finite() {
            return Err(Error::Config(format!(
                "spatial step must be positive, got {}",
                opts.h
            )));
        }
        let bbox = instance.domain.bbox();
        let grid = Grid::covering(&bbox.lo, &bbox.hi, opts.h, opts.pad.max(1.0) * opts.h);
        let t_start = opts.t_start.unwrap_or(bbox.t0);
        let t_end = bbox.t1;
        if !(t_start < t_end) {
            return Err(Error::Config(format!(
                "time window [{t_start}, {t_end}] is empty"
            )));
        }
        let controls = instance.level(level)?;
        let w_max = max_rate(instance, &grid, controls, eps, t_start, t_end);
        let required_dt = if w_max > 0.0 {
            1.0 / w_max
        } else {
            f64::INFINITY
        };
        let span = t_end - t_start;
        let dt_target = match opts.dt {
            Some(dt) => {
                if !(dt > 0.0) {
                    return Err(Error::Config(format!(
                        "time step must be positive, got {dt}"
                    )));
                }
                if dt > required_dt * (1.0 + 1e-9) {
                    return Err(Error::Cfl {
                        dt,
                        required: required_dt,
                    });
                }
                dt
            }
            None => {
                if required_dt.is_finite() {
                    opts.cfl_safety.clamp(1e-6, 1.0) * required_dt
                } else {
                    opts.h
                }
            }
        };
        let steps = ((span / dt_target) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            grid,
            t_start,
            t_end,
            steps,
            dt: span / steps as f64,
            required_dt,
            storage: opts.storage,
        })
    }

    fn stored(&self, k: usize, nodes: usize) -> bool {
        if k == 0 || k == self.steps {
            return true;
        }
        let (stride, after) = match self.storage {
            Storage::All => return true,
            Storage::Anchored { stride, after } => (stride.max(1), after),
            Storage::Budget { values } => {
                let slices = (values / nodes.max(1)).max(6);
                let anchors = (slices / 3).max(2);
                (self.steps.div_ceil(anchors).max(1), 1)
            }
        };
        if after + 2 >= stride {
            return true;
        }
        let r = k % stride;
        r == stride - 1 || r <= after
    }
}

fn max_rate(
    instance: &ProblemInstance,
    grid: &Grid,
    controls: &[ControlId],
    eps: f64,
    t0: f64,
    t1: f64,
) -> f64 {
    let d = grid.dim();
    let d1 = instance.noise_dim();
    let times: Vec<f64> = if instance.coefficients.time_homogeneous() {
        vec![0.5 * (t0 + t1)]
    } else {
        (0..=8).map(|k| t0 + (t1 - t0) * k as f64 / 8.0).collect()
    };
    let bbox = instance.domain.bbox();
    (0..grid.len())
        .into_par_iter()
        .map(|n| {
            let x = grid.coords(n);
            if !bbox_contains(&bbox.lo, &bbox.hi, &x[..d]) {
                return 0.0;
            }
            let mut w: f64 = 0.0;
            for &t in &times {
                for &a in controls {
                    let s = instance.sample(a, t, &x[..d], eps);
                    w = w.max(rates(&s, d, d1, grid.h).total);
                }
            }
            w
        })
        .reduce(|| 0.0, f64::max)
}

fn bbox_contains(lo: &[f64], hi: &[f64], x: &[f64]) -> bool {
    x.iter()
        .zip(lo.iter().zip(hi))
        .all(|(v, (a, b))| *v >= *a && *v <= *b)
}

/// Packed per-node update tables for time-homogeneous coefficients. Controls
/// whose tables coincide at a node are stored once (the lowest index wins).
struct Tables {
    start: Vec<usize>,
    control: Vec<u16>,
    update: Vec<Update>,
}

const NO_CONTROL: u16 = u16::MAX;

fn build_tables(
    instance: &ProblemInstance,
    grid: &Grid,
    nbrs: &Neighbors,
    controls: &[ControlId],
    candidates: &[bool],
    dt: f64,
    eps: f64,
) -> (Tables, bool) {
    let d = grid.dim();
    let d1 = instance.noise_dim();
    let per_node: Vec<(Vec<(u16, Update)>, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|n| {
            if !candidates[n] {
                return (Vec::new(), true);
            }
            let x = grid.coords(n);
            let mut out: Vec<(u16, Update)> = Vec::with_capacity(controls.len());
            let mut monotone = true;
            for &a in controls {
                let s = instance.sample(a, 0.0, &x[..d], eps);
                let rt = rates(&s, d, d1, grid.h);
                monotone &= rt.monotone && dt * rt.total <= 1.0 + 1e-12;
                let u = Update::new(&s, d, d1, grid.h, dt, nbrs.len());
                let dup = out.iter().any(|(_, o)| {
                    o.q0 == u.q0 && o.r == u.r && o.q[..nbrs.len()] == u.q[..nbrs.len()]
                });
                if !dup {
                    out.push((a.0 as u16, u));
                }
            }
            (out, monotone)
        })
        .collect();
    let mut tables = Tables {
        start: Vec::with_capacity(grid.len() + 1),
        control: Vec::new(),
        update: Vec::new(),
    };
    let mut monotone = true;
    tables.start.push(0);
    for (entries, m) in per_node {
        monotone &= m;
        for (c, u) in entries {
            tables.control.push(c);
            tables.update.push(u);
        }
        tables.start.push(tables.control.len());
    }
    (tables, monotone)
}

/// Dynamic programming solve at control level `level` and perturbation `eps`.
pub fn solve(
    instance: &ProblemInstance,
    lattice: &LatticeSpec,
    level: usize,
    eps: f64,
) -> Result<ValueField> {
    let controls: Vec<ControlId> = instance.level(level)?.to_vec();
    if controls.iter().any(|c| c.0 >= NO_CONTROL as usize) {
        return Err(Error::Config(
            "too many controls for the field encoding".into(),
        ));
    }
    let grid = &lattice.grid;
    let d = grid.dim();
    let d1 = instance.noise_dim();
    let n_nodes = grid.len();
    let nbrs = Neighbors::new(grid);
    let dt = lattice.dt;
    let coords: Vec<Vec<f64>> = (0..n_nodes).map(|n| grid.coords(n)[..d].to_vec()).collect();
    let inner: Vec<bool> = (0..n_nodes).map(|n| grid.is_inner(n)).collect();

    let bbox = instance.domain.bbox();
    let candidates: Vec<bool> = (0..n_nodes)
        .map(|n| inner[n] && bbox_contains(&bbox.lo, &bbox.hi, &coords[n]))
        .collect();
    let homogeneous = instance.coefficients.time_homogeneous();
    let mut monotone = true;
    let tables = if homogeneous {
        let (t, m) = build_tables(instance, grid, &nbrs, &controls, &candidates, dt, eps);
        monotone &= m;
        Some(t)
    } else {
        None
    };

    let mask_at = |t: f64| -> Result<Vec<bool>> {
        let mask: Vec<bool> = coords.iter().map(|x| instance.contains(t, x)).collect();
        if let Some(bad) = (0..n_nodes).find(|&n| mask[n] && !inner[n]) {
            return Err(Error::Config(format!(
                "interior node {:?} lies on the lattice edge; increase the padding",
                coords[bad]
            )));
        }
        Ok(mask)
    };
    let static_mask = if instance.domain.is_cylinder() {
        let b = instance.domain.bbox();
        Some(mask_at(0.5 * (b.t0 + b.t1))?)
    } else {
        None
    };

    let steps = lattice.steps;
    let mut next: Vec<f64> = (0..n_nodes)
        .map(|n| instance.g(lattice.time(steps), &coords[n], eps))
        .collect();
    let mut next_ctrl = vec![NO_CONTROL; n_nodes];
    let mut cur = vec![0.0; n_nodes];
    let mut cur_ctrl = vec![NO_CONTROL; n_nodes];
    let mut slices: Vec<Slice> = Vec::new();
    // the top slice: v = g wherever the domain does not contain it
    {
        let t = lattice.time(steps);
        let mask = mask_inside(&static_mask, instance, t, &coords);
        if mask.iter().any(|&m| m) {
            return Err(Error::Config(
                "the last lattice time must lie outside the domain".into(),
            ));
        }
        slices.push(Slice {
            step: steps,
            t,
            values: next.clone(),
            controls: next_ctrl.clone(),
        });
    }
    let mut any_interior = false;

    for k in (0..steps).rev() {
        let t = lattice.time(k);
        let mask = match static_mask {
            Some(_) => mask_inside(&static_mask, instance, t, &coords),
            None => mask_at(t)?,
        };
        any_interior |= mask.iter().any(|&m| m);
        let keep = lattice.stored(k, n_nodes);
        // with a moving mask every exterior value may be read next step
        let fill_all = keep || static_mask.is_none();
        let next_ref = &next;
        let mask_ref = &mask;
        let tables_ref = tables.as_ref();
        let controls_ref = &controls;
        let nbrs_ref = &nbrs;
        let coords_ref = &coords;
        let step_monotone: bool = cur
            .par_iter_mut()
            .zip(cur_ctrl.par_iter_mut())
            .enumerate()
            .map(|(n, (v, c))| {
                if !mask_ref[n] {
                    // exterior: g is needed at stored slices and next to Q
                    if fill_all || touches(mask_ref, n, nbrs_ref) {
                        *v = instance.g(t, &coords_ref[n], eps);
                    } else {
                        *v = f64::NAN;
                    }
                    *c = NO_CONTROL;
                    return true;
                }
                let mut best = f64::NEG_INFINITY;
                let mut arg = NO_CONTROL;
                let mut ok = true;
                match tables_ref {
                    Some(tb) => {
                        for e in tb.start[n]..tb.start[n + 1] {
                            let val = tb.update[e].apply(next_ref, n, nbrs_ref);
                            if val > best {
                                best = val;
                                arg = tb.control[e];
                            }
                        }
                    }
                    None => {
                        for &a in controls_ref {
                            let s = instance.sample(a, t, &coords_ref[n], eps);
                            let rt = rates(&s, d, d1, grid.h);
                            ok &= rt.monotone && dt * rt.total <= 1.0 + 1e-12;
                            let val = Update::new(&s, d, d1, grid.h, dt, nbrs_ref.len())
                                .apply(next_ref, n, nbrs_ref);
                            if val > best {
                                best = val;
                                arg = a.0 as u16;
                            }
                        }
                    }
                }
                *v = best;
                *c = arg;
                ok
            })
            .reduce(|| true, |a, b| a && b);
        monotone &= step_monotone;
        if let Some(n) = (0..n_nodes).find(|&n| mask[n] && !cur[n].is_finite()) {
            return Err(Error::Numeric {
                step: k,
                what: format!("value {} at node {:?}", cur[n], coords[n]),
            });
        }
        if keep {
            slices.push(Slice {
                step: k,
                t,
                values: cur.clone(),
                controls: cur_ctrl.clone(),
            });
        }
        std::mem::swap(&mut cur, &mut next);
        std::mem::swap(&mut cur_ctrl, &mut next_ctrl);
    }
    if !any_interior {
        return Err(Error::Config(
            "no lattice node lies inside the domain".into(),
        ));
    }
    slices.reverse();

    let mut warnings = Vec::new();
    if !monotone {
        warnings.push(
            "stencil is not monotone somewhere (negative cross weight or dt above the bound)"
                .to_string(),
        );
    }
    let meta = FieldMeta {
        instance: instance.name.clone(),
        scheme: "explicit upwind, seven-point cross splitting, exp(-c dt) discount".into(),
        h: grid.h,
        dt,
        steps,
        cfl_margin: lattice.required_dt / dt,
        monotone,
        warnings,
        level,
        eps,
        controls: controls.len(),
    };
    Ok(ValueField::new(
        instance.clone(),
        lattice.clone(),
        slices,
        meta,
    ))
}

fn mask_inside(
    static_mask: &Option<Vec<bool>>,
    instance: &ProblemInstance,
    t: f64,
    coords: &[Vec<f64>],
) -> Vec<bool> {
    let b = instance.domain.bbox();
    match static_mask {
        Some(m) if t > b.t0 && t < b.t1 => m.clone(),
        Some(m) => vec![false; m.len()],
        None => coords.iter().map(|x| instance.contains(t, x)).collect(),
    }
}

#[inline]
fn touches(mask: &[bool], n: usize, nbrs: &Neighbors) -> bool {
    nbrs.offsets.iter().any(|&off| {
        let m = n as isize + off;
        m >= 0 && (m as usize) < mask.len() && mask[m as usize]
    })
}

/// Solve restricted to cylindrical domains.
pub fn solve_cylinder(
    instance: &ProblemInstance,
    lattice: &LatticeSpec,
    level: usize,
    eps: f64,
) -> Result<ValueField> {
    if !instance.domain.is_cylinder() {
        return Err(Error::Input(format!(
            "'{}' is not a cylinder",
            instance.name
        )));
    }
    solve(instance, lattice, level, eps)
}

/// Solve restricted to general domains.
pub fn solve_general(
    instance: &ProblemInstance,
    lattice: &LatticeSpec,
    level: usize,
    eps: f64,
) -> Result<ValueField> {
    if instance.domain.is_cylinder() {
        return Err(Error::Input(format!("'{}' is a cylinder", instance.name)));
    }
    solve(instance, lattice, level, eps)
}

/// Builds the lattice and solves in one call.
pub fn solve_with(
    instance: &ProblemInstance,
    opts: &LatticeOptions,
    level: usize,
    eps: f64,
) -> Result<ValueField> {
    let lattice = LatticeSpec::build(instance, opts, level, eps)?;
    solve(instance, &lattice, level, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn derived_step_respects_stability() {
        let inst = gallery::smooth_benchmark();
        let lat = LatticeSpec::build(&inst, &LatticeOptions::new(0.05), 1, 0.0).unwrap();
        assert!(lat.dt <= lat.required_dt * (1.0 + 1e-12));
        assert!((lat.time(lat.steps) - lat.t_end).abs() < 1e-9);
    }

    #[test]
    fn every_stored_pair_solves_the_scheme() {
        for name in ["smooth_benchmark", "two_control_annulus", "pure_discount"] {
            let inst = gallery::build(name, &Default::default()).unwrap();
            let f = solve_with(&inst, &LatticeOptions::new(0.1), 1, 0.0).unwrap();
            assert!(f.one_step_residual().unwrap() <= 1e-12, "{name}");
        }
    }

    #[test]
    fn anchored_storage_keeps_neighbours() {
        let inst = gallery::pure_discount();
        let opts = LatticeOptions::new(0.1)
            .with_dt(0.01)
            .with_storage(Storage::Anchored {
                stride: 10,
                after: 2,
            });
        let f = solve_with(&inst, &opts, 1, 0.0).unwrap();
        for s in f.slices() {
            let r = s.step % 10;
            assert!(
                r == 9 || r <= 2 || s.step == f.lattice.steps,
                "step {}",
                s.step
            );
        }
    }

    #[test]
    fn more_controls_never_lower_the_value() {
        let inst = gallery::singular_control(4.0);
        let top = inst.controls.n_levels();
        let dt = LatticeSpec::build(&inst, &LatticeOptions::new(0.05), top, 0.0)
            .unwrap()
            .dt;
        // one lattice for both, so the comparison is between schemes
        let opts = LatticeOptions::new(0.05).with_dt(dt);
        let lo = solve_with(&inst, &opts, 1, 0.0).unwrap();
        let hi = solve_with(&inst, &opts, top, 0.0).unwrap();
        for x in [-0.6, -0.2, 0.0, 0.4, 0.8] {
            assert!(hi.eval(0.0, &[x]).unwrap() >= lo.eval(0.0, &[x]).unwrap() - 1e-12);
        }
    }

    #[test]
    fn nonpositive_step_is_rejected() {
        let inst = gallery::pure_discount();
        assert!(solve_with(&inst, &LatticeOptions::new(0.0), 1, 0.0).is_err());
        assert!(solve_with(&inst, &LatticeOptions::new(0.1), 7, 0.0).is_err());
    }
}
