use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mollify, solve_shaken, ShakingConfig, SmoothMajorant};
use crate::error::{Error, Result};
use crate::model::{apply_generator, Jet, ProblemInstance};
use crate::solve::{LatticeOptions, ValueField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `max |u^δ − v|` over anchor nodes.
    pub sup_diff: f64,
    /// Largest central first difference in `x`.
    pub max_grad: f64,
    /// Largest central second difference in `x` (mixed ones included).
    pub max_second: f64,
    /// Largest time difference.
    pub max_dt: f64,
    pub nodes: usize,
}

/// Distances and difference quotients of `u^δ` against `v` on `H(δ)`.
pub fn check_bounds(u: &SmoothMajorant, v: &ValueField) -> Result<BoundsReport> {
    if !u.grid.same_geometry(v.grid()) {
        return Err(Error::Input("u and v live on different lattices".into()));
    }
    let d = u.grid.dim();
    let mut r = BoundsReport {
        sup_diff: 0.0,
        max_grad: 0.0,
        max_second: 0.0,
        max_dt: 0.0,
        nodes: 0,
    };
    for (a, anchor) in u.anchors.iter().enumerate() {
        let vs = v
            .slice_at_step(anchor.step)
            .ok_or_else(|| Error::Input(format!("v does not store step {}", anchor.step)))?;
        for n in 0..u.grid.len() {
            if !u.complete[n] {
                continue;
            }
            r.sup_diff = r.sup_diff.max((anchor.values[n] - vs.values[n]).abs());
            r.nodes += 1;
            if !u.differentiable(n) {
                continue;
            }
            let g = u.gradient(a, n);
            let hs = u.hessian(a, n);
            for i in 0..d {
                r.max_grad = r.max_grad.max(g[i].abs());
                for j in 0..d {
                    r.max_second = r.max_second.max(hs[i][j].abs());
                }
            }
            r.max_dt = r.max_dt.max(u.time_derivative(a, n).abs());
        }
    }
    Ok(r)
}

/// `max (D_t u^δ + L^α u^δ + f^α)` over nodes of `Q(δ)` and the top-level
/// controls of the unshaken instance.
pub fn check_supersolution(
    u: &SmoothMajorant,
    instance: &ProblemInstance,
    config: &ShakingConfig,
) -> Result<f64> {
    let region = instance
        .domain
        .region()
        .ok_or_else(|| Error::Capability("the domain has no explicit region to shrink".into()))?;
    let d = u.grid.dim();
    let d1 = instance.noise_dim();
    let delta = config.delta;
    let b = instance.domain.bbox();
    let t_hi = b.t1 - delta * delta;
    let controls = instance.controls.top();
    let mut worst = f64::NEG_INFINITY;
    let mut nodes = 0;
    for (a, anchor) in u.anchors.iter().enumerate() {
        let t = anchor.t;
        if !(t > 0.0 && t < t_hi && t > b.t0) {
            continue;
        }
        for n in 0..u.grid.len() {
            let x = u.grid.coords(n);
            let x = &x[..d];
            if region.gauge(x) <= delta || !u.differentiable(n) {
                continue;
            }
            nodes += 1;
            let mut jet = Jet::constant(anchor.values[n]);
            jet.dt = u.time_derivative(a, n);
            jet.grad = u.gradient(a, n);
            jet.hess = u.hessian(a, n);
            for &c in controls {
                let s = instance.sample(c, t, x, 0.0);
                worst = worst.max(apply_generator(&s, d, d1, &jet) + s.reward);
            }
        }
    }
    if nodes == 0 {
        return Err(Error::Precondition(
            "Q(delta) contains no lattice node".into(),
        ));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub sup_diff: f64,
    pub max_grad: f64,
    pub max_second: f64,
    pub max_dt: f64,
    pub max_residual: f64,
}

/// Shakes, mollifies and checks at every `δ` of the sweep.
pub fn shake_sweep(
    instance: &ProblemInstance,
    deltas: &[f64],
    opts: &LatticeOptions,
    anchors: usize,
) -> Result<Vec<SweepRow>> {
    if deltas.is_empty() {
        return Err(Error::Config("empty delta sweep".into()));
    }
    deltas
        .iter()
        .map(|&delta| {
            let cfg = ShakingConfig::new(delta)?;
            let (v, vd) = solve_shaken(instance, &cfg, opts, anchors)?;
            let u = mollify(&vd, &cfg)?;
            let b = check_bounds(&u, &v)?;
            let res = check_supersolution(&u, instance, &cfg)?;
            Ok(SweepRow {
                delta,
                sup_diff: b.sup_diff,
                max_grad: b.max_grad,
                max_second: b.max_second,
                max_dt: b.max_dt,
                max_residual: res,
            })
        })
        .collect()
}

/// `delta, sup_abs_u_minus_v, max_grad_x, max_second_x, max_dt, max_residual`.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "delta",
        "sup_abs_u_minus_v",
        "max_grad_x",
        "max_second_x",
        "max_dt",
        "max_residual",
    ])?;
    for r in rows {
        w.write_record(
            [
                r.delta,
                r.sup_diff,
                r.max_grad,
                r.max_second,
                r.max_dt,
                r.max_residual,
            ]
            .map(|v| format!("{v:.12e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}
