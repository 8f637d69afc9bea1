use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::ShakingConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::MAX_DIM;
use crate::solve::ValueField;

/// Discrete kernel: weights on the slices `k + j` (`j ≥ 1`) and on lattice
/// offsets inside the ball of radius `δ`; each family sums to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kernel {
    pub delta: f64,
    pub q: u32,
    pub dt: f64,
    pub h: f64,
    /// `(j, weight)` for the slice at `t + jΔt`.
    pub time: Vec<(usize, f64)>,
    /// `(multi-offset, weight)` in lattice units.
    pub space: Vec<(Vec<i64>, f64)>,
}

impl Kernel {
    pub fn new(config: &ShakingConfig, dt: f64, h: f64, d: usize) -> Self {
        let (delta, q) = (config.delta, config.q as i32);
        let width = delta * delta;
        let mut time: Vec<(usize, f64)> = (1..)
            .map(|j| (j, -(j as f64) * dt / width))
            .take_while(|(_, r)| *r > -1.0)
            .map(|(j, r)| (j, ((-r) * (1.0 + r)).powi(q)))
            .filter(|(_, w)| *w > 0.0)
            .collect();
        if time.is_empty() {
            // no slice strictly inside the window: use the next one
            time.push((1, 1.0));
        }
        let reach = (delta / h).ceil() as i64;
        let mut space = Vec::new();
        let mut idx = vec![-reach; d];
        loop {
            let r2: f64 =
                idx.iter().map(|&i| (i as f64 * h).powi(2)).sum::<f64>() / (delta * delta);
            if r2 < 1.0 {
                space.push((idx.clone(), (1.0 - r2).powi(q)));
            }
            // odometer over the cube of offsets
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] <= reach {
                    break;
                }
                idx[k] = -reach;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        let normalize = |w: &mut [f64]| {
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        };
        let mut tw: Vec<f64> = time.iter().map(|p| p.1).collect();
        normalize(&mut tw);
        time.iter_mut().zip(tw).for_each(|(p, w)| p.1 = w);
        let mut sw: Vec<f64> = space.iter().map(|p| p.1).collect();
        normalize(&mut sw);
        space.iter_mut().zip(sw).for_each(|(p, w)| p.1 = w);
        Self {
            delta,
            q: config.q,
            dt,
            h,
            time,
            space,
        }
    }

    /// Largest slice offset the kernel reads.
    pub fn reach_steps(&self) -> usize {
        self.time.iter().map(|p| p.0).max().unwrap_or(1)
    }

    /// Largest spatial offset per axis, in lattice units.
    pub fn reach_nodes(&self) -> i64 {
        self.space
            .iter()
            .flat_map(|(o, _)| o.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// `u^δ` at anchor times, with `u^δ` one step before and after each anchor
/// for the time derivative.
#[derive(Clone, Debug)]
pub struct SmoothMajorant {
    pub grid: Grid,
    pub kernel: Kernel,
    pub anchors: Vec<Anchor>,
    /// Nodes whose whole kernel support lies in the lattice box.
    pub complete: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct Anchor {
    pub step: usize,
    pub t: f64,
    pub values: Vec<f64>,
    pub before: Option<Vec<f64>>,
    pub after: Vec<f64>,
}

/// Averages `v^δ` over the kernel at every anchor step `k` of `field` that
/// keeps slices `k + 1 ..= k + m + 1` (and `k − 1` when available) and has
/// `t_k ≤ T − δ²`.
pub fn mollify(field: &ValueField, config: &ShakingConfig) -> Result<SmoothMajorant> {
    config.validate()?;
    let grid = field.grid().clone();
    let d = grid.dim();
    let lattice = &field.lattice;
    let kernel = Kernel::new(config, lattice.dt, grid.h, d);
    let m = kernel.reach_steps();
    let top = lattice.t_end - config.delta * config.delta;
    let stored = |k: usize| field.slice_at_step(k).is_some();
    let steps: Vec<usize> = field
        .slices()
        .iter()
        .map(|s| s.step)
        .filter(|&k| lattice.time(k) <= top + 1e-12 && (k..=k + m + 1).all(stored))
        .collect();
    if steps.is_empty() {
        return Err(Error::Domain(format!(
            "kernel support of {m} steps exceeds the stored temporal extent of the field"
        )));
    }
    let reach = kernel.reach_nodes() as usize + 1;
    let complete: Vec<bool> = (0..grid.len())
        .map(|n| {
            let mi = grid.multi_index(n);
            (0..d).all(|i| mi[i] >= reach && mi[i] + reach < grid.counts[i])
        })
        .collect();
    let strides = grid.strides();
    let flat: Vec<(isize, f64)> = kernel
        .space
        .iter()
        .map(|(o, w)| {
            let off: isize = o
                .iter()
                .zip(&strides)
                .map(|(&a, &s)| a as isize * s as isize)
                .sum();
            (off, *w)
        })
        .collect();
    let at = |k: usize| -> Vec<f64> {
        // time average, then spatial average
        let mut avg = vec![0.0; grid.len()];
        for &(j, w) in &kernel.time {
            let s = field.slice_at_step(k + j).expect("checked above");
            avg.iter_mut().zip(&s.values).for_each(|(a, v)| *a += w * v);
        }
        (0..grid.len())
            .into_par_iter()
            .map(|n| {
                if !complete[n] {
                    return f64::NAN;
                }
                flat.iter()
                    .map(|&(off, w)| w * avg[(n as isize + off) as usize])
                    .sum()
            })
            .collect()
    };
    let anchors = steps
        .iter()
        .map(|&k| Anchor {
            step: k,
            t: lattice.time(k),
            values: at(k),
            before: (k >= 1 && stored(k - 1)).then(|| at(k - 1)),
            after: at(k + 1),
        })
        .collect();
    Ok(SmoothMajorant {
        grid,
        kernel,
        anchors,
        complete,
    })
}

impl SmoothMajorant {
    pub fn dt(&self) -> f64 {
        self.kernel.dt
    }

    /// True when `n` and its axis and diagonal neighbours carry values.
    pub fn differentiable(&self, n: usize) -> bool {
        let d = self.grid.dim();
        let mi = self.grid.multi_index(n);
        (0..d).all(|i| mi[i] >= 1 && mi[i] + 1 < self.grid.counts[i])
            && self.stencil(n).iter().all(|&m| self.complete[m])
    }

    fn stencil(&self, n: usize) -> Vec<usize> {
        let d = self.grid.dim();
        let s = self.grid.strides();
        let mut out = vec![n];
        for i in 0..d {
            out.push(n + s[i]);
            out.push(n - s[i]);
            for j in (i + 1)..d {
                out.extend([
                    n + s[i] + s[j],
                    n + s[i] - s[j],
                    n - s[i] + s[j],
                    n - s[i] - s[j],
                ]);
            }
        }
        out
    }

    /// Central first differences in `x`.
    pub fn gradient(&self, a: usize, n: usize) -> [f64; MAX_DIM] {
        let u = &self.anchors[a].values;
        let s = self.grid.strides();
        let h = self.grid.h;
        let mut g = [0.0; MAX_DIM];
        for i in 0..self.grid.dim() {
            g[i] = (u[n + s[i]] - u[n - s[i]]) / (2.0 * h);
        }
        g
    }

    /// Central second differences in `x`.
    pub fn hessian(&self, a: usize, n: usize) -> [[f64; MAX_DIM]; MAX_DIM] {
        let u = &self.anchors[a].values;
        let s = self.grid.strides();
        let h2 = self.grid.h * self.grid.h;
        let d = self.grid.dim();
        let mut hs = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..d {
            hs[i][i] = (u[n + s[i]] - 2.0 * u[n] + u[n - s[i]]) / h2;
            for j in (i + 1)..d {
                let v = (u[n + s[i] + s[j]] - u[n + s[i] - s[j]] - u[n - s[i] + s[j]]
                    + u[n - s[i] - s[j]])
                    / (4.0 * h2);
                hs[i][j] = v;
                hs[j][i] = v;
            }
        }
        hs
    }

    /// Central time difference (forward at anchors without a predecessor).
    pub fn time_derivative(&self, a: usize, n: usize) -> f64 {
        let an = &self.anchors[a];
        let dt = self.dt();
        match &an.before {
            Some(b) => (an.after[n] - b[n]) / (2.0 * dt),
            None => (an.after[n] - an.values[n]) / dt,
        }
    }
}

/// Writes the kernel weights as `kind, offset, weight` rows.
pub fn write_kernel_csv(path: &Path, kernel: &Kernel) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "kind,offset,weight")?;
    for (j, w) in &kernel.time {
        writeln!(f, "time,{},{:.17e}", *j as f64 * kernel.dt, w)?;
    }
    for (o, w) in &kernel.space {
        let off: Vec<String> = o
            .iter()
            .map(|v| format!("{:.12e}", *v as f64 * kernel.h))
            .collect();
        writeln!(f, "space,{},{:.17e}", off.join(" "), w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        BoundaryData, CoeffSample, ControlSpace, DomainSpec, FnCoefficients, ProblemInstance,
        Region,
    };
    use crate::solve::{solve_with, LatticeOptions, Storage};

    /// Frozen state, no reward: `v(t, x) = g(x)` everywhere.
    fn frozen(slope: f64, offset: f64) -> ProblemInstance {
        let coeffs = FnCoefficients::constant_table(1, 1, vec![CoeffSample::ZERO]);
        ProblemInstance::new(
            "frozen",
            ControlSpace::flat(["rest"]),
            coeffs,
            DomainSpec::cylinder(1.0, Region::cube(1, 1.0)),
            BoundaryData::cylindrical(
                1.0,
                move |_, x, _| slope * x[0] + offset,
                move |x, _| slope * x[0] + offset,
            ),
        )
        .unwrap()
    }

    fn majorant(slope: f64, offset: f64, delta: f64) -> SmoothMajorant {
        let cfg = ShakingConfig::new(delta).unwrap();
        let opts = LatticeOptions::new(0.05)
            .with_dt(0.01)
            .starting_at(0.0)
            .with_storage(Storage::Anchored {
                stride: 20,
                after: 8,
            });
        let field = solve_with(&frozen(slope, offset), &opts, 1, 0.0).unwrap();
        mollify(&field, &cfg).unwrap()
    }

    #[test]
    fn kernel_weights_have_unit_mass() {
        for (delta, dt, h, d) in [
            (0.2, 1e-3, 0.05, 1),
            (0.1, 0.02, 0.025, 2),
            (0.05, 1e-2, 0.05, 3),
        ] {
            let k = Kernel::new(&ShakingConfig::new(delta).unwrap(), dt, h, d);
            let t: f64 = k.time.iter().map(|p| p.1).sum();
            let s: f64 = k.space.iter().map(|p| p.1).sum();
            assert!((t - 1.0).abs() < 1e-14 && (s - 1.0).abs() < 1e-14);
            assert!(k.time.iter().all(|&(j, _)| j >= 1));
        }
    }

    #[test]
    fn coarse_time_step_falls_back_to_next_slice() {
        let k = Kernel::new(&ShakingConfig::new(0.05).unwrap(), 0.01, 0.05, 1);
        assert_eq!(k.time, vec![(1, 1.0)]);
        // δ = h: only the centre lies strictly inside the ball
        assert_eq!(k.space.len(), 1);
    }

    #[test]
    fn constants_are_preserved() {
        let u = majorant(0.0, 0.7, 0.2);
        for a in &u.anchors {
            for (n, v) in a.values.iter().enumerate() {
                if u.complete[n] {
                    assert!((v - 0.7).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn affine_data_keep_their_slope() {
        let u = majorant(2.0, 1.0, 0.2);
        let mut seen = 0;
        for a in 0..u.anchors.len() {
            for n in 0..u.grid.len() {
                if u.differentiable(n) {
                    let x = u.grid.coords(n)[0];
                    assert!((u.anchors[a].values[n] - (2.0 * x + 1.0)).abs() < 1e-12);
                    assert!((u.gradient(a, n)[0] - 2.0).abs() < 1e-10);
                    assert!(u.hessian(a, n)[0][0].abs() < 1e-8);
                    assert!(u.time_derivative(a, n).abs() < 1e-10);
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }
}
