use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::scheme::{one_step_value, Neighbors};
use super::{LatticeSpec, NO_CONTROL};
use crate::error::{Error, Result};
use crate::model::{ControlId, ProblemInstance};
use crate::simulate::{FeedbackTable, Policy};

/// One stored time slice: values at every node and the maximizing control
/// index at interior nodes (`u16::MAX` elsewhere).
#[derive(Clone, Debug)]
pub struct Slice {
    pub step: usize,
    pub t: f64,
    pub values: Vec<f64>,
    pub controls: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub instance: String,
    pub scheme: String,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// Ratio of the stability bound to the step used (≥ 1 when monotone).
    pub cfl_margin: f64,
    pub monotone: bool,
    pub warnings: Vec<String>,
    pub level: usize,
    pub eps: f64,
    pub controls: usize,
}

/// Solved value field with interpolation and re-check helpers.
#[derive(Clone)]
pub struct ValueField {
    instance: ProblemInstance,
    pub lattice: LatticeSpec,
    slices: Vec<Slice>,
    pub meta: FieldMeta,
}

impl std::fmt::Debug for ValueField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValueField")
            .field("meta", &self.meta)
            .field("slices", &self.slices.len())
            .finish()
    }
}

impl ValueField {
    pub(crate) fn new(
        instance: ProblemInstance,
        lattice: LatticeSpec,
        slices: Vec<Slice>,
        meta: FieldMeta,
    ) -> Self {
        Self {
            instance,
            lattice,
            slices,
            meta,
        }
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn grid(&self) -> &crate::grid::Grid {
        &self.lattice.grid
    }

    pub fn eps(&self) -> f64 {
        self.meta.eps
    }

    /// Index of the stored slice with time step `k`.
    pub fn slice_at_step(&self, k: usize) -> Option<&Slice> {
        self.slices
            .binary_search_by_key(&k, |s| s.step)
            .ok()
            .map(|i| &self.slices[i])
    }

    /// Latest stored slice at or before `t`.
    fn slice_for(&self, t: f64) -> Result<&Slice> {
        let tol = 1e-9 * self.lattice.dt;
        if t < self.lattice.t_start - tol || t > self.lattice.t_end + tol {
            return Err(Error::Domain(format!(
                "time {t} outside the lattice window [{}, {}]",
                self.lattice.t_start, self.lattice.t_end
            )));
        }
        let i = self.slices.partition_point(|s| s.t <= t + tol);
        Ok(&self.slices[i.saturating_sub(1)])
    }

    /// Value at `(t, x)`: `g` outside `Q`, otherwise multilinear interpolation
    /// in space on the latest stored slice at or before `t`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        let eps = self.meta.eps;
        if !self.instance.contains(t, x) {
            return Ok(self.instance.g(t, x, eps));
        }
        let slice = self.slice_for(t)?;
        self.eval_on(slice, x)
    }

    /// Spatial interpolation on one slice; corners never filled by the
    /// solver are skipped. Exterior corners carry `g` and enter only when a
    /// barrier makes `v` continuous up to the boundary; otherwise interior
    /// corners alone are used whenever the cell has any.
    pub fn eval_on(&self, slice: &Slice, x: &[f64]) -> Result<f64> {
        let cell = self
            .lattice
            .grid
            .cell(x)
            .ok_or_else(|| Error::Domain(format!("point {x:?} outside the lattice box")))?;
        let interior_only = self.instance.barrier.is_none()
            && cell
                .iter()
                .any(|&(n, w)| w > 0.0 && Self::is_interior(slice, n));
        let (mut acc, mut mass) = (0.0, 0.0);
        for &(n, w) in &cell {
            let v = slice.values[n];
            if v.is_finite() && (!interior_only || Self::is_interior(slice, n)) {
                acc += w * v;
                mass += w;
            }
        }
        if mass > 0.0 {
            Ok(acc / mass)
        } else {
            Err(Error::Domain(format!("no stored value near {x:?}")))
        }
    }

    /// Stored value and control at a node of the slice with step `k`.
    pub fn node(&self, k: usize, node: usize) -> Option<(f64, Option<ControlId>)> {
        let s = self.slice_at_step(k)?;
        let c = s.controls[node];
        Some((
            s.values[node],
            (c != NO_CONTROL).then_some(ControlId(c as usize)),
        ))
    }

    pub fn is_interior(slice: &Slice, node: usize) -> bool {
        slice.controls[node] != NO_CONTROL
    }

    /// Largest `|v_k − max_α T^α v_{k+1}|` over interior nodes of every
    /// stored pair of consecutive slices, with the one-step operator
    /// re-evaluated from the coefficients.
    pub fn one_step_residual(&self) -> Result<f64> {
        let grid = &self.lattice.grid;
        let nbrs = Neighbors::new(grid);
        let controls = self.instance.level(self.meta.level)?;
        let mut worst: f64 = 0.0;
        let mut pairs = 0;
        for w in self.slices.windows(2) {
            let (cur, next) = (&w[0], &w[1]);
            if next.step != cur.step + 1 {
                continue;
            }
            pairs += 1;
            for n in 0..grid.len() {
                if cur.controls[n] == NO_CONTROL {
                    continue;
                }
                let best = controls
                    .iter()
                    .map(|&a| {
                        one_step_value(
                            &self.instance,
                            grid,
                            &nbrs,
                            a,
                            cur.t,
                            n,
                            &next.values,
                            self.lattice.dt,
                            self.meta.eps,
                        )
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max((best - cur.values[n]).abs());
            }
        }
        if pairs == 0 {
            return Err(Error::Precondition(
                "no consecutive stored slices to re-check".into(),
            ));
        }
        Ok(worst)
    }

    /// Feedback policy from the stored argmax controls (ties already resolved
    /// to the lowest index by the solver).
    pub fn extract_policy(&self) -> Policy {
        let fallback = self
            .instance
            .level(self.meta.level)
            .ok()
            .and_then(|l| l.first().copied())
            .unwrap_or(ControlId(0));
        Policy::Feedback(Arc::new(FeedbackTable::new(
            self.lattice.grid.clone(),
            self.slices.iter().map(|s| s.t).collect(),
            self.slices.iter().map(|s| s.controls.clone()).collect(),
            fallback,
        )))
    }

    /// Writes `t, x1.., value, control` rows for every stored slice.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let d = self.lattice.grid.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.push("value".into());
        header.push("control".into());
        w.write_record(&header)?;
        for s in &self.slices {
            for n in 0..self.lattice.grid.len() {
                let x = self.lattice.grid.coords(n);
                let mut row = vec![format!("{:.12e}", s.t)];
                row.extend(x[..d].iter().map(|v| format!("{v:.12e}")));
                row.push(format!("{:.15e}", s.values[n]));
                row.push(if s.controls[n] == NO_CONTROL {
                    String::new()
                } else {
                    s.controls[n].to_string()
                });
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_meta(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a> {
            meta: &'a FieldMeta,
            lattice: &'a LatticeSpec,
        }
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(
            &mut f,
            &Doc {
                meta: &self.meta,
                lattice: &self.lattice,
            },
        )?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use crate::gallery;
    use crate::solve::{solve_with, LatticeOptions, Storage};

    #[test]
    fn exterior_points_return_boundary_data() {
        let inst = gallery::brownian_annulus();
        let f = solve_with(&inst, &LatticeOptions::new(0.1), 1, 0.0).unwrap();
        assert_eq!(f.eval(0.0, &[0.2, 0.1]).unwrap(), 0.0);
        assert!(f.eval(0.0, &[1.5, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn interpolation_reproduces_node_values() {
        let inst = gallery::smooth_benchmark();
        let f = solve_with(
            &inst,
            &LatticeOptions::new(0.05).with_storage(Storage::All),
            1,
            0.0,
        )
        .unwrap();
        let s = &f.slices()[f.slices().len() / 2];
        for n in (0..s.values.len()).filter(|&n| crate::solve::ValueField::is_interior(s, n)) {
            let x = f.grid().coords(n);
            assert!((f.eval_on(s, &x[..1]).unwrap() - s.values[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn policy_reads_the_argmax_control() {
        let inst = gallery::two_control_annulus();
        let f = solve_with(&inst, &LatticeOptions::new(0.1), 1, 0.0).unwrap();
        let p = f.extract_policy();
        let used = p.controls();
        assert!(used.iter().all(|c| inst.controls.contains(*c)));
    }
}
