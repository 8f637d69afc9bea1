//! Monotone explicit stencil: upwind drift, central diagonal second
//! differences, and the seven-point splitting of cross derivatives.

use crate::grid::Grid;
use crate::model::{CoeffSample, ControlId, ProblemInstance, MAX_DIM};

/// Largest neighbor count (three dimensions: 6 axis + 12 diagonal).
pub(crate) const MAX_NEIGHBORS: usize = 2 * MAX_DIM + 4 * 3;

/// Neighbor layout of one grid: `±e_i` first, then for every `i < j` the
/// four diagonals `+e_i+e_j, −e_i−e_j, +e_i−e_j, −e_i+e_j`.
#[derive(Clone, Debug)]
pub(crate) struct Neighbors {
    pub offsets: Vec<isize>,
}

impl Neighbors {
    pub fn new(grid: &Grid) -> Self {
        let d = grid.dim();
        let s = grid.strides();
        let mut offsets = Vec::new();
        for i in 0..d {
            offsets.push(s[i] as isize);
            offsets.push(-(s[i] as isize));
        }
        for i in 0..d {
            for j in i + 1..d {
                let (a, b) = (s[i] as isize, s[j] as isize);
                offsets.extend([a + b, -a - b, a - b, -a + b]);
            }
        }
        Self { offsets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }
}

/// Rates `w_n ≥ 0` (when monotone) such that
/// `L_h v = Σ w_n (v(x + off_n) − v(x))`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rates {
    pub w: [f64; MAX_NEIGHBORS],
    pub total: f64,
    pub monotone: bool,
}

pub(crate) fn rates(sample: &CoeffSample, d: usize, d1: usize, h: f64) -> Rates {
    let a = sample.diffusion(d, d1);
    let h2 = h * h;
    let mut w = [0.0; MAX_NEIGHBORS];
    for i in 0..d {
        let cross: f64 = (0..d).filter(|&j| j != i).map(|j| a[i][j].abs()).sum();
        let diag = (a[i][i] - cross) / h2;
        let b = sample.drift[i];
        w[2 * i] = diag + b.max(0.0) / h;
        w[2 * i + 1] = diag + (-b).max(0.0) / h;
    }
    let mut slot = 2 * d;
    for i in 0..d {
        for j in i + 1..d {
            let c = a[i][j];
            w[slot] = c.max(0.0) / h2;
            w[slot + 1] = c.max(0.0) / h2;
            w[slot + 2] = (-c).max(0.0) / h2;
            w[slot + 3] = (-c).max(0.0) / h2;
            slot += 4;
        }
    }
    let total = w[..slot].iter().sum();
    let monotone = w[..slot].iter().all(|&x| x >= 0.0);
    Rates { w, total, monotone }
}

/// Coefficients of one explicit update `v ↦ q₀ v + Σ q_n v_n + r`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Update {
    pub q0: f64,
    pub q: [f64; MAX_NEIGHBORS],
    pub r: f64,
}

impl Update {
    pub fn new(sample: &CoeffSample, d: usize, d1: usize, h: f64, dt: f64, nb: usize) -> Self {
        let rt = rates(sample, d, d1, h);
        let disc = (-sample.discount * dt).exp();
        let mut q = [0.0; MAX_NEIGHBORS];
        for n in 0..nb {
            q[n] = disc * dt * rt.w[n];
        }
        Update {
            q0: disc * (1.0 - dt * rt.total),
            q,
            r: dt * sample.reward,
        }
    }

    #[inline]
    pub fn apply(&self, v: &[f64], node: usize, nbrs: &Neighbors) -> f64 {
        let mut acc = self.q0 * v[node] + self.r;
        for (q, off) in self.q.iter().zip(&nbrs.offsets) {
            acc += q * v[(node as isize + off) as usize];
        }
        acc
    }
}

/// Direct evaluation of the one-step value of a single control, written
/// independently of the packed update tables; used to re-check fields.
#[allow(clippy::too_many_arguments)]
pub(crate) fn one_step_value(
    instance: &ProblemInstance,
    grid: &Grid,
    nbrs: &Neighbors,
    control: ControlId,
    t: f64,
    node: usize,
    next: &[f64],
    dt: f64,
    eps: f64,
) -> f64 {
    let x = grid.coords(node);
    let d = grid.dim();
    let s = instance.sample(control, t, &x[..d], eps);
    let rt = rates(&s, d, instance.noise_dim(), grid.h);
    let v = next[node];
    let mut lv = 0.0;
    for (w, off) in rt.w.iter().zip(&nbrs.offsets) {
        lv += w * (next[(node as isize + off) as usize] - v);
    }
    (-s.discount * dt).exp() * (v + dt * lv) + dt * s.reward
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_reproduce_second_derivatives_of_quadratics() {
        let grid = Grid::covering(&[-1.0, -1.0], &[1.0, 1.0], 0.1, 0.2);
        let nbrs = Neighbors::new(&grid);
        let mut s = CoeffSample::ZERO.with_drift(&[0.3, -0.2]);
        // a = [[0.45, 0.255], [0.255, 0.365]] is diagonally dominant
        s.sigma[0] = [0.9, 0.3, 0.0];
        s.sigma[1] = [0.3, 0.8, 0.0];
        let a = s.diffusion(2, 2);
        let rt = rates(&s, 2, 2, grid.h);
        assert!(rt.monotone);
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1] + x[0];
        let v: Vec<f64> = (0..grid.len()).map(|n| f(&grid.coords(n)[..2])).collect();
        let node = grid.nearest(&[0.0, 0.0]);
        let mut lv = 0.0;
        for (w, off) in rt.w.iter().zip(&nbrs.offsets) {
            lv += w * (v[(node as isize + off) as usize] - v[node]);
        }
        // second differences are exact on quadratics; the one-sided drift
        // differences pick up 0.3h from x² and 0.2h from −y²
        let exact = 2.0 * a[0][0] + 2.0 * 3.0 * a[0][1] - 2.0 * a[1][1] + 0.3;
        assert!((lv - exact - 0.1 * grid.h).abs() < 1e-9, "{lv} vs {exact}");
    }
}
