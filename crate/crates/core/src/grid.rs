//! Uniform spatial lattice geometry shared by the solver, feedback policies
//! and the mollifier.

use serde::{Deserialize, Serialize};

use crate::model::MAX_DIM;

/// Axis-aligned uniform grid with spacing `h`; node `i` along axis `k` sits at
/// `origin[k] + i * h`. Nodes are stored with the first axis varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub h: f64,
    pub counts: Vec<usize>,
}

impl Grid {
    /// Grid covering `[lo, hi]` padded by `pad` on every side, with node
    /// coordinates that are integer multiples of `h`.
    pub fn covering(lo: &[f64], hi: &[f64], h: f64, pad: f64) -> Self {
        let origin: Vec<f64> = lo.iter().map(|&l| ((l - pad) / h).floor() * h).collect();
        let counts = origin
            .iter()
            .zip(hi)
            .map(|(&o, &u)| (((u + pad - o) / h).ceil() as usize) + 1)
            .collect();
        Self { origin, h, counts }
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat-index stride of each axis.
    pub fn strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0usize; MAX_DIM];
        let d = self.dim();
        let mut acc = 1;
        for k in (0..d).rev() {
            s[k] = acc;
            acc *= self.counts[k];
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.counts[k];
            flat /= self.counts[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Coordinates of node `flat`, written into the first `dim` slots.
    pub fn coords(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            x[k] = self.origin[k] + idx[k] as f64 * self.h;
        }
        x
    }

    /// True when every axis index is at least one node away from the edge.
    pub fn is_inner(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim()).all(|k| idx[k] > 0 && idx[k] + 1 < self.counts[k])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|k| {
            let lo = self.origin[k];
            let hi = lo + (self.counts[k] - 1) as f64 * self.h;
            x[k] >= lo - 1e-12 && x[k] <= hi + 1e-12
        })
    }

    /// Nearest node, clamped to the grid.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut idx = [0usize; MAX_DIM];
        for k in 0..self.dim() {
            let u = ((x[k] - self.origin[k]) / self.h).round();
            idx[k] = u.clamp(0.0, (self.counts[k] - 1) as f64) as usize;
        }
        self.flat_index(&idx[..self.dim()])
    }

    /// Corners of the cell containing `x` with their multilinear weights.
    /// Returns `None` when `x` lies outside the grid.
    pub fn cell(&self, x: &[f64]) -> Option<Vec<(usize, f64)>> {
        if !self.contains(x) {
            return None;
        }
        let d = self.dim();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for k in 0..d {
            let u = ((x[k] - self.origin[k]) / self.h).max(0.0);
            let last = self.counts[k] - 1;
            let mut i = u.floor() as usize;
            let mut f = u - i as f64;
            if i >= last {
                i = last.saturating_sub(1);
                f = if last == 0 { 0.0 } else { u - i as f64 };
            }
            // snap round-off so that node points are reproduced exactly
            if f < 1e-9 {
                f = 0.0;
            } else if f > 1.0 - 1e-9 {
                f = 1.0;
            }
            base[k] = i;
            frac[k] = f.min(1.0);
        }
        let mut out = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut idx = [0usize; MAX_DIM];
            let mut w = 1.0;
            for k in 0..d {
                let up = (corner >> k) & 1 == 1;
                if up && self.counts[k] == 1 {
                    w = 0.0;
                    break;
                }
                idx[k] = base[k] + usize::from(up);
                w *= if up { frac[k] } else { 1.0 - frac[k] };
            }
            if w > 0.0 {
                out.push((self.flat_index(&idx[..d]), w));
            }
        }
        Some(out)
    }

    pub fn same_geometry(&self, other: &Grid) -> bool {
        self.counts == other.counts
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_aligns_nodes_to_multiples_of_h() {
        let g = Grid::covering(&[-2.0, -2.0], &[2.0, 2.0], 0.5, 0.5);
        assert_eq!(g.origin, vec![-2.5, -2.5]);
        assert_eq!(g.counts, vec![11, 11]);
        let flat = g.nearest(&[0.0, 1.5]);
        let x = g.coords(flat);
        assert_eq!(&x[..2], &[0.0, 1.5]);
    }

    #[test]
    fn flat_and_multi_index_round_trip() {
        let g = Grid {
            origin: vec![0.0, 0.0, 0.0],
            h: 1.0,
            counts: vec![3, 4, 5],
        };
        for flat in 0..g.len() {
            let idx = g.multi_index(flat);
            assert_eq!(g.flat_index(&idx[..3]), flat);
        }
        assert_eq!(g.strides()[..3], [20, 5, 1]);
    }

    #[test]
    fn cell_weights_sum_to_one_and_hit_nodes_exactly() {
        let g = Grid::covering(&[0.0, 0.0], &[1.0, 1.0], 0.25, 0.0);
        let c = g.cell(&[0.3, 0.6]).unwrap();
        let s: f64 = c.iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let at_node = g.cell(&[0.5, 0.75]).unwrap();
        assert_eq!(at_node.len(), 1);
        assert_eq!(at_node[0].1, 1.0);
        assert!(g.cell(&[1.5, 0.0]).is_none());
    }
}
