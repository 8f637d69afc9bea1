use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundaryData, ProblemInstance};
use crate::solve::{solve_with, LatticeOptions, ValueField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    /// `max (|v − g₁| − K₁ψ)` over interior nodes of stored slices (≤ 0 when
    /// the band holds everywhere).
    pub max_violation: f64,
    pub k1: f64,
    pub nodes: usize,
}

/// Checks `|v − g₁| ≤ K₁ψ` at every stored interior node; `k1` overrides the
/// declared constant.
pub fn band_check(field: &ValueField, k1: Option<f64>) -> Result<BandReport> {
    let instance = field.instance();
    let barrier = instance.barrier()?;
    let k1 = k1.unwrap_or(instance.regularity.k1);
    if !(k1 >= 0.0) {
        return Err(Error::Capability("no usable K1 declared".into()));
    }
    let grid = field.grid();
    let d = grid.dim();
    let eps = field.eps();
    let mut worst = f64::NEG_INFINITY;
    let mut nodes = 0;
    for slice in field.slices() {
        for n in 0..grid.len() {
            if !ValueField::is_interior(slice, n) {
                continue;
            }
            let x = &grid.coords(n)[..d];
            let g1 = instance.boundary.lateral(slice.t, x, eps);
            let gap = (slice.values[n] - g1).abs() - k1 * barrier.value(slice.t, x);
            worst = worst.max(gap);
            nodes += 1;
        }
    }
    if nodes == 0 {
        return Err(Error::Precondition(
            "field has no stored interior nodes".into(),
        ));
    }
    Ok(BandReport {
        max_violation: worst,
        k1,
        nodes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    /// Largest node-wise decrease `v[g_n] − v[g_{n+1}]` (≤ 0 when monotone).
    pub max_decrease: f64,
    /// `max (v[g] − v[g_n])` per sequence element.
    pub gaps: Vec<f64>,
    /// Largest `v[g_n] − v[g]` (≤ 0 when the limit dominates).
    pub max_overshoot: f64,
}

/// Solves with each boundary datum of a nondecreasing sequence and with its
/// limit, and reports monotonicity and the remaining gaps at common nodes.
pub fn monotone_g_check(
    instance: &ProblemInstance,
    sequence: &[BoundaryData],
    limit: &BoundaryData,
    opts: &LatticeOptions,
    probes: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    if sequence.is_empty() {
        return Err(Error::Input("empty boundary sequence".into()));
    }
    // sampled check that the data really increase towards the limit
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = instance.domain.bbox();
    for _ in 0..probes {
        let t = rng.random_range(b.t0..=b.t1);
        let x: Vec<f64> =
            b.lo.iter()
                .zip(&b.hi)
                .map(|(&l, &h)| rng.random_range(l..=h))
                .collect();
        let mut prev = f64::NEG_INFINITY;
        for (k, g) in sequence.iter().chain(std::iter::once(limit)).enumerate() {
            let v = g.g(t, &x, 0.0);
            if v < prev - 1e-12 {
                return Err(Error::Input(format!(
                    "boundary sequence decreases at element {k}, point ({t}, {x:?})"
                )));
            }
            prev = v;
        }
    }
    let solve_for =
        |g: &BoundaryData| solve_with(&instance.clone().with_boundary(g.clone()), opts, 1, 0.0);
    let top = solve_for(limit)?;
    let mut prev: Option<ValueField> = None;
    let mut max_decrease = f64::NEG_INFINITY;
    let mut max_overshoot = f64::NEG_INFINITY;
    let mut gaps = Vec::with_capacity(sequence.len());
    for g in sequence {
        let f = solve_for(g)?;
        let mut gap = f64::NEG_INFINITY;
        for (s, st) in f.slices().iter().zip(top.slices()) {
            for n in 0..s.values.len() {
                if !ValueField::is_interior(s, n) {
                    continue;
                }
                gap = gap.max(st.values[n] - s.values[n]);
                max_overshoot = max_overshoot.max(s.values[n] - st.values[n]);
            }
        }
        if let Some(p) = &prev {
            for (s, sp) in f.slices().iter().zip(p.slices()) {
                for n in 0..s.values.len() {
                    if ValueField::is_interior(s, n) {
                        max_decrease = max_decrease.max(sp.values[n] - s.values[n]);
                    }
                }
            }
        }
        gaps.push(gap);
        prev = Some(f);
    }
    Ok(MonotoneReport {
        max_decrease: if sequence.len() > 1 {
            max_decrease
        } else {
            0.0
        },
        gaps,
        max_overshoot,
    })
}
