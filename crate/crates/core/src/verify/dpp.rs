use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{ProblemInstance, Region};
use crate::simulate::{run_until, FeedbackTable, PathConfig, Policy};
use crate::solve::ValueField;

/// Bounded stopping time `γ ≤ τ` for the right side of Bellman's principle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StoppingRule {
    /// `γ = s ∧ τ`.
    FixedHorizon { s: f64 },
    /// First exit from `region` (or from `Q`, whichever comes first).
    SubdomainExit { region: Region },
}

impl StoppingRule {
    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            StoppingRule::FixedHorizon { s } if !(*s >= 0.0) || !s.is_finite() => Err(
                Error::Input(format!("horizon must be finite and nonnegative, got {s}")),
            ),
            StoppingRule::SubdomainExit { region } if region.dim() != dim => Err(Error::Input(
                format!("subdomain has dimension {}, expected {dim}", region.dim()),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DppReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub se: f64,
    pub n: usize,
}

/// `E[∫₀^γ f e^{−φ} ds + v(t + γ, x_γ) e^{−φ_γ}]` under `policy`, with the
/// continuation value read from `field`.
pub fn dpp_rhs(
    field: &ValueField,
    policy: &Policy,
    t: f64,
    x: &[f64],
    rule: &StoppingRule,
    config: &PathConfig,
) -> Result<(f64, f64)> {
    let instance = field.instance();
    rule.validate(instance.dim())?;
    config.validate(instance)?;
    if config.n_paths < 2 {
        return Err(Error::Config("at least two paths are required".into()));
    }
    let eps = field.eps();
    let d = instance.dim();
    let (horizon, region) = match rule {
        StoppingRule::FixedHorizon { s } => (*s, None),
        StoppingRule::SubdomainExit { region } => (f64::INFINITY, Some(region)),
    };
    let keep = |_: f64, y: &[f64]| region.is_none_or(|r| r.contains(y));
    let samples: Vec<f64> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|id| {
            let (w, _) = run_until(instance, policy, t, x, eps, config, id, horizon, &keep)?;
            Ok(w.running + w.disc * field.eval(w.t, &w.x[..d])?)
        })
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Compares `v(t, x)` with the Monte Carlo right side under the policy read
/// off the field's argmax controls.
pub fn dpp_residual(
    field: &ValueField,
    t: f64,
    x: &[f64],
    rule: &StoppingRule,
    config: &PathConfig,
) -> Result<DppReport> {
    if !field.instance().contains(t, x) {
        return Err(Error::Input(format!("start ({t}, {x:?}) is not interior")));
    }
    let lhs = field.eval(t, x)?;
    let (rhs, se) = dpp_rhs(field, &field.extract_policy(), t, x, rule, config)?;
    Ok(DppReport {
        lhs,
        rhs,
        residual: lhs - rhs,
        se,
        n: config.n_paths,
    })
}

/// Piecewise-constant feedback policy with an independent uniformly drawn
/// control per cell of a coarse grid over the bounding box.
pub fn random_policy(
    instance: &ProblemInstance,
    level: usize,
    cell: f64,
    seed: u64,
) -> Result<Policy> {
    let controls = instance.level(level)?;
    let b = instance.domain.bbox();
    let grid = Grid::covering(&b.lo, &b.hi, cell, cell);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table: Vec<u16> = (0..grid.len())
        .map(|_| controls[rng.random_range(0..controls.len())].0 as u16)
        .collect();
    Ok(Policy::Feedback(Arc::new(FeedbackTable::new(
        grid,
        vec![b.t0],
        vec![table],
        controls[0],
    ))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::solve::{solve_with, LatticeOptions};

    #[test]
    fn motionless_state_satisfies_the_principle() {
        let inst = gallery::pure_discount();
        let f = solve_with(&inst, &LatticeOptions::new(0.1).with_dt(1e-3), 1, 0.0).unwrap();
        let cfg = PathConfig::for_instance(&inst, 1e-3, 4, 0);
        let r = dpp_residual(
            &f,
            0.0,
            &[0.2],
            &StoppingRule::FixedHorizon { s: 0.4 },
            &cfg,
        )
        .unwrap();
        assert_eq!(r.se, 0.0);
        assert!(r.residual.abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn random_policies_are_seeded() {
        let inst = gallery::two_control_annulus();
        let a = random_policy(&inst, 1, 0.25, 3).unwrap();
        let b = random_policy(&inst, 1, 0.25, 3).unwrap();
        for p in [[1.5, 0.0], [-1.2, 0.7], [0.0, -1.8]] {
            assert_eq!(a.control(0.0, &p), b.control(0.0, &p));
        }
    }

    #[test]
    fn negative_horizon_is_rejected() {
        assert!(StoppingRule::FixedHorizon { s: -1.0 }.validate(1).is_err());
    }
}
