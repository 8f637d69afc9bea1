use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{operator_apply, Barrier, ControlId, ProblemInstance, SmoothFunction};

/// Which controls the barrier inequality must hold for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierScope {
    /// Only the favored control attached to the barrier.
    Favored,
    /// Every control of the top level, at `ε = 0` and `ε = ε₀`.
    AllControls,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub scope: BarrierScope,
    /// Largest sampled `D_tψ + L^αψ` per control (`None` where out of scope).
    pub per_control: Vec<Option<f64>>,
    /// Largest sampled residual over the controls in scope.
    pub max_residual: f64,
    /// Smallest `ψ` at sampled interior points.
    pub min_interior: f64,
    /// Largest `|ψ|` at sampled lateral boundary points (`None` when the
    /// domain has no explicit spatial region).
    pub boundary_max: Option<f64>,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
}

/// `D_tψ + L^α(ε)ψ` at one interior point.
pub fn barrier_residual(
    instance: &ProblemInstance,
    control: ControlId,
    t: f64,
    x: &[f64],
    eps: f64,
) -> Result<f64> {
    operator_apply(instance, control, &instance.barrier()?.psi, t, x, eps)
}

/// Samples interior and lateral boundary points and checks
/// `D_tψ + L^αψ ≤ −1 + tolerance`, `ψ > 0` inside and `ψ = 0` on the side.
pub fn barrier_validate(
    instance: &ProblemInstance,
    scope: BarrierScope,
    budget: usize,
    tolerance: f64,
    seed: u64,
) -> Result<BarrierReport> {
    let barrier = instance.barrier()?;
    if !barrier.psi.has_derivatives() {
        return Err(Error::Capability(
            "barrier has no derivative evaluator".into(),
        ));
    }
    let in_scope: Vec<(ControlId, Vec<f64>)> = match scope {
        BarrierScope::Favored => {
            let a = barrier
                .favored
                .ok_or_else(|| Error::Capability("barrier declares no favored control".into()))?;
            vec![(a, vec![0.0])]
        }
        BarrierScope::AllControls => {
            let eps0 = instance.regularity.eps0;
            let epss = if eps0 > 0.0 {
                vec![0.0, eps0]
            } else {
                vec![0.0]
            };
            instance
                .controls
                .top()
                .iter()
                .map(|&a| (a, epss.clone()))
                .collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_control = vec![None::<f64>; instance.controls.len()];
    let mut min_interior = f64::INFINITY;
    for _ in 0..budget {
        let (t, x) = instance.domain.sample_interior(&mut rng);
        min_interior = min_interior.min(barrier.value(t, &x));
        for (a, epss) in &in_scope {
            for &e in epss {
                let r = operator_apply(instance, *a, &barrier.psi, t, &x, e)?;
                let slot = &mut per_control[a.0];
                *slot = Some(slot.map_or(r, |m: f64| m.max(r)));
            }
        }
    }
    let boundary_max = instance.domain.region().map(|region| {
        let b = instance.domain.bbox();
        (0..budget)
            .map(|_| {
                let t = rng.random_range(b.t0..b.t1);
                let x = region.sample_boundary(&mut rng);
                barrier.value(t, &x).abs()
            })
            .fold(0.0, f64::max)
    });
    let max_residual = per_control
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = max_residual <= -1.0 + tolerance
        && min_interior > 0.0
        && boundary_max.is_none_or(|m| m <= 1e-9);
    Ok(BarrierReport {
        scope,
        per_control,
        max_residual,
        min_interior,
        boundary_max,
        tolerance,
        samples: budget,
        pass,
    })
}

/// `ψ e^{λ(T − t)}` with derivatives composed from those of `ψ`.
pub fn lambda_rescale(barrier: &Barrier, lambda: f64, terminal: f64) -> Barrier {
    if lambda == 0.0 {
        return barrier.clone();
    }
    let psi = barrier.psi.clone();
    let dim = psi.dim();
    let scaled = if psi.has_derivatives() {
        SmoothFunction::analytic(dim, move |t, x| {
            let e = (lambda * (terminal - t)).exp();
            let jet = psi.jet(t, x).expect("derivatives checked above");
            let mut out = jet.scale(e);
            out.dt -= lambda * out.value;
            out
        })
    } else {
        SmoothFunction::new(dim, move |t, x| {
            (lambda * (terminal - t)).exp() * psi.value(t, x)
        })
    };
    Barrier {
        psi: scaled,
        favored: barrier.favored,
    }
}

/// Default rescaling exponents tried by [`lambda_search`].
pub const LAMBDA_CANDIDATES: [f64; 8] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

/// Smallest `λ` among `candidates` whose rescaled barrier validates, with
/// the rescaled instance and its report.
pub fn lambda_search(
    instance: &ProblemInstance,
    scope: BarrierScope,
    candidates: &[f64],
    budget: usize,
    seed: u64,
) -> Result<(f64, ProblemInstance, BarrierReport)> {
    let barrier = instance.barrier()?;
    let terminal = instance.domain.bbox().t1;
    let mut last = None;
    for &lambda in candidates {
        let rescaled = instance
            .clone()
            .with_barrier(lambda_rescale(barrier, lambda, terminal));
        let report = barrier_validate(&rescaled, scope, budget, 0.0, seed)?;
        if report.pass {
            return Ok((lambda, rescaled, report));
        }
        last = Some(report.max_residual);
    }
    Err(Error::Precondition(format!(
        "no candidate exponent validates the barrier (last residual {:?})",
        last
    )))
}
