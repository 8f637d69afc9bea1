use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::region::unit_vector;
use super::{CoeffSample, ControlId, DomainSpec, ProblemInstance, MAX_DIM};

/// One sampled invariant with its worst observed statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckItem {
    fn at_most(name: &str, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic <= threshold * (1.0 + 1e-9) + 1e-12,
        }
    }

    fn at_least(name: &str, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic >= threshold - 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub instance: String,
    pub samples: usize,
    pub items: Vec<CheckItem>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

fn sigma_distance(a: &CoeffSample, b: &CoeffSample, d: usize, d1: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for k in 0..d1 {
            let e = a.sigma[i][k] - b.sigma[i][k];
            s += e * e;
        }
    }
    s.sqrt()
}

fn drift_distance(a: &CoeffSample, b: &CoeffSample, d: usize) -> f64 {
    (0..d)
        .map(|i| (a.drift[i] - b.drift[i]).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn sigma_norm(a: &CoeffSample, d: usize, d1: usize) -> f64 {
    sigma_distance(a, &CoeffSample::ZERO, d, d1)
}

/// Sampled check of the standing assumptions: Lipschitz quotients of the
/// coefficients against `K` and `K₁`, `c ≥ λ`, sup bounds, finiteness, and
/// barrier sign conditions when a barrier is attached.
///
/// Probe pairs are `(t, x, ε)` against `(t, y, 0)` with `(t, x)` uniform in
/// `Q`, `|x − y|` up to a tenth of the diameter, and `ε ∈ {0, ε₀}`.
pub fn validate_instance(instance: &ProblemInstance, budget: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = instance.dim();
    let d1 = instance.noise_dim();
    let reg = instance.regularity;
    let controls: Vec<ControlId> = instance.controls.top().to_vec();
    let diam = instance.domain.bbox().spatial_diameter().max(1e-12);

    let mut q_sb: f64 = 0.0;
    let mut q_cf: f64 = 0.0;
    let mut min_c = f64::INFINITY;
    let mut sup: f64 = 0.0;
    let mut finite = true;

    for n in 0..budget {
        let (t, x) = instance.domain.sample_interior(&mut rng);
        let u = unit_vector(&mut rng, d);
        let r = rng.random_range(1e-4..0.1) * diam;
        let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + r * b).collect();
        let eps = if n % 2 == 1 { reg.eps0 } else { 0.0 };
        let a = controls[rng.random_range(0..controls.len())];
        let s_x = instance.sample(a, t, &x, eps);
        let s_y = instance.sample(a, t, &y, 0.0);
        finite &= s_x.is_finite() && s_y.is_finite();
        let denom = r + eps;
        q_sb = q_sb
            .max(sigma_distance(&s_x, &s_y, d, d1) / denom)
            .max(drift_distance(&s_x, &s_y, d) / denom);
        q_cf = q_cf
            .max((s_x.discount - s_y.discount).abs() / denom)
            .max((s_x.reward - s_y.reward).abs() / denom);
        for s in [&s_x, &s_y] {
            min_c = min_c.min(s.discount);
            sup = sup
                .max(sigma_norm(s, d, d1))
                .max(drift_distance(s, &CoeffSample::ZERO, d))
                .max(s.discount.abs())
                .max(s.reward.abs());
        }
    }

    let mut items = vec![
        CheckItem::at_least("finite coefficients", if finite { 1.0 } else { 0.0 }, 1.0),
        CheckItem::at_most("lipschitz sigma/b vs K", q_sb, reg.k),
        CheckItem::at_most("lipschitz c/f vs K1", q_cf, reg.k1),
        CheckItem::at_least("c >= lambda", min_c, reg.lambda),
        CheckItem::at_most("coefficient sup bound", sup, reg.sup_bound),
    ];

    if let Some(x) = terminal_samples(instance, budget, &mut rng) {
        items.push(CheckItem::at_most("|g2| <= K1", x, reg.k1));
    }

    if let Some(barrier) = &instance.barrier {
        let mut min_inside = f64::INFINITY;
        for _ in 0..budget {
            let (t, x) = instance.domain.sample_interior(&mut rng);
            min_inside = min_inside.min(barrier.value(t, &x));
        }
        items.push(CheckItem::at_least(
            "barrier positive inside",
            min_inside,
            f64::MIN_POSITIVE,
        ));
        if let Some(v) = barrier_boundary_sup(instance, budget, &mut rng) {
            items.push(CheckItem::at_most("barrier vanishes on boundary", v, 1e-9));
        }
    }

    ValidationReport {
        instance: instance.name.clone(),
        samples: budget,
        items,
    }
}

fn terminal_samples(
    instance: &ProblemInstance,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Option<f64> {
    let region = instance.domain.region()?;
    instance
        .boundary
        .terminal(&vec![0.0; instance.dim()], 0.0)?;
    let mut sup: f64 = 0.0;
    for n in 0..budget {
        let x = region.sample_interior(rng);
        let eps = if n % 2 == 1 {
            instance.regularity.eps0
        } else {
            0.0
        };
        sup = sup.max(instance.boundary.terminal(&x, eps).unwrap_or(0.0).abs());
    }
    Some(sup)
}

/// Largest `|ψ|` over the lateral boundary of a cylinder, or over probe
/// points of `∂′Q` for product domains.
fn barrier_boundary_sup(
    instance: &ProblemInstance,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Option<f64> {
    let barrier = instance.barrier.as_ref()?;
    let region = instance.domain.region()?;
    let b = instance.domain.bbox();
    let mut sup: f64 = 0.0;
    let mut x = [0.0; MAX_DIM];
    for _ in 0..budget {
        let t = rng.random_range(b.t0..b.t1);
        let p = region.sample_boundary(rng);
        x[..p.len()].copy_from_slice(&p);
        sup = sup.max(barrier.value(t, &x[..p.len()]).abs());
    }
    if !matches!(instance.domain, DomainSpec::Cylinder { .. }) {
        // product domains: the top face belongs to the parabolic boundary too
        for _ in 0..budget {
            let p = region.sample_interior(rng);
            sup = sup.max(barrier.value(b.t1, &p).abs());
        }
    }
    Some(sup)
}
