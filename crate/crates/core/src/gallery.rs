//! Built-in problem instances with their sharpest available oracles.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    Barrier, BoundaryData, CoeffSample, ControlId, ControlSpace, DomainSpec, FnCoefficients,
    GeneralDomain, Jet, ProblemInstance, Region, Regularity, SmoothFunction, MAX_DIM,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    ClosedForm,
    PropertyOnly,
}

#[derive(Clone, Debug, Serialize)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub oracle: OracleKind,
    /// Recognised numeric parameters with their defaults.
    pub params: &'static [(&'static str, f64)],
}

pub const ENTRIES: &[GalleryEntry] = &[
    GalleryEntry {
        name: "annulus_flow",
        summary: "deterministic unit drift to the right through the annulus 1 < r < 2 over (-1, 4); f = 1, g = 0; value is the remaining time to exit",
        oracle: OracleKind::ClosedForm,
        params: &[],
    },
    GalleryEntry {
        name: "two_control_annulus",
        summary: "choice between the unit rightward drift and planar Brownian motion on (-1, 4) x annulus; f = 1, g = 0; barrier 2(2-r)(r-1) favoring the Brownian control",
        oracle: OracleKind::PropertyOnly,
        params: &[],
    },
    GalleryEntry {
        name: "brownian_annulus",
        summary: "uncontrolled planar Brownian motion on (-1, 4) x annulus; f = 1, g = 0; barrier 2(2-r)(r-1)",
        oracle: OracleKind::PropertyOnly,
        params: &[],
    },
    GalleryEntry {
        name: "radial_drift_annulus",
        summary: "choice between the unit rightward drift and the radial field b(r)x with b = -1 near the inner circle and +1 near the outer one",
        oracle: OracleKind::PropertyOnly,
        params: &[],
    },
    GalleryEntry {
        name: "singular_control",
        summary: "Brownian motion pushed by a bounded drift beta at running cost |beta| on the unit ball, discount 1, reward cos(pi|x|^2/2)",
        oracle: OracleKind::PropertyOnly,
        params: &[("n", 8.0), ("dim", 1.0)],
    },
    GalleryEntry {
        name: "smooth_benchmark",
        summary: "uncontrolled Brownian motion on the cube (-1, 1)^d with manufactured solution exp(-t) prod cos(x_i)",
        oracle: OracleKind::ClosedForm,
        params: &[("dim", 1.0)],
    },
    GalleryEntry {
        name: "two_diffusion_interval",
        summary: "two drifted diffusions on (-1, 1) with f = 1, g = 0 and a quartic barrier that needs exponential rescaling",
        oracle: OracleKind::PropertyOnly,
        params: &[],
    },
    GalleryEntry {
        name: "pure_discount",
        summary: "motionless state on (-1, 1) with discount 1 and reward 1 until time 1; value 1 - exp(-(1 - t))",
        oracle: OracleKind::ClosedForm,
        params: &[],
    },
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

pub fn describe(name: &str) -> Result<&'static GalleryEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| unknown(name))
}

fn unknown(name: &str) -> Error {
    Error::Config(format!(
        "unknown gallery entry '{name}'; valid entries: {}",
        names().join(", ")
    ))
}

/// Builds a named entry; unrecognised parameter names are rejected.
pub fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<ProblemInstance> {
    let entry = describe(name)?;
    if let Some(bad) = params
        .keys()
        .find(|k| !entry.params.iter().any(|(p, _)| p == k))
    {
        return Err(Error::Config(format!(
            "entry '{name}' has no parameter '{bad}'"
        )));
    }
    let get = |key: &str| -> f64 {
        params.get(key).copied().unwrap_or_else(|| {
            entry
                .params
                .iter()
                .find(|(p, _)| *p == key)
                .map(|(_, v)| *v)
                .unwrap_or(0.0)
        })
    };
    let as_dim = |v: f64| -> Result<usize> {
        if v.fract() == 0.0 && (1.0..=MAX_DIM as f64).contains(&v) {
            Ok(v as usize)
        } else {
            Err(Error::Config(format!(
                "dimension must be an integer in 1..={MAX_DIM}, got {v}"
            )))
        }
    };
    match name {
        "annulus_flow" => Ok(annulus_flow()),
        "two_control_annulus" => Ok(two_control_annulus()),
        "brownian_annulus" => Ok(brownian_annulus()),
        "radial_drift_annulus" => Ok(radial_drift_annulus()),
        "singular_control" => {
            let n = get("n");
            if !(n >= 0.0) {
                return Err(Error::Config(format!("n must be nonnegative, got {n}")));
            }
            Ok(singular_control_dim(n, as_dim(get("dim"))?))
        }
        "smooth_benchmark" => Ok(smooth_benchmark_dim(as_dim(get("dim"))?)),
        "two_diffusion_interval" => Ok(two_diffusion_interval()),
        "pure_discount" => Ok(pure_discount()),
        _ => Err(unknown(name)),
    }
}

const ANNULUS_T: f64 = 4.0;

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Jet of a radial function `φ(|x|)` from `φ, φ', φ''`.
fn radial_jet(x: &[f64], phi: f64, dphi: f64, ddphi: f64) -> Jet {
    let d = x.len();
    let r = radius(x);
    let mut jet = Jet::constant(phi);
    for i in 0..d {
        let ui = x[i] / r;
        jet.grad[i] = dphi * ui;
        for j in 0..d {
            let uj = x[j] / r;
            let delta = if i == j { 1.0 } else { 0.0 };
            jet.hess[i][j] = ddphi * ui * uj + dphi / r * (delta - ui * uj);
        }
    }
    jet
}

/// `ψ = 2(2 − r)(r − 1)` with analytic derivatives.
pub fn annulus_barrier() -> SmoothFunction {
    SmoothFunction::analytic(2, |_, x| {
        let r = radius(x);
        radial_jet(x, 2.0 * (2.0 - r) * (r - 1.0), 6.0 - 4.0 * r, -4.0)
    })
}

fn annulus_region() -> Region {
    Region::annulus(2, 1.0, 2.0)
}

/// Unit rightward drift through the annulus: `dx = dt, dy = 0`, `f = 1`,
/// `g = 0`, on the product domain `(−1, 4) × (B₂ ∖ B̄₁)`.
pub fn annulus_flow() -> ProblemInstance {
    let coeffs = FnCoefficients::new(2, 2, |_, _, _, eps| {
        CoeffSample::ZERO
            .with_drift(&[1.0 + eps, 0.0])
            .with_reward(1.0)
    })
    .time_homogeneous()
    .with_slab(-2.0, ANNULUS_T + 1.0);
    ProblemInstance::new(
        "annulus_flow",
        ControlSpace::flat(["drift"]),
        coeffs,
        DomainSpec::General(GeneralDomain::product(-1.0, ANNULUS_T, annulus_region())),
        BoundaryData::constant(0.0),
    )
    .expect("consistent dimensions")
    .with_regularity(Regularity {
        k: 1.0,
        k1: 1.0,
        lambda: 0.0,
        sup_bound: 1.0 + 0.1,
        eps0: 0.1,
    })
}

/// Remaining time until the unit rightward flow leaves `(−1, 4) × (B₂ ∖ B̄₁)`.
pub fn annulus_oracle(t: f64, x: f64, y: f64) -> Result<f64> {
    let r = (x * x + y * y).sqrt();
    let tol = 1e-12;
    if !(-1.0 - tol..=ANNULUS_T + tol).contains(&t) || r < 1.0 - tol || r > 2.0 + tol {
        return Err(Error::Domain(format!(
            "({t}, {x}, {y}) is outside the closed domain"
        )));
    }
    let inner = (1.0 - y * y).max(0.0).sqrt();
    let distance = if y.abs() <= 1.0 && x <= -inner {
        -inner - x
    } else {
        (4.0 - y * y).max(0.0).sqrt() - x
    };
    Ok(distance.min(ANNULUS_T - t).max(0.0))
}

fn two_control_coefficients() -> FnCoefficients {
    FnCoefficients::new(2, 2, |a, _, _, eps| match a.0 {
        0 => CoeffSample::ZERO
            .with_drift(&[1.0 + eps, 0.0])
            .with_reward(1.0),
        _ => CoeffSample::isotropic(2, 1.0 + eps).with_reward(1.0),
    })
    .time_homogeneous()
    .with_slab(-2.0, ANNULUS_T + 1.0)
}

/// Rightward drift (control 0) or planar Brownian motion (control 1) on the
/// cylinder `(−1, 4) × (B₂ ∖ B̄₁)`, `f = 1`, `g = 0`.
pub fn two_control_annulus() -> ProblemInstance {
    ProblemInstance::new(
        "two_control_annulus",
        ControlSpace::flat(["drift", "brownian"]),
        two_control_coefficients(),
        DomainSpec::cylinder(ANNULUS_T, annulus_region()),
        BoundaryData::cylindrical(ANNULUS_T, |_, _, _| 0.0, |_, _| 0.0)
            .with_lateral_smooth(SmoothFunction::constant(2, 0.0)),
    )
    .expect("consistent dimensions")
    .with_barrier(Barrier::new(annulus_barrier()).favoring(ControlId(1)))
    .with_regularity(Regularity {
        k: 1.0,
        k1: 1.0,
        lambda: 0.0,
        sup_bound: 1.0 + 0.1 * 2f64.sqrt() + 2f64.sqrt(),
        eps0: 0.1,
    })
}

/// Uncontrolled planar Brownian motion on `(−1, 4) × (B₂ ∖ B̄₁)`, `f = 1`,
/// `g = 0`, with the barrier `2(2 − r)(r − 1)`.
pub fn brownian_annulus() -> ProblemInstance {
    let coeffs = FnCoefficients::new(2, 2, |_, _, _, eps| {
        CoeffSample::isotropic(2, 1.0 + eps).with_reward(1.0)
    })
    .time_homogeneous()
    .with_slab(-2.0, ANNULUS_T + 1.0);
    ProblemInstance::new(
        "brownian_annulus",
        ControlSpace::flat(["brownian"]),
        coeffs,
        DomainSpec::cylinder(ANNULUS_T, annulus_region()),
        BoundaryData::cylindrical(ANNULUS_T, |_, _, _| 0.0, |_, _| 0.0),
    )
    .expect("consistent dimensions")
    .with_barrier(Barrier::new(annulus_barrier()).favoring(ControlId(0)))
    .with_regularity(Regularity {
        k: 2f64.sqrt(),
        k1: 1.0,
        lambda: 0.0,
        sup_bound: 2.0,
        eps0: 0.1,
    })
}

/// `b(r)`: `−1` up to `r = 5/4`, `+1` from `r = 7/4`, joined by the odd
/// quintic smoothstep `6u⁵ − 15u⁴ + 10u³`.
pub fn radial_profile(r: f64) -> f64 {
    let u = ((r - 1.25) / 0.5).clamp(0.0, 1.0);
    -1.0 + 2.0 * u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

/// Rightward drift (control 0) or the radial field `b(r)x` (control 1) on
/// `(−1, 4) × (B₂ ∖ B̄₁)`, `f = 1`, `g = 0`; barrier `(r − 1)(2 − r)`
/// rescaled by `e^{8(T − t)}` and favoring the radial control.
pub fn radial_drift_annulus() -> ProblemInstance {
    let coeffs = FnCoefficients::new(2, 2, |a, _, x, eps| match a.0 {
        0 => CoeffSample::ZERO
            .with_drift(&[1.0 + eps, 0.0])
            .with_reward(1.0),
        _ => {
            let b = radial_profile(radius(x));
            CoeffSample::ZERO
                .with_drift(&[b * x[0] + eps, b * x[1]])
                .with_reward(1.0)
        }
    })
    .time_homogeneous()
    .with_slab(-2.0, ANNULUS_T + 1.0);
    let lambda = 8.0;
    let psi = SmoothFunction::analytic(2, move |t, x| {
        let r = radius(x);
        let e = (lambda * (ANNULUS_T - t)).exp();
        let base = radial_jet(x, (r - 1.0) * (2.0 - r), 3.0 - 2.0 * r, -2.0);
        let mut jet = base.scale(e);
        jet.dt = -lambda * jet.value;
        jet
    });
    ProblemInstance::new(
        "radial_drift_annulus",
        ControlSpace::flat(["drift", "radial"]),
        coeffs,
        DomainSpec::cylinder(ANNULUS_T, annulus_region()),
        BoundaryData::cylindrical(ANNULUS_T, |_, _, _| 0.0, |_, _| 0.0),
    )
    .expect("consistent dimensions")
    .with_barrier(Barrier::new(psi).favoring(ControlId(1)))
    .with_regularity(Regularity {
        k: 15.0,
        k1: 1.0,
        lambda: 0.0,
        sup_bound: 2.0 + 0.1,
        eps0: 0.1,
    })
}

/// One-dimensional default of [`singular_control_dim`].
pub fn singular_control(n: f64) -> ProblemInstance {
    singular_control_dim(n, 1)
}

/// Drift samples of norm `0, n/2, n` along the axes and the main diagonals.
fn drift_samples(n: f64, d: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            dirs.push(e);
        }
    }
    if d >= 2 {
        for mask in 0..(1usize << d) {
            let s = 1.0 / (d as f64).sqrt();
            dirs.push(
                (0..d)
                    .map(|i| if mask >> i & 1 == 1 { -s } else { s })
                    .collect(),
            );
        }
    }
    let mut out = vec![vec![0.0; d]];
    let mut sizes = vec![1];
    if n > 0.0 {
        for norm in [0.5 * n, n] {
            out.extend(dirs.iter().map(|u| u.iter().map(|v| norm * v).collect()));
            sizes.push(out.len());
        }
    }
    (out, sizes)
}

/// Brownian motion with drift `β`, `|β| ≤ n`, discount 1, running reward
/// `cos(π|x|²/2) − |β|`, on `(−1, 1) × B₁` with `g = 0`. Level `k` holds the
/// drifts of norm at most the `k`-th of `0, n/2, n`.
pub fn singular_control_dim(n: f64, d: usize) -> ProblemInstance {
    let (betas, sizes) = drift_samples(n, d);
    let labels: Vec<String> = betas.iter().map(|b| format!("beta={b:?}")).collect();
    let table = betas.clone();
    let coeffs = FnCoefficients::new(d, d, move |a, _, x, eps| {
        let beta = &table[a.0];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let cost = radius(beta);
        let mut drift = [0.0; MAX_DIM];
        drift[..d].copy_from_slice(beta);
        drift[0] += eps;
        CoeffSample::isotropic(d, 1.0)
            .with_drift(&drift[..d])
            .with_discount(1.0)
            .with_reward((0.5 * PI * r2).cos() - cost)
    })
    .time_homogeneous()
    .with_slab(-2.0, 2.0);
    ProblemInstance::new(
        format!("singular_control(n={n})"),
        ControlSpace::prefixes(labels, &sizes).expect("nested prefixes"),
        coeffs,
        DomainSpec::cylinder(1.0, Region::unit_ball(d)),
        BoundaryData::cylindrical(1.0, |_, _, _| 0.0, |_, _| 0.0),
    )
    .expect("consistent dimensions")
    .with_regularity(Regularity {
        k: 1.0,
        k1: PI + 1.0,
        lambda: 1.0,
        sup_bound: 2.0 + n + 0.1 + (d as f64).sqrt(),
        eps0: 0.1,
    })
}

/// One-dimensional default of [`smooth_benchmark_dim`].
pub fn smooth_benchmark() -> ProblemInstance {
    smooth_benchmark_dim(1)
}

/// `v*(t, x) = e^{−t} ∏ cos xᵢ`.
pub fn smooth_exact(t: f64, x: &[f64]) -> f64 {
    (-t).exp() * x.iter().map(|v| v.cos()).product::<f64>()
}

fn smooth_exact_jet(t: f64, x: &[f64]) -> Jet {
    let d = x.len();
    let v = smooth_exact(t, x);
    let mut jet = Jet::constant(v);
    jet.dt = -v;
    for i in 0..d {
        // ∂ᵢ v = −tan xᵢ · v written without dividing by cos
        let others = |skip: &[usize]| -> f64 {
            (-t).exp()
                * (0..d)
                    .filter(|k| !skip.contains(k))
                    .map(|k| x[k].cos())
                    .product::<f64>()
        };
        jet.grad[i] = -x[i].sin() * others(&[i]);
        jet.hess[i][i] = -v;
        for j in 0..d {
            if j != i {
                jet.hess[i][j] = x[i].sin() * x[j].sin() * others(&[i, j]);
            }
        }
    }
    jet
}

/// Uncontrolled diffusion `σ = (1 + ε)I`, `b = 0`, `c = 0` on
/// `(−1, 1) × (−1, 1)^d` with reward `(1 + d/2)v*` and boundary data `v*`,
/// so that `v*` solves the problem exactly at `ε = 0`.
pub fn smooth_benchmark_dim(d: usize) -> ProblemInstance {
    let coeffs = FnCoefficients::new(d, d, move |_, t, x, eps| {
        CoeffSample::isotropic(d, 1.0 + eps)
            .with_reward((1.0 + 0.5 * d as f64) * smooth_exact(t, x))
    })
    .with_slab(-2.0, f64::INFINITY);
    let boundary = BoundaryData::cylindrical(
        1.0,
        |t, x, _| smooth_exact(t, x),
        |x, _| smooth_exact(1.0, x),
    )
    .with_lateral_smooth(SmoothFunction::analytic(d, smooth_exact_jet));
    let mut inst = ProblemInstance::new(
        if d == 1 {
            "smooth_benchmark".to_string()
        } else {
            format!("smooth_benchmark(d={d})")
        },
        ControlSpace::flat(["brownian"]),
        coeffs,
        DomainSpec::cylinder(1.0, Region::cube(d, 1.0)),
        boundary,
    )
    .expect("consistent dimensions")
    .with_regularity(Regularity {
        k: (d as f64).sqrt(),
        k1: 2.0 * (d as f64).sqrt(),
        lambda: 0.0,
        sup_bound: (1.0 + 0.5 * d as f64).max((d as f64).sqrt() * 1.1),
        eps0: 0.1,
    });
    if d == 1 {
        let psi = SmoothFunction::analytic(1, |_, x| Jet {
            value: 1.0 - x[0] * x[0],
            dt: 0.0,
            grad: [-2.0 * x[0], 0.0, 0.0],
            hess: [[-2.0, 0.0, 0.0], [0.0; 3], [0.0; 3]],
        });
        inst = inst.with_barrier(Barrier::new(psi).favoring(ControlId(0)));
    }
    inst
}

/// Manufactured solution of [`smooth_benchmark_dim`] as a smooth function.
pub fn smooth_exact_function(d: usize) -> SmoothFunction {
    SmoothFunction::analytic(d, smooth_exact_jet)
}

/// Two drifted diffusions `(σ, b) ∈ {(1, 0.3), (1.2, −0.3)}` on
/// `(−1, 1) × (−1, 1)`, `f = 1`, `g = 0`, with the barrier
/// `0.45(1 − x²) + 0.55(1 − x⁴)` whose residual is only about `−0.44`.
pub fn two_diffusion_interval() -> ProblemInstance {
    let coeffs = FnCoefficients::new(1, 1, |a, _, _, _| match a.0 {
        0 => CoeffSample::isotropic(1, 1.0)
            .with_drift(&[0.3])
            .with_reward(1.0),
        _ => CoeffSample::isotropic(1, 1.2)
            .with_drift(&[-0.3])
            .with_reward(1.0),
    })
    .time_homogeneous()
    .with_slab(-2.0, 2.0);
    let psi = SmoothFunction::analytic(1, |_, x| {
        let u = x[0];
        Jet {
            value: 0.45 * (1.0 - u * u) + 0.55 * (1.0 - u.powi(4)),
            dt: 0.0,
            grad: [-0.9 * u - 2.2 * u.powi(3), 0.0, 0.0],
            hess: [[-0.9 - 6.6 * u * u, 0.0, 0.0], [0.0; 3], [0.0; 3]],
        }
    });
    ProblemInstance::new(
        "two_diffusion_interval",
        ControlSpace::flat(["up", "down"]),
        coeffs,
        DomainSpec::cylinder(1.0, Region::cube(1, 1.0)),
        BoundaryData::cylindrical(1.0, |_, _, _| 0.0, |_, _| 0.0),
    )
    .expect("consistent dimensions")
    .with_barrier(Barrier::new(psi))
    .with_regularity(Regularity {
        k: 0.0,
        k1: 1.0,
        lambda: 0.0,
        sup_bound: 1.2,
        eps0: 0.0,
    })
}

/// Motionless state, discount 1, reward 1, `g = 0` on `(−1, 1) × (−1, 1)`.
pub fn pure_discount() -> ProblemInstance {
    let coeffs = FnCoefficients::constant_table(
        1,
        1,
        vec![CoeffSample::ZERO.with_discount(1.0).with_reward(1.0)],
    )
    .with_slab(-2.0, 2.0);
    ProblemInstance::new(
        "pure_discount",
        ControlSpace::flat(["rest"]),
        coeffs,
        DomainSpec::cylinder(1.0, Region::cube(1, 1.0)),
        BoundaryData::cylindrical(1.0, |_, _, _| 0.0, |_, _| 0.0),
    )
    .expect("consistent dimensions")
    .with_regularity(Regularity {
        k: 0.0,
        k1: 1.0,
        lambda: 1.0,
        sup_bound: 1.0,
        eps0: 0.0,
    })
}

/// Closed form of [`pure_discount`].
pub fn pure_discount_exact(t: f64) -> f64 {
    1.0 - (-(1.0 - t)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_values() {
        assert!((annulus_oracle(0.0, -1.5, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((annulus_oracle(0.0, 0.0, 1.5).unwrap() - 1.75f64.sqrt()).abs() < 1e-15);
        assert!(annulus_oracle(0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn radial_profile_values() {
        assert_eq!(radial_profile(1.1), -1.0);
        assert_eq!(radial_profile(1.9), 1.0);
        assert!(radial_profile(1.5).abs() < 1e-15);
    }

    #[test]
    fn every_entry_builds_with_defaults() {
        for name in names() {
            build(name, &BTreeMap::new()).unwrap();
        }
        assert!(matches!(
            build("nope", &BTreeMap::new()),
            Err(Error::Config(m)) if m.contains("annulus_flow")
        ));
    }
}
