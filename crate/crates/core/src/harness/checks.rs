use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::control;
use crate::error::{Error, Result};
use crate::model::{BoundaryData, ProblemInstance};
use crate::shaking::SweepRow;
use crate::simulate::{coupled_moment_lhs, moment_rate, PathConfig, Policy};
use crate::solve::{solve_with, LatticeOptions, LatticeSpec, Storage};
use crate::verify::{
    band_check, barrier_validate, dpp_residual, dpp_rhs, modulus_fit, monotone_g_check,
    random_policy, weak_residual_of, weak_supersolution_residual, BarrierScope, Bump, PairSet,
    StoppingRule, Verdict,
};

/// A space-time start point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub t: f64,
    pub x: Vec<f64>,
}

/// Coupled start `(t, x, y)` with perturbation `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Triple {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eps: f64,
}

/// Policy used by simulation runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Constant {
        control: usize,
    },
    /// Independent random control per cell of a coarse grid.
    Random {
        cell: f64,
    },
    /// Argmax feedback of a solve on the given lattice.
    Optimal {
        lattice: LatticeOptions,
    },
}

impl PolicySpec {
    pub fn build(&self, instance: &ProblemInstance, seed: u64) -> Result<Policy> {
        let level = instance.controls.n_levels();
        match self {
            PolicySpec::Constant { control: c } => Ok(Policy::Constant(control(instance, *c)?)),
            PolicySpec::Random { cell } => random_policy(instance, level, *cell, seed),
            PolicySpec::Optimal { lattice } => {
                Ok(solve_with(instance, lattice, level, 0.0)?.extract_policy())
            }
        }
    }
}

/// Which function the weak-form check integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakField {
    /// The lattice solution; `|R| ≤ C h`.
    Solution,
    /// The barrier sampled on the lattice; `R ≤ C h`.
    Barrier,
}

fn d_paths() -> usize {
    2000
}
fn d_policies() -> usize {
    8
}
fn d_cell() -> f64 {
    0.25
}
fn d_floor() -> f64 {
    0.05
}
fn d_budget() -> usize {
    4000
}
fn d_band_factor() -> f64 {
    2.0
}
fn d_pairs() -> usize {
    200
}
fn d_space_sep() -> f64 {
    0.05
}
fn d_time_sep() -> f64 {
    0.04
}
fn d_ratio() -> f64 {
    1.25
}
fn d_ns() -> Vec<u32> {
    vec![1, 2, 4, 8]
}
fn d_probes() -> usize {
    200
}
fn d_ps() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn d_coupled_paths() -> usize {
    10_000
}
fn d_constant() -> PolicySpec {
    PolicySpec::Constant { control: 0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// The stored solution reproduces one scheme step.
    OneStep { lattice: LatticeOptions },
    /// Monte Carlo Bellman principle at each start and stopping rule, plus
    /// dominance over random feedback policies.
    Dpp {
        lattice: LatticeOptions,
        starts: Vec<Start>,
        rules: Vec<StoppingRule>,
        dt: f64,
        #[serde(default = "d_paths")]
        n_paths: usize,
        #[serde(default = "d_policies")]
        policies: usize,
        #[serde(default = "d_cell")]
        cell: f64,
        #[serde(default = "d_floor")]
        floor: f64,
    },
    Barrier {
        scope: BarrierScope,
        #[serde(default = "d_budget")]
        budget: usize,
        #[serde(default)]
        tolerance: f64,
    },
    /// `|v − g₁| ≤ K₁ψ` up to `factor·h`.
    Band {
        lattice: LatticeOptions,
        #[serde(default)]
        k1: Option<f64>,
        #[serde(default = "d_band_factor")]
        factor: f64,
    },
    /// Lipschitz and Hölder quotients at `h` and `h/2` must stay within
    /// `ratio` of each other.
    Modulus {
        h: f64,
        #[serde(default = "d_pairs")]
        pairs: usize,
        #[serde(default = "d_space_sep")]
        space_sep: f64,
        #[serde(default = "d_time_sep")]
        time_sep: f64,
        #[serde(default = "d_ratio")]
        ratio: f64,
    },
    /// Boundary data `g − 1/n` increasing to `g`.
    MonotoneG {
        lattice: LatticeOptions,
        #[serde(default = "d_ns")]
        ns: Vec<u32>,
        #[serde(default = "d_probes")]
        probes: usize,
    },
    /// Weak supersolution residuals on a refinement sequence, bounded by
    /// `C h` with `C` fitted on the coarsest grid.
    Weak {
        hs: Vec<f64>,
        bumps: Vec<Bump>,
        field: WeakField,
        #[serde(default)]
        control: usize,
    },
    /// Coupled moment bound for the perturbed state.
    Coupled {
        triples: Vec<Triple>,
        dt: f64,
        #[serde(default = "d_ps")]
        ps: Vec<f64>,
        #[serde(default = "d_coupled_paths")]
        n_paths: usize,
        #[serde(default = "d_constant")]
        policy: PolicySpec,
    },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::OneStep { .. } => "one_step",
            CheckSpec::Dpp { .. } => "dpp",
            CheckSpec::Barrier { .. } => "barrier",
            CheckSpec::Band { .. } => "band",
            CheckSpec::Modulus { .. } => "modulus",
            CheckSpec::MonotoneG { .. } => "monotone_g",
            CheckSpec::Weak { .. } => "weak",
            CheckSpec::Coupled { .. } => "coupled",
        }
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        let d = instance.dim();
        let dim_ok = |x: &[f64]| {
            if x.len() == d {
                Ok(())
            } else {
                Err(Error::Config(format!("point {x:?} is not {d}-dimensional")))
            }
        };
        match self {
            CheckSpec::Dpp { starts, rules, .. } => {
                if starts.is_empty() || rules.is_empty() {
                    return Err(Error::Config("dpp needs starts and rules".into()));
                }
                starts.iter().try_for_each(|s| dim_ok(&s.x))
            }
            CheckSpec::Barrier { .. } | CheckSpec::Band { .. } => instance.barrier().map(|_| ()),
            CheckSpec::Weak {
                hs,
                bumps,
                control: c,
                ..
            } => {
                if hs.len() < 2 || bumps.is_empty() {
                    return Err(Error::Config(
                        "weak check needs ≥ 2 grids and a bump".into(),
                    ));
                }
                control(instance, *c)?;
                bumps.iter().try_for_each(|b| {
                    dim_ok(&b.x0)?;
                    b.check_support(instance)
                })
            }
            CheckSpec::Coupled { triples, ps, .. } => {
                if triples.is_empty() || ps.is_empty() {
                    return Err(Error::Config(
                        "coupled check needs triples and exponents".into(),
                    ));
                }
                triples.iter().try_for_each(|tr| {
                    dim_ok(&tr.x)?;
                    dim_ok(&tr.y)
                })
            }
            CheckSpec::MonotoneG { ns, .. } if ns.contains(&0) => {
                Err(Error::Config("sequence index n must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Runs one check; the detailed report goes to `<check>.json` in `out`.
pub fn run_check(
    instance: &ProblemInstance,
    check: &CheckSpec,
    seed: u64,
    out: &Path,
) -> Result<(Vec<Verdict>, Vec<PathBuf>)> {
    check.validate(instance)?;
    let name = instance.name.as_str();
    let level = instance.controls.n_levels();
    let mut verdicts = Vec::new();
    let report = match check {
        CheckSpec::OneStep { lattice } => {
            let field = solve_with(instance, lattice, level, 0.0)?;
            let r = field.one_step_residual()?;
            verdicts.push(Verdict::at_most(
                "one_step_residual",
                name,
                json!({ "h": lattice.h }),
                r,
                1e-12,
            ));
            json!({ "residual": r })
        }
        CheckSpec::Dpp {
            lattice,
            starts,
            rules,
            dt,
            n_paths,
            policies,
            cell,
            floor,
        } => {
            let field = solve_with(instance, lattice, level, 0.0)?;
            let mut rows = Vec::new();
            for (i, start) in starts.iter().enumerate() {
                for (j, rule) in rules.iter().enumerate() {
                    let cfg = PathConfig::for_instance(
                        instance,
                        *dt,
                        *n_paths,
                        seed.wrapping_add((i * rules.len() + j) as u64),
                    );
                    let r = dpp_residual(&field, start.t, &start.x, rule, &cfg)?;
                    let params = json!({ "start": start, "rule": rule, "h": lattice.h });
                    verdicts.push(Verdict::at_most(
                        "dpp_residual",
                        name,
                        params.clone(),
                        r.residual.abs(),
                        floor.max(3.0 * r.se),
                    ));
                    let mut sub = Vec::new();
                    for k in 0..*policies {
                        let pol = random_policy(instance, level, *cell, seed ^ (1000 + k as u64))?;
                        let (rhs, se) = dpp_rhs(&field, &pol, start.t, &start.x, rule, &cfg)?;
                        // deterministic dynamics give se = 0
                        verdicts.push(Verdict::at_most(
                            "dpp_suboptimal",
                            name,
                            json!({ "start": start, "rule": rule, "policy": k }),
                            rhs - r.lhs,
                            3.0 * se + 1e-12,
                        ));
                        sub.push(json!({ "policy": k, "rhs": rhs, "se": se }));
                    }
                    rows.push(json!({ "params": params, "report": r, "suboptimal": sub }));
                }
            }
            json!(rows)
        }
        CheckSpec::Barrier {
            scope,
            budget,
            tolerance,
        } => {
            let r = barrier_validate(instance, *scope, *budget, *tolerance, seed)?;
            verdicts.push(Verdict::at_most(
                "barrier_residual",
                name,
                json!({ "scope": scope, "budget": budget }),
                r.max_residual,
                -1.0 + tolerance,
            ));
            verdicts.push(Verdict::at_least(
                "barrier_positive",
                name,
                json!({ "scope": scope }),
                r.min_interior,
                0.0,
            ));
            json!(r)
        }
        CheckSpec::Band {
            lattice,
            k1,
            factor,
        } => {
            let field = solve_with(instance, lattice, level, 0.0)?;
            let r = band_check(&field, *k1)?;
            verdicts.push(Verdict::at_most(
                "band",
                name,
                json!({ "h": lattice.h, "k1": r.k1 }),
                r.max_violation,
                factor * lattice.h,
            ));
            json!(r)
        }
        CheckSpec::Modulus {
            h,
            pairs,
            space_sep,
            time_sep,
            ratio,
        } => {
            let set = PairSet::sample(instance, *pairs, *space_sep, *time_sep, seed)?;
            let fit = |h: f64| {
                let field = solve_with(instance, &LatticeOptions::new(h), level, 0.0)?;
                modulus_fit(&field, None, &set)
            };
            let coarse = fit(*h)?;
            let fine = fit(h / 2.0)?;
            for (what, a, b) in [
                ("lipschitz_ratio", coarse.lipschitz_x, fine.lipschitz_x),
                ("holder_ratio", coarse.holder_t, fine.holder_t),
            ] {
                let q = if a > 0.0 { b / a } else { 1.0 };
                verdicts.push(Verdict::at_most(
                    what,
                    name,
                    json!({ "h": h, "coarse": a, "fine": b }),
                    q.max(1.0 / q.max(f64::MIN_POSITIVE)),
                    *ratio,
                ));
            }
            json!({ "coarse": coarse, "fine": fine })
        }
        CheckSpec::MonotoneG {
            lattice,
            ns,
            probes,
        } => {
            let sequence: Vec<BoundaryData> = ns
                .iter()
                .map(|&n| instance.boundary.shifted(1.0 / n as f64))
                .collect();
            let r = monotone_g_check(
                instance,
                &sequence,
                &instance.boundary,
                lattice,
                *probes,
                seed,
            )?;
            verdicts.push(Verdict::at_most(
                "monotone_decrease",
                name,
                json!({ "ns": ns }),
                r.max_decrease,
                1e-12,
            ));
            verdicts.push(Verdict::at_most(
                "monotone_overshoot",
                name,
                json!({ "ns": ns }),
                r.max_overshoot,
                1e-12,
            ));
            for (&n, &gap) in ns.iter().zip(&r.gaps) {
                verdicts.push(Verdict::at_most(
                    "monotone_gap",
                    name,
                    json!({ "n": n, "h": lattice.h }),
                    gap,
                    1.0 / n as f64 + 2.0 * lattice.h,
                ));
            }
            json!(r)
        }
        CheckSpec::Weak {
            hs,
            bumps,
            field,
            control: c,
        } => {
            let a = control(instance, *c)?;
            let mut residuals = Vec::new();
            for &h in hs {
                let r: Vec<f64> = match field {
                    WeakField::Solution => {
                        let opts = LatticeOptions::new(h).with_storage(Storage::All);
                        let f = solve_with(instance, &opts, level, 0.0)?;
                        bumps
                            .iter()
                            .map(|b| weak_supersolution_residual(&f, a, b))
                            .collect::<Result<_>>()?
                    }
                    WeakField::Barrier => {
                        let lat =
                            LatticeSpec::build(instance, &LatticeOptions::new(h), level, 0.0)?;
                        let times: Vec<f64> = (0..=lat.steps).map(|k| lat.time(k)).collect();
                        let psi = instance.barrier()?;
                        let d = instance.dim();
                        bumps
                            .iter()
                            .map(|b| {
                                weak_residual_of(
                                    instance,
                                    a,
                                    0.0,
                                    &lat.grid,
                                    &times,
                                    |k, n| psi.value(times[k], &lat.grid.coords(n)[..d]),
                                    b,
                                )
                            })
                            .collect::<Result<_>>()?
                    }
                };
                residuals.push(r);
            }
            let h0 = hs[0];
            let stat = |r: f64| match field {
                WeakField::Solution => r.abs(),
                WeakField::Barrier => r,
            };
            let c_fit = residuals[0]
                .iter()
                .map(|&r| stat(r).max(0.0))
                .fold(0.0, f64::max)
                / h0;
            for (&h, r) in hs.iter().zip(&residuals).skip(1) {
                let worst = r.iter().map(|&r| stat(r)).fold(f64::NEG_INFINITY, f64::max);
                verdicts.push(Verdict::at_most(
                    "weak_residual",
                    name,
                    json!({ "h": h, "field": field, "c": c_fit }),
                    worst,
                    c_fit * h + 1e-12,
                ));
            }
            json!({ "hs": hs, "residuals": residuals, "c": c_fit })
        }
        CheckSpec::Coupled {
            triples,
            dt,
            ps,
            n_paths,
            policy,
        } => {
            let pol = policy.build(instance, seed)?;
            let cfg = PathConfig::for_instance(instance, *dt, *n_paths, seed);
            let k = instance.regularity.k;
            let mut rows = Vec::new();
            for tr in triples {
                for &p in ps {
                    let m = moment_rate(p, k);
                    let e =
                        coupled_moment_lhs(instance, &pol, p, m, tr.t, &tr.x, &tr.y, tr.eps, &cfg)?;
                    verdicts.push(Verdict::at_most(
                        "coupled_moment",
                        name,
                        json!({ "triple": tr, "p": p, "m": m }),
                        e.lhs - 3.0 * e.se,
                        e.bound,
                    ));
                    rows.push(json!({ "triple": tr, "estimate": e }));
                }
            }
            json!(rows)
        }
    };
    let file = out.join(format!("{}.json", check.name()));
    write_json(&file, &report)?;
    Ok((verdicts, vec![file]))
}

/// Criteria for a `δ` sweep: the first row fixes `C = sup|u − v|/δ`; later
/// rows must satisfy `sup|u − v| ≤ slack·C·δ`, second differences may grow
/// at most `growth` per halving, and the residual stays below `residual`.
pub fn shake_verdicts(
    name: &str,
    rows: &[SweepRow],
    slack: f64,
    growth: f64,
    residual: f64,
) -> Vec<Verdict> {
    let mut out = Vec::new();
    let Some(first) = rows.first() else {
        return out;
    };
    let c = first.sup_diff / first.delta;
    for (i, row) in rows.iter().enumerate() {
        let p = json!({ "delta": row.delta, "c": c });
        if i > 0 {
            out.push(Verdict::at_most(
                "shake_sup",
                name,
                p.clone(),
                row.sup_diff,
                slack * c * row.delta,
            ));
            let prev = &rows[i - 1];
            let halvings = (prev.delta / row.delta).log2().max(1.0);
            out.push(Verdict::at_most(
                "shake_second_growth",
                name,
                p.clone(),
                row.max_second / prev.max_second.max(f64::MIN_POSITIVE),
                growth.powf(halvings),
            ));
        }
        out.push(Verdict::at_most(
            "shake_residual",
            name,
            p,
            row.max_residual,
            residual,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(delta: f64, sup: f64, second: f64, res: f64) -> SweepRow {
        SweepRow {
            delta,
            sup_diff: sup,
            max_grad: 1.0,
            max_second: second,
            max_dt: 1.0,
            max_residual: res,
        }
    }

    #[test]
    fn linear_sweep_passes_and_stalled_sweep_fails() {
        let good = [
            row(0.2, 0.02, 1.0, -0.1),
            row(0.1, 0.01, 1.9, -0.05),
            row(0.05, 0.005, 3.6, 0.0),
        ];
        assert!(shake_verdicts("x", &good, 1.5, 2.2, 0.1)
            .iter()
            .all(|v| v.pass));
        let bad = [row(0.2, 0.02, 1.0, 0.0), row(0.1, 0.02, 3.0, 0.2)];
        let v = shake_verdicts("x", &bad, 1.5, 2.2, 0.1);
        assert_eq!(v.iter().filter(|v| !v.pass).count(), 3);
    }

    #[test]
    fn check_names_round_trip_through_json() {
        let spec: CheckSpec =
            serde_json::from_str(r#"{"check":"one_step","lattice":{"h":0.1}}"#).unwrap();
        assert_eq!(spec.name(), "one_step");
        let err =
            serde_json::from_str::<CheckSpec>(r#"{"check":"one_step","lattice":{"h":0.1},"x":1}"#);
        assert!(err.is_err());
    }
}
