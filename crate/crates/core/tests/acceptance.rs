//! Acceptance run: one PASS/FAIL line per criterion, then a summary.
//! The report is the outcome: the run exits zero so that a failing criterion
//! does not stop the remaining test targets. Set `ACCEPTANCE_STRICT=1` to
//! exit nonzero on any FAIL line.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use exitdp::gallery::{self, annulus_oracle, pure_discount_exact};
use exitdp::harness::{
    probe_set, rate_study, run_check, shake_verdicts, CheckSpec, PolicySpec, Start, Triple,
    WeakField,
};
use exitdp::model::Region;
use exitdp::shaking::shake_sweep;
use exitdp::solve::{solve_with, LatticeOptions};
use exitdp::verify::{barrier_residual, modulus_fit, Bump, PairSet, StoppingRule, Verdict};
use exitdp::{ControlId, ProblemInstance, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdicts_outcome(verdicts: &[Verdict]) -> Outcome {
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| {
            format!(
                "{}:{} {:.4e} > {:.4e}",
                v.instance, v.check, v.statistic, v.threshold
            )
        })
        .collect();
    Outcome {
        pass: failed.is_empty() && !verdicts.is_empty(),
        detail: if failed.is_empty() {
            format!("{} verdicts pass", verdicts.len())
        } else {
            format!(
                "{} of {} verdicts fail; first: {}",
                failed.len(),
                verdicts.len(),
                failed[0]
            )
        },
    }
}

fn within(budget: Duration, started: Instant) -> (bool, String) {
    let e = started.elapsed();
    (
        e <= budget,
        format!("{:.1}s of {}s", e.as_secs_f64(), budget.as_secs()),
    )
}

fn check(inst: &ProblemInstance, spec: CheckSpec, seed: u64, dir: &Path) -> Result<Vec<Verdict>> {
    Ok(run_check(inst, &spec, seed, dir)?.0)
}

fn away_from_lines(x: &[f64]) -> bool {
    (x[1].abs() - 1.0).abs() >= 0.1
}

fn c1_and_c2() -> Result<(Outcome, Outcome)> {
    let started = Instant::now();
    let inst = gallery::annulus_flow();
    let field = solve_with(&inst, &LatticeOptions::new(0.02), 1, 0.0)?;
    let mut worst: f64 = 0.0;
    for (t, x) in probe_set(&inst, 200, 11, &away_from_lines)? {
        let exact = annulus_oracle(t, x[0], x[1]).expect("probe inside the domain");
        worst = worst.max((field.eval(t, &x)? - exact).abs());
    }
    let (fast, time) = within(Duration::from_secs(120), started);
    let jump = field.eval(0.0, &[-0.5, 1.05])? - field.eval(0.0, &[-0.5, 0.95])?;
    Ok((
        Outcome {
            pass: worst <= 0.1 && fast,
            detail: format!("max error {worst:.4} (≤ 0.1), {time}"),
        },
        Outcome {
            pass: jump >= 1.0,
            detail: format!("jump {jump:.4} (≥ 1.0, exact {:.4})", 3f64.sqrt()),
        },
    ))
}

fn c3() -> Result<Outcome> {
    let started = Instant::now();
    let inst = gallery::pure_discount();
    let field = solve_with(&inst, &LatticeOptions::new(0.1).with_dt(1e-3), 1, 0.0)?;
    let exact = pure_discount_exact(0.0);
    let mut worst: f64 = 0.0;
    for i in 0..=18 {
        let x = -0.9 + 0.1 * i as f64;
        worst = worst.max((field.eval(0.0, &[x])? - exact).abs());
    }
    let (fast, time) = within(Duration::from_secs(10), started);
    Ok(Outcome {
        pass: worst <= 1e-3 && fast,
        detail: format!("max |v − (1 − 1/e)| {worst:.2e} (≤ 1e-3), {time}"),
    })
}

fn triples(inst: &ProblemInstance, seed: u64) -> Vec<Triple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < 5 {
        let (t, x) = inst.domain.sample_interior(&mut rng);
        let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(-0.1..0.1)).collect();
        if inst.contains(t, &y) {
            out.push(Triple {
                t,
                x,
                y,
                eps: rng.random_range(0.0..0.2),
            });
        }
    }
    out
}

fn c4(dir: &Path) -> Result<Outcome> {
    let started = Instant::now();
    let mut verdicts = Vec::new();
    for inst in [gallery::smooth_benchmark(), gallery::two_control_annulus()] {
        let spec = CheckSpec::Coupled {
            triples: triples(&inst, 4),
            dt: 1e-3,
            ps: vec![1.0, 2.0],
            n_paths: 10_000,
            policy: PolicySpec::Random { cell: 0.25 },
        };
        verdicts.extend(check(&inst, spec, 4, dir)?);
    }
    let (fast, time) = within(Duration::from_secs(120), started);
    let mut o = verdicts_outcome(&verdicts);
    o.pass &= fast;
    o.detail = format!("{}, {time}", o.detail);
    Ok(o)
}

fn c5(dir: &Path) -> Result<Outcome> {
    let mut verdicts = Vec::new();
    for name in gallery::names() {
        let inst = gallery::build(name, &Default::default())?;
        verdicts.extend(check(
            &inst,
            CheckSpec::OneStep {
                lattice: LatticeOptions::new(0.1),
            },
            5,
            dir,
        )?);
    }
    let interval = Region::cube(1, 0.5);
    let cases = [
        (
            gallery::annulus_flow(),
            LatticeOptions::new(0.02).with_dt(0.02),
            vec![
                Start {
                    t: 0.0,
                    x: vec![0.0, 1.5],
                },
                Start {
                    t: 1.0,
                    x: vec![-1.5, 0.5],
                },
            ],
            Region::annulus(2, 1.2, 1.8),
            1e-3,
        ),
        (
            gallery::singular_control(8.0),
            LatticeOptions::new(0.025),
            vec![
                Start {
                    t: 0.0,
                    x: vec![0.0],
                },
                Start {
                    t: -0.5,
                    x: vec![0.3],
                },
            ],
            interval.clone(),
            1e-4,
        ),
        (
            gallery::smooth_benchmark(),
            LatticeOptions::new(0.025),
            vec![
                Start {
                    t: 0.0,
                    x: vec![0.0],
                },
                Start {
                    t: -0.5,
                    x: vec![0.3],
                },
            ],
            interval.clone(),
            1e-4,
        ),
        (
            gallery::two_diffusion_interval(),
            LatticeOptions::new(0.025),
            vec![
                Start {
                    t: 0.0,
                    x: vec![0.0],
                },
                Start {
                    t: -0.5,
                    x: vec![0.3],
                },
            ],
            interval,
            1e-4,
        ),
    ];
    for (inst, lattice, starts, region, dt) in cases {
        let spec = CheckSpec::Dpp {
            lattice,
            starts,
            rules: vec![
                StoppingRule::FixedHorizon { s: 0.5 },
                StoppingRule::SubdomainExit { region },
            ],
            dt,
            n_paths: 2000,
            policies: 8,
            cell: 0.25,
            floor: 0.05,
        };
        verdicts.extend(check(&inst, spec, 7, dir)?);
    }
    Ok(verdicts_outcome(&verdicts))
}

fn c6(dir: &Path) -> Result<Outcome> {
    let spec = CheckSpec::Band {
        lattice: LatticeOptions::new(0.05),
        k1: Some(1.0),
        factor: 2.0,
    };
    Ok(verdicts_outcome(&check(
        &gallery::brownian_annulus(),
        spec,
        6,
        dir,
    )?))
}

fn c7() -> Result<Outcome> {
    let inst = gallery::brownian_annulus();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_res = f64::NEG_INFINITY;
    let mut max_dev: f64 = 0.0;
    for _ in 0..2000 {
        let r = rng.random_range(1.001..=1.999);
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let t = rng.random_range(-1.0..4.0);
        let res = barrier_residual(&inst, ControlId(0), t, &[r * th.cos(), r * th.sin()], 0.0)?;
        max_dev = max_dev.max((res - (-4.0 + 3.0 / r)).abs());
        max_res = max_res.max(res);
    }
    Ok(Outcome {
        pass: max_dev <= 1e-8 && max_res <= -1.0 + 1e-3,
        detail: format!("|R − (−4 + 3/r)| ≤ {max_dev:.1e}, max R {max_res:.5}"),
    })
}

fn c8(dir: &Path) -> Result<Outcome> {
    let smooth = gallery::smooth_benchmark();
    let spec = CheckSpec::Modulus {
        h: 0.05,
        pairs: 200,
        space_sep: 0.05,
        time_sep: 0.04,
        ratio: 1.25,
    };
    let mut verdicts = check(&smooth, spec, 3, dir)?;
    let sc = gallery::singular_control(8.0);
    let pairs = PairSet::sample(&sc, 200, 0.05, 0.04, 3)?;
    let field = solve_with(&sc, &LatticeOptions::new(0.05), sc.controls.n_levels(), 0.0)?;
    let lip = modulus_fit(&field, None, &pairs)?.lipschitz_x;
    verdicts.push(Verdict::at_most(
        "lipschitz_x",
        &sc.name,
        serde_json::json!({ "h": 0.05 }),
        lip,
        1.05,
    ));
    let mut o = verdicts_outcome(&verdicts);
    o.detail = format!("{}; singular Lipschitz {lip:.3}", o.detail);
    Ok(o)
}

fn c9() -> Result<Outcome> {
    let started = Instant::now();
    let deltas = [0.2, 0.1, 0.05];
    let mut verdicts = Vec::new();
    for (inst, h) in [
        (gallery::smooth_benchmark(), 0.01),
        (gallery::two_control_annulus(), 0.025),
    ] {
        let rows = shake_sweep(&inst, &deltas, &LatticeOptions::new(h), 6)?;
        verdicts.extend(shake_verdicts(&inst.name, &rows, 1.5, 2.2, 0.1));
    }
    let (fast, time) = within(Duration::from_secs(600), started);
    let mut o = verdicts_outcome(&verdicts);
    o.pass &= fast;
    o.detail = format!("{}, {time}", o.detail);
    Ok(o)
}

fn c10() -> Result<Outcome> {
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let smooth = rate_study(&gallery::smooth_benchmark(), &hs, 200, 10, 0.45)?;
    let flow = rate_study(&gallery::annulus_flow(), &hs, 200, 10, 0.45)?;
    Ok(Outcome {
        pass: smooth.pass && flow.pass,
        detail: format!(
            "orders {:.3} (smooth), {:.3} (annulus_flow); need ≥ 0.45",
            smooth.order, flow.order
        ),
    })
}

fn c11(dir: &Path) -> Result<Outcome> {
    let spec = CheckSpec::MonotoneG {
        lattice: LatticeOptions::new(0.05),
        ns: vec![1, 2, 4, 8],
        probes: 200,
    };
    Ok(verdicts_outcome(&check(
        &gallery::smooth_benchmark(),
        spec,
        11,
        dir,
    )?))
}

fn c12(dir: &Path) -> Result<Outcome> {
    let bumps: Vec<Bump> = (0..5)
        .map(|i| {
            Bump::new(
                -0.5 + 0.25 * i as f64,
                vec![-0.4 + 0.2 * i as f64],
                0.3,
                0.5,
            )
        })
        .collect();
    let spec = CheckSpec::Weak {
        hs: vec![0.1, 0.05, 0.025, 0.0125],
        bumps,
        field: WeakField::Solution,
        control: 0,
    };
    let mut verdicts = check(&gallery::smooth_benchmark(), spec, 12, dir)?;
    let ring: Vec<Bump> = (0..5)
        .map(|i| {
            let th = i as f64;
            Bump::new(
                0.5 * i as f64,
                vec![1.5 * th.cos(), 1.5 * th.sin()],
                0.4,
                0.3,
            )
        })
        .collect();
    let spec = CheckSpec::Weak {
        hs: vec![0.1, 0.05, 0.025],
        bumps: ring,
        field: WeakField::Barrier,
        control: 0,
    };
    verdicts.extend(check(&gallery::brownian_annulus(), spec, 12, dir)?);
    Ok(verdicts_outcome(&verdicts))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir = tmp.path();
    let mut results: Vec<(u32, &str, std::result::Result<Outcome, String>)> = Vec::new();
    match c1_and_c2() {
        Ok((a, b)) => {
            results.push((1, "annulus flow oracle", Ok(a)));
            results.push((2, "annulus flow discontinuity", Ok(b)));
        }
        Err(e) => {
            results.push((1, "annulus flow oracle", Err(e.to_string())));
            results.push((2, "annulus flow discontinuity", Err(e.to_string())));
        }
    }
    results.push((3, "closed-form discount", c3().map_err(|e| e.to_string())));
    results.push((
        4,
        "coupled moment bound",
        c4(dir).map_err(|e| e.to_string()),
    ));
    results.push((
        5,
        "dynamic programming principle",
        c5(dir).map_err(|e| e.to_string()),
    ));
    results.push((6, "barrier band", c6(dir).map_err(|e| e.to_string())));
    results.push((
        7,
        "annulus barrier residual",
        c7().map_err(|e| e.to_string()),
    ));
    results.push((8, "continuity moduli", c8(dir).map_err(|e| e.to_string())));
    results.push((9, "shaking sweep", c9().map_err(|e| e.to_string())));
    results.push((10, "convergence rate", c10().map_err(|e| e.to_string())));
    results.push((
        11,
        "monotone boundary sequence",
        c11(dir).map_err(|e| e.to_string()),
    ));
    results.push((
        12,
        "weak supersolution",
        c12(dir).map_err(|e| e.to_string()),
    ));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, what, r) in &results {
        let (pass, detail) = match r {
            Ok(o) => (o.pass, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {id:>2} {what}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "{} of {} criteria pass",
        results.len() - failed,
        results.len()
    );
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
