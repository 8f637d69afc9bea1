use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery;
use crate::model::ProblemInstance;
use crate::solve::{solve_with, LatticeOptions};

/// Per-`h` max errors over a fixed probe set and the fitted log-log slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub instance: String,
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
    pub threshold: f64,
    pub probes: usize,
    /// `closed_form` or `finest_grid`.
    pub oracle: String,
    pub pass: bool,
}

type Oracle = Box<dyn Fn(f64, &[f64]) -> Result<f64> + Sync>;
type Filter = Box<dyn Fn(&[f64]) -> bool + Sync>;

/// Closed-form oracle of a gallery instance together with a probe filter.
fn closed_form(instance: &ProblemInstance) -> Option<(Oracle, Filter)> {
    let all = || Box::new(|_: &[f64]| true) as Filter;
    match instance.name.as_str() {
        "annulus_flow" => Some((
            Box::new(|t, x| gallery::annulus_oracle(t, x[0], x[1])),
            // stay away from the discontinuity lines y = ±1
            Box::new(|x: &[f64]| (x[1].abs() - 1.0).abs() >= 0.1),
        )),
        n if n.starts_with("smooth_benchmark") => {
            Some((Box::new(|t, x| Ok(gallery::smooth_exact(t, x))), all()))
        }
        "pure_discount" => Some((Box::new(|t, _| Ok(gallery::pure_discount_exact(t))), all())),
        _ => None,
    }
}

/// Seeded interior probes `(t, x)` with `t` fixed at `probe_time` when that
/// time slice meets `Q`, and drawn with the point otherwise.
pub fn probe_set(
    instance: &ProblemInstance,
    count: usize,
    seed: u64,
    keep: &dyn Fn(&[f64]) -> bool,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 10_000 * count.max(1) {
            return Err(Error::Config("could not place the requested probes".into()));
        }
        let (t, x) = instance.domain.sample_interior(&mut rng);
        let t = if instance.contains(0.0, &x) { 0.0 } else { t };
        if keep(&x) {
            out.push((t, x));
        }
    }
    Ok(out)
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(hs: &[f64], errors: &[f64]) -> Result<f64> {
    if errors.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::Numeric {
            step: 0,
            what: format!("rate study errors must be positive, got {errors:?}"),
        });
    }
    let n = hs.len() as f64;
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Solves at every `h` and measures the max error over a seeded probe set
/// against the closed form, or against a solve at half the finest `h` when
/// the instance has none.
pub fn rate_study(
    instance: &ProblemInstance,
    hs: &[f64],
    probes: usize,
    seed: u64,
    threshold: f64,
) -> Result<RateReport> {
    if hs.len() < 3 {
        return Err(Error::Config(format!(
            "a rate study needs at least 3 values of h, got {}",
            hs.len()
        )));
    }
    let mut sorted = hs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("duplicate h values in {hs:?}")));
    }
    if sorted.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Config("h values must be positive".into()));
    }
    let level = instance.controls.n_levels();
    let (oracle, keep, kind): (Oracle, Filter, &str) = match closed_form(instance) {
        Some((o, k)) => (o, k, "closed_form"),
        None => {
            let finest = sorted.last().copied().unwrap_or(0.0) / 2.0;
            let f = solve_with(instance, &LatticeOptions::new(finest), level, 0.0)?;
            (
                Box::new(move |t, x| f.eval(t, x)),
                Box::new(|_: &[f64]| true),
                "finest_grid",
            )
        }
    };
    let points = probe_set(instance, probes, seed, &*keep)?;
    let exact: Vec<f64> = points
        .iter()
        .map(|(t, x)| oracle(*t, x))
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = sorted
        .iter()
        .map(|&h| -> Result<f64> {
            let f = solve_with(instance, &LatticeOptions::new(h), level, 0.0)?;
            let errs: Vec<f64> = points
                .par_iter()
                .zip(&exact)
                .map(|((t, x), e)| f.eval(*t, x).map(|v| (v - e).abs()))
                .collect::<Result<_>>()?;
            Ok(errs.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    let order = fitted_order(&sorted, &errors)?;
    Ok(RateReport {
        instance: instance.name.clone(),
        hs: sorted,
        errors,
        order,
        threshold,
        probes,
        oracle: kind.into(),
        pass: order >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn fitted_order_recovers_power_laws() {
        let hs = [0.1, 0.05, 0.025];
        for p in [0.5, 1.0, 2.0] {
            let e: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powf(p)).collect();
            assert!((fitted_order(&hs, &e).unwrap() - p).abs() < 1e-12);
        }
        assert!(fitted_order(&hs, &[0.1, 0.0, 0.1]).is_err());
    }

    #[test]
    fn short_or_duplicate_sweeps_are_rejected() {
        let inst = gallery::pure_discount();
        assert!(matches!(
            rate_study(&inst, &[0.1, 0.05], 5, 0, 0.45),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            rate_study(&inst, &[0.1, 0.1, 0.05], 5, 0, 0.45),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn probes_respect_the_filter() {
        let inst = gallery::annulus_flow();
        let keep = |x: &[f64]| x[0] > 0.0;
        let p = probe_set(&inst, 50, 1, &keep).unwrap();
        assert_eq!(p.len(), 50);
        assert!(p.iter().all(|(t, x)| x[0] > 0.0 && inst.contains(*t, x)));
    }
}
