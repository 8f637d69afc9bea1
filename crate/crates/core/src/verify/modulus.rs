use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::simulate::moment_rate;
use crate::solve::ValueField;

/// Point pairs for continuity quotients: `(t, x, y)` in space and
/// `(s, t, x)` in time, all inside `Q`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub space: Vec<(f64, Vec<f64>, Vec<f64>)>,
    pub time: Vec<(f64, f64, Vec<f64>)>,
}

impl PairSet {
    /// `n` spatial pairs at distance `space_sep` and `n` time pairs at lag
    /// `time_sep`, drawn uniformly inside `Q`.
    pub fn sample(
        instance: &ProblemInstance,
        n: usize,
        space_sep: f64,
        time_sep: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(space_sep > 0.0) || !(time_sep > 0.0) || time_sep > 1.0 {
            return Err(Error::Config(format!(
                "need positive separations with time lag ≤ 1, got {space_sep}, {time_sep}"
            )));
        }
        let d = instance.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = PairSet::default();
        let limit = 1000 * n.max(1);
        let mut tries = 0;
        while out.space.len() < n && tries < limit {
            tries += 1;
            let (t, x) = instance.domain.sample_interior(&mut rng);
            let mut u: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            u.iter_mut().for_each(|v| *v *= space_sep / norm);
            let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();
            if instance.contains(t, &y) {
                out.space.push((t, x, y));
            }
        }
        tries = 0;
        while out.time.len() < n && tries < limit {
            tries += 1;
            let (t, x) = instance.domain.sample_interior(&mut rng);
            if instance.contains(t + time_sep, &x) {
                out.time.push((t, t + time_sep, x));
            }
        }
        if out.space.len() < n || out.time.len() < n {
            return Err(Error::Config(format!(
                "could only place {} space and {} time pairs of the {n} requested",
                out.space.len(),
                out.time.len()
            )));
        }
        Ok(out)
    }
}

/// Worst continuity quotients of a solved field and, when a perturbed field
/// is supplied, the envelope `N e^{(T − t)(M − λ)₊}(|x − y| + ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    /// `max |v(t, x) − v(t, y)| / |x − y|`.
    pub lipschitz_x: f64,
    /// `max |v(s, x) − v(t, x)| / |s − t|^{1/2}`.
    pub holder_t: f64,
    /// Smallest envelope constant `N` over the `M` sweep.
    pub envelope_n: Option<f64>,
    pub envelope_m: Option<f64>,
    /// `(M, N(M))` for every swept `M`.
    pub sweep: Vec<(f64, f64)>,
    pub pairs: usize,
}

pub fn modulus_fit(
    field: &ValueField,
    perturbed: Option<&ValueField>,
    pairs: &PairSet,
) -> Result<ModulusReport> {
    if pairs.space.is_empty() || pairs.time.is_empty() {
        return Err(Error::Config(
            "modulus fit needs space and time pairs".into(),
        ));
    }
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut lipschitz_x: f64 = 0.0;
    for (t, x, y) in &pairs.space {
        let q = (field.eval(*t, x)? - field.eval(*t, y)?).abs() / dist(x, y);
        lipschitz_x = lipschitz_x.max(q);
    }
    let mut holder_t: f64 = 0.0;
    for (s, t, x) in &pairs.time {
        if (t - s).abs() > 1.0 {
            return Err(Error::Config("time pairs must be at most 1 apart".into()));
        }
        let q = (field.eval(*s, x)? - field.eval(*t, x)?).abs() / (t - s).abs().sqrt();
        holder_t = holder_t.max(q);
    }
    let (mut envelope_n, mut envelope_m, mut sweep) = (None, None, Vec::new());
    if let Some(pf) = perturbed {
        let inst = field.instance();
        let reg = &inst.regularity;
        let k = reg.k;
        let terminal = inst.domain.bbox().t1;
        let eps = pf.eps();
        let mut ms = vec![
            0.0,
            k,
            2.0 * k,
            4.0 * k,
            moment_rate(1.0, k),
            moment_rate(2.0, k),
        ];
        ms.dedup();
        let diffs: Vec<(f64, f64)> = pairs
            .space
            .iter()
            .map(|(t, x, y)| -> Result<(f64, f64)> {
                let gap = (field.eval(*t, x)? - pf.eval(*t, y)?).abs();
                Ok((gap / (dist(x, y) + eps), terminal - t))
            })
            .collect::<Result<_>>()?;
        for m in ms {
            let n = diffs
                .iter()
                .map(|(q, span)| q / (span * (m - reg.lambda).max(0.0)).exp())
                .fold(0.0, f64::max);
            sweep.push((m, n));
            if envelope_n.is_none_or(|best| n < best) {
                envelope_n = Some(n);
                envelope_m = Some(m);
            }
        }
    }
    Ok(ModulusReport {
        lipschitz_x,
        holder_t,
        envelope_n,
        envelope_m,
        sweep,
        pairs: pairs.space.len() + pairs.time.len(),
    })
}
