use super::{CoeffSample, ControlId, Jet, ProblemInstance, SmoothFunction};
use crate::error::{Error, Result};

/// `D_t u + a^{ij} D_ij u + b^i D_i u − c u` for one coefficient sample.
pub fn apply_generator(sample: &CoeffSample, d: usize, d1: usize, jet: &Jet) -> f64 {
    let a = sample.diffusion(d, d1);
    let mut out = jet.dt - sample.discount * jet.value;
    for i in 0..d {
        out += sample.drift[i] * jet.grad[i];
        for j in 0..d {
            out += a[i][j] * jet.hess[i][j];
        }
    }
    out
}

/// `(D_t + L^α(ε)) probe` at an interior point.
pub fn operator_apply(
    instance: &ProblemInstance,
    control: ControlId,
    probe: &SmoothFunction,
    t: f64,
    x: &[f64],
    eps: f64,
) -> Result<f64> {
    if !instance.contains(t, x) {
        return Err(Error::Domain(format!(
            "({t}, {x:?}) is not inside the domain"
        )));
    }
    let jet = probe.jet(t, x)?;
    let sample = instance.sample(control, t, x, eps);
    Ok(apply_generator(
        &sample,
        instance.dim(),
        instance.noise_dim(),
        &jet,
    ))
}
