use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{ControlId, ProblemInstance, MAX_DIM};
use crate::solve::ValueField;

/// Test function `(1 − s²)³₊ (1 − |u|²)³₊` with `s = (t − t₀)/τ` and
/// `u = (x − x₀)/ρ`; derivatives are exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub tau: f64,
    pub rho: f64,
}

impl Bump {
    pub fn new(t0: f64, x0: Vec<f64>, tau: f64, rho: f64) -> Self {
        Self { t0, x0, tau, rho }
    }

    /// `(χ, D_tχ, ∇χ)`.
    pub fn eval(&self, t: f64, x: &[f64]) -> (f64, f64, [f64; MAX_DIM]) {
        let s = (t - self.t0) / self.tau;
        let mut u = [0.0; MAX_DIM];
        let mut u2 = 0.0;
        for (i, (xi, ci)) in x.iter().zip(&self.x0).enumerate() {
            u[i] = (xi - ci) / self.rho;
            u2 += u[i] * u[i];
        }
        let mut grad = [0.0; MAX_DIM];
        if s.abs() >= 1.0 || u2 >= 1.0 {
            return (0.0, 0.0, grad);
        }
        let p = (1.0 - s * s).powi(3);
        let dp = -6.0 * s * (1.0 - s * s).powi(2) / self.tau;
        let q = (1.0 - u2).powi(3);
        let dq = -6.0 * (1.0 - u2).powi(2) / self.rho;
        for i in 0..x.len() {
            grad[i] = p * dq * u[i];
        }
        (p * q, dp * q, grad)
    }

    /// Errors unless the closed support lies inside `Q`.
    pub fn check_support(&self, instance: &ProblemInstance) -> Result<()> {
        let d = instance.dim();
        if self.x0.len() != d || !(self.tau > 0.0) || !(self.rho > 0.0) {
            return Err(Error::Input(
                "test function does not match the instance".into(),
            ));
        }
        let (t_lo, t_hi) = (self.t0 - self.tau, self.t0 + self.tau);
        let inside = match (instance.domain.region(), instance.domain.terminal_time()) {
            (Some(region), Some(_)) => {
                let b = instance.domain.bbox();
                region.gauge(&self.x0) > self.rho && t_lo > b.t0 && t_hi < b.t1
            }
            _ => {
                // sample the boundary of the support cylinder
                let dirs = 64;
                (0..=8).all(|k| {
                    let t = t_lo + (t_hi - t_lo) * k as f64 / 8.0;
                    (0..dirs).all(|j| {
                        let mut x = self.x0.clone();
                        let th = 2.0 * std::f64::consts::PI * j as f64 / dirs as f64;
                        x[0] += self.rho * if d == 1 { th.cos().signum() } else { th.cos() };
                        if d >= 2 {
                            x[1] += self.rho * th.sin();
                        }
                        instance.contains(t, &x)
                    })
                })
            }
        };
        if inside {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "support of the test function centred at ({}, {:?}) touches the boundary",
                self.t0, self.x0
            )))
        }
    }
}

/// Weak form of `D_t v + L^α v + f^α` against `χ`,
/// `∫ −v D_tχ − c v χ + χ b·∇v + χ f − (χ ∂_i a^{ij} + a^{ij} ∂_iχ) ∂_j v`,
/// by the rectangle rule on `grid × times` with forward differences of the
/// node values `value(k, n)`.
pub fn weak_residual_of(
    instance: &ProblemInstance,
    control: ControlId,
    eps: f64,
    grid: &Grid,
    times: &[f64],
    value: impl Fn(usize, usize) -> f64,
    chi: &Bump,
) -> Result<f64> {
    chi.check_support(instance)?;
    let d = grid.dim();
    let d1 = instance.noise_dim();
    let h = grid.h;
    let strides = grid.strides();
    let vol = h.powi(d as i32);
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&n| {
            let x = grid.coords(n);
            x[..d]
                .iter()
                .zip(&chi.x0)
                .all(|(a, c)| (a - c).abs() < chi.rho)
                && grid.is_inner(n)
        })
        .collect();
    let diffusion = |t: f64, x: &[f64]| instance.sample(control, t, x, eps).diffusion(d, d1);
    let mut total = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        let t = times[k];
        if (t - chi.t0).abs() >= chi.tau {
            continue;
        }
        let wt = times[k + 1] - t;
        for &n in &nodes {
            let x = grid.coords(n);
            let x = &x[..d];
            let (c, ct, cg) = chi.eval(t, x);
            if c == 0.0 && cg[..d].iter().all(|g| *g == 0.0) {
                continue;
            }
            let v = value(k, n);
            let mut dv = [0.0; MAX_DIM];
            for j in 0..d {
                dv[j] = (value(k, n + strides[j]) - v) / h;
            }
            let s = instance.sample(control, t, x, eps);
            let a = s.diffusion(d, d1);
            // ∂_i a^{ij} by central differences of the coefficients
            let mut div_a = [0.0; MAX_DIM];
            for i in 0..d {
                let mut xp = [0.0; MAX_DIM];
                let mut xm = [0.0; MAX_DIM];
                xp[..d].copy_from_slice(x);
                xm[..d].copy_from_slice(x);
                xp[i] += h;
                xm[i] -= h;
                let (ap, am) = (diffusion(t, &xp[..d]), diffusion(t, &xm[..d]));
                for j in 0..d {
                    div_a[j] += (ap[i][j] - am[i][j]) / (2.0 * h);
                }
            }
            let mut integrand = -v * ct - s.discount * v * c + c * s.reward;
            for j in 0..d {
                integrand += c * s.drift[j] * dv[j];
                let mut flux = c * div_a[j];
                for i in 0..d {
                    flux += a[i][j] * cg[i];
                }
                integrand -= flux * dv[j];
            }
            total += wt * vol * integrand;
        }
    }
    Ok(total)
}

/// [`weak_residual_of`] for a solved field; every lattice step inside the
/// time support of `χ` must be stored.
pub fn weak_supersolution_residual(
    field: &ValueField,
    control: ControlId,
    chi: &Bump,
) -> Result<f64> {
    let slices = field.slices();
    let inside: Vec<usize> = (0..slices.len())
        .filter(|&i| (slices[i].t - chi.t0).abs() < chi.tau + field.lattice.dt)
        .collect();
    if inside
        .windows(2)
        .any(|w| slices[w[1]].step != slices[w[0]].step + 1)
    {
        return Err(Error::Precondition(
            "field does not store every slice under the test function".into(),
        ));
    }
    let times: Vec<f64> = slices.iter().map(|s| s.t).collect();
    weak_residual_of(
        field.instance(),
        control,
        field.eps(),
        field.grid(),
        &times,
        |k, n| slices[k].values[n],
        chi,
    )
}
