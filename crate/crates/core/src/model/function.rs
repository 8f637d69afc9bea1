use std::fmt;
use std::sync::Arc;

use super::MAX_DIM;
use crate::error::{Error, Result};

/// Value and derivatives `(u, D_t u, D_i u, D_ij u)` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dt: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Jet {
            value,
            ..Jet::default()
        }
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.value *= s;
        self.dt *= s;
        self.grad.iter_mut().for_each(|g| *g *= s);
        self.hess.iter_mut().flatten().for_each(|h| *h *= s);
        self
    }

    pub fn plus(mut self, other: &Jet) -> Self {
        self.value += other.value;
        self.dt += other.dt;
        for i in 0..MAX_DIM {
            self.grad[i] += other.grad[i];
            for j in 0..MAX_DIM {
                self.hess[i][j] += other.hess[i][j];
            }
        }
        self
    }
}

pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type JetFn = Arc<dyn Fn(f64, &[f64]) -> Jet + Send + Sync>;

#[derive(Clone)]
enum Derivatives {
    Analytic(JetFn),
    Central { step: f64 },
    Unavailable,
}

/// A function of `(t, x)` together with a way to get its derivatives:
/// analytic when supplied, central differences when only a step is known.
#[derive(Clone)]
pub struct SmoothFunction {
    dim: usize,
    value: ScalarFn,
    derivatives: Derivatives,
}

impl SmoothFunction {
    /// Values only; `jet` fails with a capability error until derivatives
    /// are attached.
    pub fn new(dim: usize, value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            derivatives: Derivatives::Unavailable,
        }
    }

    /// Values with central-difference derivatives of the given step.
    pub fn differenced(
        dim: usize,
        step: f64,
        value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, value).with_step(step)
    }

    /// Analytic jet; the value is read off the jet.
    pub fn analytic(dim: usize, jet: impl Fn(f64, &[f64]) -> Jet + Send + Sync + 'static) -> Self {
        let jet: JetFn = Arc::new(jet);
        let j = jet.clone();
        Self {
            dim,
            value: Arc::new(move |t, x| j(t, x).value),
            derivatives: Derivatives::Analytic(jet),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::analytic(dim, move |_, _| Jet::constant(c))
    }

    pub fn with_step(mut self, step: f64) -> Self {
        assert!(step > 0.0, "difference step must be positive");
        self.derivatives = Derivatives::Central { step };
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic(&self) -> bool {
        matches!(self.derivatives, Derivatives::Analytic(_))
    }

    pub fn has_derivatives(&self) -> bool {
        !matches!(self.derivatives, Derivatives::Unavailable)
    }

    #[inline]
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.value)(t, x)
    }

    pub fn jet(&self, t: f64, x: &[f64]) -> Result<Jet> {
        match &self.derivatives {
            Derivatives::Analytic(j) => Ok(j(t, x)),
            Derivatives::Central { step } => Ok(self.central_jet(t, x, *step)),
            Derivatives::Unavailable => Err(Error::Capability(
                "function has no derivative evaluator".into(),
            )),
        }
    }

    /// Central-difference jet regardless of what else is available.
    pub fn central_jet(&self, t: f64, x: &[f64], step: f64) -> Jet {
        let d = self.dim;
        let f = |t: f64, y: &[f64]| (self.value)(t, y);
        let mut y = [0.0; MAX_DIM];
        y[..d].copy_from_slice(&x[..d]);
        let u0 = f(t, &y[..d]);
        let mut jet = Jet {
            value: u0,
            dt: (f(t + step, &y[..d]) - f(t - step, &y[..d])) / (2.0 * step),
            ..Jet::default()
        };
        let h2 = step * step;
        for i in 0..d {
            y[i] = x[i] + step;
            let up = f(t, &y[..d]);
            y[i] = x[i] - step;
            let dn = f(t, &y[..d]);
            y[i] = x[i];
            jet.grad[i] = (up - dn) / (2.0 * step);
            jet.hess[i][i] = (up - 2.0 * u0 + dn) / h2;
            for j in 0..i {
                let mut corner = |si: f64, sj: f64| {
                    y[i] = x[i] + si * step;
                    y[j] = x[j] + sj * step;
                    let v = f(t, &y[..d]);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                let m = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                    + corner(-1.0, -1.0))
                    / (4.0 * h2);
                jet.hess[i][j] = m;
                jet.hess[j][i] = m;
            }
        }
        jet
    }

    pub fn plus(&self, other: &SmoothFunction) -> SmoothFunction {
        let (a, b) = (self.clone(), other.clone());
        match (&self.derivatives, &other.derivatives) {
            (Derivatives::Analytic(ja), Derivatives::Analytic(jb)) => {
                let (ja, jb) = (ja.clone(), jb.clone());
                SmoothFunction::analytic(self.dim, move |t, x| ja(t, x).plus(&jb(t, x)))
            }
            _ => {
                let mut out =
                    SmoothFunction::new(self.dim, move |t, x| a.value(t, x) + b.value(t, x));
                out.derivatives = match (&self.derivatives, &other.derivatives) {
                    (Derivatives::Unavailable, _) | (_, Derivatives::Unavailable) => {
                        Derivatives::Unavailable
                    }
                    (Derivatives::Central { step }, _) | (_, Derivatives::Central { step }) => {
                        Derivatives::Central { step: *step }
                    }
                    _ => unreachable!(),
                };
                out
            }
        }
    }
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.derivatives {
            Derivatives::Analytic(_) => "analytic",
            Derivatives::Central { .. } => "central",
            Derivatives::Unavailable => "values-only",
        };
        f.debug_struct("SmoothFunction")
            .field("dim", &self.dim)
            .field("derivatives", &kind)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> SmoothFunction {
        SmoothFunction::analytic(2, |t, x| {
            let (a, b) = (x[0], x[1]);
            Jet {
                value: t * a * a * b + b * b * b,
                dt: a * a * b,
                grad: [2.0 * t * a * b, t * a * a + 3.0 * b * b, 0.0],
                hess: [
                    [2.0 * t * b, 2.0 * t * a, 0.0],
                    [2.0 * t * a, 6.0 * b, 0.0],
                    [0.0; 3],
                ],
            }
        })
    }

    #[test]
    fn central_differences_converge_quadratically() {
        let f = cubic();
        let exact = f.jet(0.7, &[0.3, -0.4]).unwrap();
        let err = |step: f64| {
            let j = f.central_jet(0.7, &[0.3, -0.4], step);
            let mut e: f64 = (j.dt - exact.dt).abs();
            for i in 0..2 {
                e = e.max((j.grad[i] - exact.grad[i]).abs());
                for k in 0..2 {
                    e = e.max((j.hess[i][k] - exact.hess[i][k]).abs());
                }
            }
            e
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 < 1e-3);
        assert!(e2 < 0.3 * e1, "{e1} -> {e2}");
    }

    #[test]
    fn values_only_function_has_no_jet() {
        let f = SmoothFunction::new(1, |_, x| x[0]);
        assert!(matches!(f.jet(0.0, &[0.0]), Err(Error::Capability(_))));
    }
}
