use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    Barrier, BoundaryData, CoeffSample, ControlId, ControlSpace, ControlledCoefficients,
    DomainSpec, PointClass,
};
use crate::error::{Error, Result};

/// Declared regularity constants of a problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    /// Lipschitz constant of `σ, b` in `x` and `ε`.
    pub k: f64,
    /// Bound and Lipschitz constant of `c, f, g`.
    pub k1: f64,
    /// Lower bound of the discount rate.
    pub lambda: f64,
    /// Bound on `|σ|, |b|, |c|, |f|`.
    pub sup_bound: f64,
    /// Largest perturbation scale for which the `ε`-family is declared.
    pub eps0: f64,
}

impl Default for Regularity {
    fn default() -> Self {
        Self {
            k: 1.0,
            k1: 1.0,
            lambda: 0.0,
            sup_bound: f64::INFINITY,
            eps0: 0.0,
        }
    }
}

/// One controlled exit-time problem.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub controls: ControlSpace,
    pub coefficients: Arc<dyn ControlledCoefficients>,
    pub domain: DomainSpec,
    pub boundary: BoundaryData,
    pub barrier: Option<Barrier>,
    pub regularity: Regularity,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("controls", &self.controls.labels())
            .field("domain", &self.domain)
            .field("regularity", &self.regularity)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        controls: ControlSpace,
        coefficients: impl ControlledCoefficients + 'static,
        domain: DomainSpec,
        boundary: BoundaryData,
    ) -> Result<Self> {
        let out = Self {
            name: name.into(),
            controls,
            coefficients: Arc::new(coefficients),
            domain,
            boundary,
            barrier: None,
            regularity: Regularity::default(),
        };
        out.check_dimensions()?;
        Ok(out)
    }

    pub fn with_barrier(mut self, barrier: Barrier) -> Self {
        self.barrier = Some(barrier);
        self
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn with_boundary(mut self, boundary: BoundaryData) -> Self {
        self.boundary = boundary;
        self
    }

    fn check_dimensions(&self) -> Result<()> {
        let d = self.domain.dim();
        if self.coefficients.state_dim() != d {
            return Err(Error::Input(format!(
                "coefficients act on dimension {} but the domain has dimension {d}",
                self.coefficients.state_dim()
            )));
        }
        if let Some(b) = &self.barrier {
            if b.psi.dim() != d {
                return Err(Error::Input("barrier dimension mismatch".into()));
            }
            if let Some(a) = b.favored {
                if !self.controls.contains(a) {
                    return Err(Error::Input(format!("favored control {a} is unknown")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.coefficients.noise_dim()
    }

    #[inline]
    pub fn sample(&self, control: ControlId, t: f64, x: &[f64], eps: f64) -> CoeffSample {
        self.coefficients.sample(control, t, x, eps)
    }

    #[inline]
    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        self.domain.contains(t, x)
    }

    #[inline]
    pub fn g(&self, t: f64, x: &[f64], eps: f64) -> f64 {
        self.boundary.g(t, x, eps)
    }

    pub fn classify(&self, t: f64, x: &[f64]) -> PointClass {
        self.domain.classify(t, x)
    }

    /// Largest time of the domain's bounding box.
    pub fn horizon(&self) -> f64 {
        self.domain.bbox().t1
    }

    pub fn level(&self, n: usize) -> Result<&[ControlId]> {
        self.controls.level(n)
    }

    pub fn barrier(&self) -> Result<&Barrier> {
        self.barrier
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("instance '{}' has no barrier", self.name)))
    }
}
