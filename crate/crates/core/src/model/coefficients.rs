use std::fmt;
use std::sync::Arc;

use super::ControlId;

/// Largest supported state (and noise) dimension.
pub const MAX_DIM: usize = 3;

/// Coefficients `(σ, b, c, f)` of one control at one space-time point.
/// Only the leading `d × d₁` block of `sigma` and the first `d` drift entries
/// are meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffSample {
    pub sigma: [[f64; MAX_DIM]; MAX_DIM],
    pub drift: [f64; MAX_DIM],
    pub discount: f64,
    pub reward: f64,
}

impl CoeffSample {
    pub const ZERO: CoeffSample = CoeffSample {
        sigma: [[0.0; MAX_DIM]; MAX_DIM],
        drift: [0.0; MAX_DIM],
        discount: 0.0,
        reward: 0.0,
    };

    /// Diagonal diffusion `σ = s·I` on the leading `d × d` block.
    pub fn isotropic(d: usize, s: f64) -> Self {
        let mut out = Self::ZERO;
        for i in 0..d {
            out.sigma[i][i] = s;
        }
        out
    }

    pub fn with_drift(mut self, b: &[f64]) -> Self {
        self.drift[..b.len()].copy_from_slice(b);
        self
    }

    pub fn with_discount(mut self, c: f64) -> Self {
        self.discount = c;
        self
    }

    pub fn with_reward(mut self, f: f64) -> Self {
        self.reward = f;
        self
    }

    /// `a = ½ σ σ*`.
    pub fn diffusion(&self, d: usize, d1: usize) -> [[f64; MAX_DIM]; MAX_DIM] {
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d1 {
                    s += self.sigma[i][k] * self.sigma[j][k];
                }
                a[i][j] = 0.5 * s;
            }
        }
        a
    }

    pub fn is_finite(&self) -> bool {
        self.discount.is_finite()
            && self.reward.is_finite()
            && self.drift.iter().all(|v| v.is_finite())
            && self.sigma.iter().flatten().all(|v| v.is_finite())
    }
}

/// Evaluator of the controlled coefficients `(α, t, x, ε) ↦ (σ, b, c, f)`.
///
/// For `ε = 0` the evaluator is the unperturbed problem. Implementations must
/// be pure: they are called concurrently from many workers.
pub trait ControlledCoefficients: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn sample(&self, control: ControlId, t: f64, x: &[f64], eps: f64) -> CoeffSample;

    /// `true` when none of `σ, b, c, f` depends on `t`; the solver then
    /// assembles its stencils once.
    fn time_homogeneous(&self) -> bool {
        false
    }

    /// Time interval on which the evaluator is declared.
    fn time_slab(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

pub type SampleFn = Arc<dyn Fn(ControlId, f64, &[f64], f64) -> CoeffSample + Send + Sync>;

/// Coefficients backed by a closure.
#[derive(Clone)]
pub struct FnCoefficients {
    state_dim: usize,
    noise_dim: usize,
    homogeneous: bool,
    slab: (f64, f64),
    eval: SampleFn,
}

impl FnCoefficients {
    pub fn new(
        state_dim: usize,
        noise_dim: usize,
        eval: impl Fn(ControlId, f64, &[f64], f64) -> CoeffSample + Send + Sync + 'static,
    ) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&state_dim),
            "state dimension out of range"
        );
        assert!(
            (1..=MAX_DIM).contains(&noise_dim),
            "noise dimension out of range"
        );
        Self {
            state_dim,
            noise_dim,
            homogeneous: false,
            slab: (f64::NEG_INFINITY, f64::INFINITY),
            eval: Arc::new(eval),
        }
    }

    pub fn time_homogeneous(mut self) -> Self {
        self.homogeneous = true;
        self
    }

    pub fn with_slab(mut self, lo: f64, hi: f64) -> Self {
        self.slab = (lo, hi);
        self
    }

    /// One constant sample per control.
    pub fn constant_table(state_dim: usize, noise_dim: usize, table: Vec<CoeffSample>) -> Self {
        Self::new(state_dim, noise_dim, move |a, _, _, _| table[a.0]).time_homogeneous()
    }
}

impl fmt::Debug for FnCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCoefficients")
            .field("state_dim", &self.state_dim)
            .field("noise_dim", &self.noise_dim)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

impl ControlledCoefficients for FnCoefficients {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    #[inline]
    fn sample(&self, control: ControlId, t: f64, x: &[f64], eps: f64) -> CoeffSample {
        (self.eval)(control, t, x, eps)
    }

    fn time_homogeneous(&self) -> bool {
        self.homogeneous
    }

    fn time_slab(&self) -> (f64, f64) {
        self.slab
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diffusion_is_half_sigma_sigma_transpose() {
        let mut s = CoeffSample::ZERO;
        s.sigma[0] = [1.0, 2.0, 0.0];
        s.sigma[1] = [0.0, 3.0, 0.0];
        let a = s.diffusion(2, 2);
        assert_eq!(a[0][0], 2.5);
        assert_eq!(a[0][1], 3.0);
        assert_eq!(a[1][0], 3.0);
        assert_eq!(a[1][1], 4.5);
    }
}
