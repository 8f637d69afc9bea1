use super::{ControlId, SmoothFunction};

/// Barrier `ψ` with an optional favored control `α̲`.
#[derive(Clone, Debug)]
pub struct Barrier {
    pub psi: SmoothFunction,
    pub favored: Option<ControlId>,
}

impl Barrier {
    pub fn new(psi: SmoothFunction) -> Self {
        Self { psi, favored: None }
    }

    pub fn favoring(mut self, control: ControlId) -> Self {
        self.favored = Some(control);
        self
    }

    #[inline]
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.psi.value(t, x)
    }
}
