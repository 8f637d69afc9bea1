use std::fmt;
use std::sync::Arc;

use super::SmoothFunction;

pub type BoundaryFn = Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;
pub type TerminalFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Boundary payoff `g(t, x, ε)`, optionally split into a lateral part `g₁`
/// and a terminal part `g₂` for cylinders.
#[derive(Clone)]
pub struct BoundaryData {
    g: BoundaryFn,
    split: Option<Split>,
    lateral_smooth: Option<SmoothFunction>,
}

#[derive(Clone)]
struct Split {
    terminal_time: f64,
    lateral: BoundaryFn,
    terminal: TerminalFn,
}

impl BoundaryData {
    pub fn new(g: impl Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            g: Arc::new(g),
            split: None,
            lateral_smooth: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _, _| c)
    }

    /// `g = g₁` before `terminal_time` and `g = g₂` from it on.
    pub fn cylindrical(
        terminal_time: f64,
        lateral: impl Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
        terminal: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let lateral: BoundaryFn = Arc::new(lateral);
        let terminal: TerminalFn = Arc::new(terminal);
        let (l, r) = (lateral.clone(), terminal.clone());
        Self {
            g: Arc::new(move |t, x, e| {
                if t >= terminal_time {
                    r(x, e)
                } else {
                    l(t, x, e)
                }
            }),
            split: Some(Split {
                terminal_time,
                lateral,
                terminal,
            }),
            lateral_smooth: None,
        }
    }

    /// Derivative evaluator for `g₁` at `ε = 0`.
    pub fn with_lateral_smooth(mut self, f: SmoothFunction) -> Self {
        self.lateral_smooth = Some(f);
        self
    }

    #[inline]
    pub fn g(&self, t: f64, x: &[f64], eps: f64) -> f64 {
        (self.g)(t, x, eps)
    }

    /// `g₁`; equals `g` when no split is declared.
    pub fn lateral(&self, t: f64, x: &[f64], eps: f64) -> f64 {
        match &self.split {
            Some(s) => (s.lateral)(t, x, eps),
            None => (self.g)(t, x, eps),
        }
    }

    /// `g₂`, when declared.
    pub fn terminal(&self, x: &[f64], eps: f64) -> Option<f64> {
        self.split.as_ref().map(|s| (s.terminal)(x, eps))
    }

    pub fn terminal_time(&self) -> Option<f64> {
        self.split.as_ref().map(|s| s.terminal_time)
    }

    pub fn is_split(&self) -> bool {
        self.split.is_some()
    }

    pub fn lateral_smooth(&self) -> Option<&SmoothFunction> {
        self.lateral_smooth.as_ref()
    }

    /// The same data shifted down by a constant.
    pub fn shifted(&self, by: f64) -> Self {
        let g = self.g.clone();
        let mut out = Self::new(move |t, x, e| g(t, x, e) - by);
        if let Some(s) = &self.split {
            let (l, r) = (s.lateral.clone(), s.terminal.clone());
            out = Self::cylindrical(
                s.terminal_time,
                move |t, x, e| l(t, x, e) - by,
                move |x, e| r(x, e) - by,
            );
        }
        out
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("split", &self.terminal_time())
            .field("lateral_smooth", &self.lateral_smooth.is_some())
            .finish()
    }
}
