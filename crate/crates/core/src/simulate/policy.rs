use std::sync::Arc;

use crate::grid::Grid;
use crate::model::ControlId;

const NONE: u16 = u16::MAX;

/// Lattice of control indices with nearest-node lookup on the latest stored
/// slice at or before the query time.
#[derive(Clone, Debug)]
pub struct FeedbackTable {
    grid: Grid,
    times: Vec<f64>,
    controls: Vec<Vec<u16>>,
    fallback: ControlId,
}

impl FeedbackTable {
    pub fn new(grid: Grid, times: Vec<f64>, controls: Vec<Vec<u16>>, fallback: ControlId) -> Self {
        assert_eq!(times.len(), controls.len());
        assert!(!times.is_empty(), "feedback table needs at least one slice");
        Self {
            grid,
            times,
            controls,
            fallback,
        }
    }

    pub fn fallback(&self) -> ControlId {
        self.fallback
    }

    /// Every control index stored in the table.
    pub fn used_controls(&self) -> Vec<ControlId> {
        let mut out: Vec<u16> = self
            .controls
            .iter()
            .flatten()
            .copied()
            .filter(|&c| c != NONE)
            .collect();
        out.sort_unstable();
        out.dedup();
        out.into_iter().map(|c| ControlId(c as usize)).collect()
    }

    pub fn lookup(&self, t: f64, x: &[f64]) -> ControlId {
        let i = self
            .times
            .partition_point(|&s| s <= t + 1e-12)
            .saturating_sub(1);
        let slice = &self.controls[i];
        let c = slice[self.grid.nearest(x)];
        if c != NONE {
            return ControlId(c as usize);
        }
        // nearest node outside the stored interior: any defined cell corner
        if let Some(cell) = self.grid.cell(x) {
            let mut best: Option<(f64, u16)> = None;
            for (n, w) in cell {
                let c = slice[n];
                if c != NONE && best.is_none_or(|(bw, _)| w > bw) {
                    best = Some((w, c));
                }
            }
            if let Some((_, c)) = best {
                return ControlId(c as usize);
            }
        }
        self.fallback
    }
}

/// Markov control surrogate: a constant control or a stored feedback map.
#[derive(Clone, Debug)]
pub enum Policy {
    Constant(ControlId),
    Feedback(Arc<FeedbackTable>),
}

impl Policy {
    #[inline]
    pub fn control(&self, t: f64, x: &[f64]) -> ControlId {
        match self {
            Policy::Constant(a) => *a,
            Policy::Feedback(table) => table.lookup(t, x),
        }
    }

    /// Every control index the policy can return.
    pub fn controls(&self) -> Vec<ControlId> {
        match self {
            Policy::Constant(a) => vec![*a],
            Policy::Feedback(table) => {
                let mut v = table.used_controls();
                if !v.contains(&table.fallback()) {
                    v.push(table.fallback());
                }
                v
            }
        }
    }
}
