//! Value functions of time-inhomogeneous controlled diffusions stopped at the
//! first exit from a bounded space-time domain.
//!
//! The crate is organised around a single [`ProblemInstance`]:
//!
//! * [`model`] holds the domain types (controls, coefficients, domains,
//!   boundary data, barriers) and the differential-operator probe.
//! * [`simulate`] runs Euler–Maruyama paths with exit detection and Monte
//!   Carlo estimates of the discounted payoff.
//! * [`solve`] computes `v = sup_α v^α` by backward dynamic programming on a
//!   monotone explicit finite-difference lattice.
//! * [`verify`] turns Bellman's principle, barrier conditions, continuity
//!   estimates and the weak supersolution inequality into residual checks.
//! * [`shaking`] builds the shaken value `v^δ` and its mollification `u^δ`.
//! * [`gallery`] provides built-in instances with closed-form oracles.
//! * [`harness`] drives configured runs, sweeps and report emission.

// NaN-rejecting comparisons and index loops over small fixed arrays are
// deliberate in the numeric kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod gallery;
pub mod grid;
pub mod harness;
pub mod model;
pub mod shaking;
pub mod simulate;
pub mod solve;
pub mod verify;

pub use error::{Error, Result};
pub use grid::Grid;
pub use model::{
    Barrier, BoundaryData, CoeffSample, ControlId, ControlSpace, ControlledCoefficients,
    DomainSpec, FnCoefficients, PointClass, ProblemInstance, Region, Regularity, SmoothFunction,
    MAX_DIM,
};
pub use simulate::{PathConfig, PathOutcome, Policy};
pub use solve::{LatticeOptions, LatticeSpec, ValueField};
