//! Domain types for control problems and the differential-operator probe.

mod barrier;
mod boundary;
mod coefficients;
mod controls;
pub mod document;
mod domain;
mod function;
mod instance;
mod operator;
mod region;
mod validate;

pub use barrier::Barrier;
pub use boundary::{BoundaryData, BoundaryFn, TerminalFn};
pub use coefficients::{CoeffSample, ControlledCoefficients, FnCoefficients, SampleFn, MAX_DIM};
pub use controls::{ControlId, ControlSpace};
pub use domain::{DomainSpec, GeneralDomain, PointClass, SpaceTimeBox, CYLINDER_FLOOR};
pub use function::{Jet, SmoothFunction};
pub use instance::{ProblemInstance, Regularity};
pub use operator::{apply_generator, operator_apply};
pub use region::Region;
pub use validate::{validate_instance, CheckItem, ValidationReport};
