//! Experiment driver: TOML specs with unit-checked quantities, micro and
//! continuum runs, coarse-grained comparison, bound scaling tables and the
//! reduction identity checks.

mod bounds;
mod reductions;
mod run;
mod spec;
pub mod units;

pub use bounds::{bounds_table, BoundRow, SLOPE_TOLERANCE};
pub use reductions::{validate_reductions, IdentityResult, ReductionReport};
pub use run::{
    initial_primitives, l2_relative, run, write_outputs, Check, Comparison, ComparisonReport, MicroSummary,
    PdeSummary, RunOutput, SweepPoint,
};
pub use spec::{
    Equations, ExperimentSpec, Geometry, InitialCondition, LambdaChoice, MicroSpec, Mode, PdeSpec, Profile,
    SnapshotFormat, SpecError, ThermalizationChoice, Tolerances,
};

use thiserror::Error;

use crate::microsim::MicroError;
use crate::moments::MomentError;
use crate::pde::PdeError;
use crate::thermo::ThermoError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("micro simulation: {0}")]
    Micro(#[from] MicroError),
    #[error("continuum solver: {0}")]
    Pde(#[from] PdeError),
    #[error("moment bounds: {0}")]
    Moment(#[from] MomentError),
    #[error("initial state: {0}")]
    Thermo(#[from] ThermoError),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing report: {0}")]
    Json(#[from] serde_json::Error),
}
