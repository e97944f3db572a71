//! Stochastic lattice dynamics: hopping step `T`, thermalising projection `Q`,
//! ensemble driver and coarse-graining.
//!
//! Momenta are stored as `f64` rather than integer multiples of `eps`. A hop
//! changes the momentum component along the hop axis to `(k² ∓ 2m ΔPhi)^{1/2}`,
//! which is not on the `eps` grid in general; keeping real momenta makes every
//! hop conserve energy to rounding. [`MomentumSampling::EpsilonGrid`] rounds
//! freshly sampled momenta to the grid when that is wanted.

mod coarse;
mod ensemble;
mod gillespie;
mod lattice;
mod rates;
mod step;
mod thermalize;

pub use coarse::{coarse_grain, CoarseField};
pub use ensemble::{Ensemble, EnsembleConfig, EnsembleStats, HopLength, Thermalization};
pub use gillespie::{gillespie_run, GillespieStats};
pub use lattice::{Configuration, Lattice, LatticeBoundary, SiteState};
pub use rates::{hop_outcome, hop_rate, mean_free_path, HopOutcome};
pub use step::{step_t, HopField, StepPolicy, StepStats};
pub use thermalize::{sample_configuration, sample_momentum, thermalize_q, MomentumSampling, QProjection};

use thiserror::Error;

use crate::thermo::ThermoError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicroError {
    #[error("time step {dt:e} s is not sub-stochastic: dt * max exit rate = {product:.4} >= 1")]
    NotSubStochastic { dt: f64, product: f64 },
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("invalid step policy: {0}")]
    Policy(String),
    #[error("field size {got} does not match lattice size {expected}")]
    FieldSize { expected: usize, got: usize },
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}
