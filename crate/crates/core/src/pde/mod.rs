//! Finite-volume solver for the continuum equations of mass, energy and
//! momentum in an external potential.
//!
//! Cells hold the conserved densities `rho`, `rho e` and `rho u`. Fluxes are
//! evaluated on faces from face-averaged primitives and face-normal
//! differences, and every cell gains what its neighbour loses, so periodic
//! totals change only through the body force.

mod grid;
mod rhs;
mod smoluchowski;
mod snapshot;
mod solver;
mod state;

pub use grid::{Grid, GridBoundary};
pub use rhs::{rhs, rhs_field_free, Rhs};
pub use smoluchowski::{free_energy, smoluchowski_reference, smoluchowski_rhs};
pub use snapshot::{read_binary, write_binary, write_csv, Snapshot};
pub use solver::{
    cfl_limit, step, FluxScheme, LambdaMode, Ledger, LedgerReport, Solver, SolverConfig, StepReport, TimeScheme,
};
pub use state::{primitive_recovery, recover_all, HydroState};

use thiserror::Error;

use crate::currents::CurrentError;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("primitive recovery failed in cell {cell}: {reason}")]
    Recovery { cell: usize, reason: String },
    #[error("flux evaluation failed at face after cell {cell} along axis {axis}: {source}")]
    Current {
        cell: usize,
        axis: usize,
        source: CurrentError,
    },
    #[error("time step {dt:e} s exceeds the stability limit {limit:e} s")]
    Cfl { dt: f64, limit: f64 },
    #[error("field size {got} does not match grid size {expected}")]
    FieldSize { expected: usize, got: usize },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
