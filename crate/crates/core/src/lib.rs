//! Lattice-gas hydrodynamics in an external potential.
//!
//! The crate has two levels. [`microsim`] runs the stochastic hopping model
//! on a lattice, with a thermalising projection onto product exponential
//! states ([`thermo`]). [`pde`] integrates the continuum equations for mass,
//! energy and momentum whose fluxes are given pointwise in [`currents`].
//! [`moments`] evaluates the Gaussian moment integrals and remainder bounds
//! behind the continuum limit, and [`harness`] drives experiments that
//! compare the two levels.

pub mod currents;
pub mod harness;
pub mod microsim;
pub mod moments;
pub mod pde;
pub mod potential;
pub mod quad;
pub mod thermo;

pub use potential::Potential;
pub use thermo::ModelParams;
