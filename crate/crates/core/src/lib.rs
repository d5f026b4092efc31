//! Simulation and analytics for a dark state of an NV center protected by
//! its coupling to a superconducting flux qubit.
//!
//! The crate is organized bottom-up:
//!
//! * [`operators`] builds spin operators, basis states and the
//!   rotating-frame Hamiltonian.
//! * [`spectrum`] diagonalizes it numerically and in closed form.
//! * [`noise`] evaluates noise spectra and analytic coherence times.
//! * [`dynamics`] integrates the conditional master equations, averages over
//!   quasi-static flux-qubit noise and provides a trajectory oracle.
//! * [`fitting`] extracts decay rates from fidelity curves.
//! * [`cli`] implements the `darksim` command line.

pub mod cli;
pub mod dynamics;
mod error;
pub mod fitting;
pub mod noise;
pub mod operators;
pub mod parallel;
pub mod quadrature;
pub mod scenarios;
pub mod spectrum;

pub use error::{Error, Result};
