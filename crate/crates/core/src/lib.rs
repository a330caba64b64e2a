//! Coherent phase and leakage errors in controlled-phase gates caused by
//! always-on dispersive coupling to spectator qubits.
//!
//! The crate is organised bottom-up:
//!
//! - [`device`]: transmons, couplings, gate timing and device files.
//! - [`dispersive`]: closed-form second-order shifts and the phase/leakage
//!   error formulas built on them.
//! - [`oracle`]: exact diagonalization references (coupled pair, charge-basis
//!   transmon) used to check the closed forms.
//! - [`dynamics`]: time-domain simulation of the non-adiabatic CZ gate.
//! - [`tomography`]: error unitaries, χ matrices and process infidelity.
//! - [`bench`]: sweeps, error budgets, Ramsey fringe synthesis and figure
//!   export backing the `spectator-bench` CLI.
//!
//! Units: frequencies are ordinary frequencies (ω/2π) in MHz, times in ns,
//! phases in degrees at API boundaries.

pub mod bench;
pub mod device;
pub mod dispersive;
pub mod dynamics;
pub mod error;
pub mod oracle;
pub mod tomography;

mod linalg;
mod roots;

pub use error::{Error, Result};

/// MHz·ns → cycles.
pub(crate) const MHZ_NS: f64 = 1e-3;
