//! Numerical workbench for floating-electron qubit readout.
//!
//! The crate follows the computational chain from the vertical Rydberg
//! problem of an electron above helium or neon, through the electrostatics
//! of a Corbino cell and the quantum capacitance it produces, to RF
//! reflectometry, FM sideband readout, resonator loading by an electron
//! sheet, micromagnet gradients, spin-photon gate estimates and a
//! tunnel-diode oscillator model.
//!
//! Conventions: frequencies and detunings are carried in Hz (energy / h)
//! unless a name says `omega` or `rad`, complex phasors use `e^{+jωt}`,
//! and all other quantities are SI.

pub mod constants;
pub mod corbino;
pub mod error;
pub mod fit;
pub mod fm;
pub mod interp;
pub mod io;
pub mod magnet;
pub mod neon;
pub mod qcap;
pub mod qubit;
pub mod resonator;
pub mod rydberg;
pub mod spin;
pub mod tdo;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
