//! Shortcut-to-adiabaticity state transfer in a Floquet-driven, non-Hermitian
//! cavity-magnon two-level system.
//!
//! The crate assembles the coefficient matrix of the photon/magnon pair under
//! three control protocols (bare, non-Hermitian shortcut, counterdiabatic
//! driving), integrates the amplitude equations, and sweeps transfer
//! probabilities against coupling and systematic errors.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod presets;
pub mod robustness;
pub mod spectra;

pub use error::{Error, Result};
