//! Simulator and analysis toolkit for entanglement-negativity transitions of
//! pseudo-random quantum states: pseudo-random circuit generation, reduced
//! density matrices, negativity spectra, phase classification, simulated
//! tomography, and Porter-Thomas randomness statistics.

pub mod circuits;
pub mod ensemble;
pub mod entanglement;
pub mod error;
pub mod qstate;
pub mod stats;
pub mod theory;
pub mod tomography;

pub use error::{NegsimError, Result};
