//! Reference-frame-independent entanglement quantification for two-qubit states.
//!
//! Start from a [`state::DensityMatrix`] or from raw coincidence counts
//! ([`measurement::CountRecord`]), reduce to a [`state::PauliTable`], and
//! evaluate the invariants in [`rfi`], the concurrence bounds in [`bounds`]
//! and the entropy estimates in [`entropy`]. Uncertainties are carried as
//! [`measured::Measured`] values.

pub mod bounds;
pub mod entropy;
pub mod error;
pub mod io;
pub mod measured;
pub mod measurement;
pub mod montecarlo;
pub mod report;
pub mod rfi;
pub mod rng;
pub mod state;
pub mod tomography;
pub mod verify;

pub use error::{Error, Result};
pub use measured::{Measured, MeasuredTable};
pub use rfi::RfiReport;
pub use state::{DensityMatrix, LocalRotation, PauliTable, QubitState, StateCandidate, Subsystem};
