//! Trajectory-based representation of unknown linear and Hammerstein/Wiener systems.
//!
//! A single measured input-output record, arranged in block-Hankel matrices, spans
//! every trajectory of an LTI system once its input is persistently exciting. The
//! modules build on that fact:
//!
//! - [`trajcore`]: signals, Hankel matrices, persistence of excitation
//! - [`oracle`]: state-space ground truth used to generate data and check results
//! - [`trajspace`]: membership tests and trajectory generation from data
//! - [`weave`]: stitching overlapping segments into arbitrarily long trajectories
//! - [`lift`]: basis-function liftings and kernels for Hammerstein/Wiener systems
//! - [`ddsim`]: exact, ridge-regularized and kernelized data-driven simulation

pub mod ddsim;
pub mod error;
pub mod lift;
mod linalg;
pub mod oracle;
pub mod trajcore;
pub mod trajspace;
pub mod weave;

pub use error::{Error, Result};
pub use linalg::MinNormSolver;
pub use trajcore::{Signal, Trajectory};
