//! State-vector simulation, native-gate synthesis, circuit lowering, stochastic
//! noise/readout modeling, experiment runners and curve fitting for phase-flip
//! error-correction protocols on a four-qubit exchange-coupled spin device.

pub mod analysis;
pub mod circuit;
pub mod compiler;
pub mod device;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod gates;
pub mod noise;
pub mod qubit;
pub mod state;

pub use error::{Error, Result};

/// Library version, as recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
