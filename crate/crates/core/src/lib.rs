pub mod circuit;
pub mod code_switching;
pub mod decoder;
pub mod dense;
pub mod error;
pub mod frame;
pub mod mitigation;
pub mod noise;
pub mod planner;
pub mod rate_learning;
pub mod rng;
pub mod stabilizer;
pub mod stats;
pub mod surface_code;

pub use error::{Error, Result};
pub use stabilizer::{Basis, CliffordGate, Outcome, Pauli1, PauliOperator, StabilizerState};
