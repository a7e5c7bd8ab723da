//! Stabilizer-formalism primitives: Pauli operators and tableau states.

mod pauli;
mod tableau;

pub use pauli::{Pauli1, PauliOperator};
pub use tableau::{Basis, CliffordGate, Outcome, StabilizerState};
