//! Model plugins producing spaces, kernels and model-specific quantities.

pub mod classical_gas;
pub mod lattice_polymer;
pub mod quantum_gas;
