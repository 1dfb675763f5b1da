//! Dense linear algebra, channel representations and exact oracles.

pub mod channel;
pub mod eig;
pub mod gates;
pub mod linalg;
pub mod ops;
pub mod sim;
pub mod types;

pub use channel::{
    average_gate_fidelity, channel_eigenvalues, process_fidelity, ptm_of_circuit, ptm_of_circuit_capped,
    ptm_of_operations, stochastic_fidelity_exact, DEFAULT_PTM_CAP,
};
pub use eig::{eig_unitary, phase_multiplicities};
pub use linalg::{CMatrix, C64};
pub use ops::Operation;
pub use sim::{evolve_and_measure, DensityState};
pub use types::{DensityMatrix, EigenPair, KrausSet, Ptm, UnitaryMatrix};
