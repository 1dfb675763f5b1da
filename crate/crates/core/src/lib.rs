//! Channel spectrum benchmarking.
//!
//! Estimates the process fidelity, stochastic fidelity and unitary error
//! parameters of a target gate or circuit fragment from the eigenvalues of
//! its noisy channel. Eigenvalues are read off damped oscillating signals
//! produced by control-free phase estimation circuits, which makes the
//! estimates insensitive to state preparation and measurement errors.
//!
//! The crate is organised bottom-up:
//!
//! * [`qcore`] dense linear algebra, Pauli transfer matrices, exact
//!   fidelities and a density-matrix simulator,
//! * [`noise`] damping and coherent error models attached to circuits,
//! * [`circuits`] the circuit model, target builders, state preparation,
//!   randomized compiling and OpenQASM export,
//! * [`pencil`] matrix pencil extraction of damped modes,
//! * [`protocol`] the end-to-end benchmarking procedure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod error;
pub mod noise;
pub mod pencil;
pub mod protocol;
pub mod qcore;
pub mod rng;

pub use error::{CsbError, Result};
