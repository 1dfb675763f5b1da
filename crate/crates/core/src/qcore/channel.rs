//! Pauli transfer matrices, channel spectra and exact fidelities.

use nalgebra::DMatrix;

use super::gates::{pauli_digits, pauli_string};
use super::linalg::{eigenvalues_real, embed, CMatrix, C64};
use super::ops::Operation;
use super::types::Ptm;
use crate::circuits::Circuit;
use crate::error::{CsbError, Result};
use crate::noise::{NoiseModel, NoisyCircuit};

/// Widest circuit whose dense `4^n × 4^n` PTM is built by default.
pub const DEFAULT_PTM_CAP: usize = 3;

fn pauli_basis(n: usize) -> Vec<CMatrix> {
    (0..1usize << (2 * n))
        .map(|i| pauli_string(&pauli_digits(i, n)))
        .collect()
}

/// `tr(A B)` without forming the product.
fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn ptm_of_full_kraus(kraus: &[CMatrix], basis: &[CMatrix]) -> DMatrix<f64> {
    let d = kraus[0].nrows();
    let d2 = basis.len();
    let mut m = DMatrix::zeros(d2, d2);
    for (j, pj) in basis.iter().enumerate() {
        let image = kraus
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k * pj * k.adjoint());
        for (i, pi) in basis.iter().enumerate() {
            m[(i, j)] = trace_product(pi, &image).re / d as f64;
        }
    }
    m
}

/// PTM of a sequence of operations on `n` qubits, composed in time order.
pub fn ptm_of_operations(n: usize, ops: &[Operation]) -> Ptm {
    let basis = pauli_basis(n);
    let d = 1usize << n;
    let mut total = DMatrix::identity(d * d, d * d);
    for op in ops {
        let full: Vec<CMatrix> = match op {
            Operation::Unitary { qubits, matrix } => vec![embed(matrix, qubits, n)],
            Operation::Channel { qubits, kraus } => kraus.operators().iter().map(|k| embed(k, qubits, n)).collect(),
        };
        total = ptm_of_full_kraus(&full, &basis) * total;
    }
    Ptm::from_raw(d, total)
}

/// PTM of a (possibly noisy) circuit, limited to [`DEFAULT_PTM_CAP`] qubits.
pub fn ptm_of_circuit(circ: &Circuit, noise: Option<&NoiseModel>) -> Result<Ptm> {
    ptm_of_circuit_capped(circ, noise, DEFAULT_PTM_CAP)
}

pub fn ptm_of_circuit_capped(circ: &Circuit, noise: Option<&NoiseModel>, cap: usize) -> Result<Ptm> {
    if circ.width() > cap {
        return Err(CsbError::Capacity {
            width: circ.width(),
            cap,
        });
    }
    let ops = match noise {
        Some(model) => NoisyCircuit::new(circ.clone(), model.clone()).operations(),
        None => circ.operations(),
    };
    Ok(ptm_of_operations(circ.width(), &ops))
}

/// All `d²` eigenvalues of a channel, conjugate pairs included.
pub fn channel_eigenvalues(m: &Ptm) -> Vec<C64> {
    eigenvalues_real(m.matrix()).expect("eigenvalue iteration converges on finite PTMs")
}

/// Process fidelity `tr(R_ideal^T R_noisy) / d²`.
pub fn process_fidelity(ideal: &Ptm, noisy: &Ptm) -> Result<f64> {
    if ideal.dim() != noisy.dim() {
        return Err(CsbError::DimensionMismatch {
            expected: ideal.dim(),
            found: noisy.dim(),
        });
    }
    let d2 = (ideal.dim() * ideal.dim()) as f64;
    // Real PTMs leave no imaginary residue, so only the clip remains.
    let overlap = ideal.matrix().component_mul(noisy.matrix()).sum();
    Ok((overlap / d2).clamp(0.0, 1.0))
}

pub fn average_gate_fidelity(process_fidelity: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * process_fidelity + 1.0) / (d + 1.0)
}

/// Root mean square of the channel eigenvalue magnitudes.
pub fn stochastic_fidelity_exact(noisy: &Ptm) -> f64 {
    let eig = channel_eigenvalues(noisy);
    let mean_sq = eig.iter().map(|z| z.norm_sqr()).sum::<f64>() / eig.len() as f64;
    mean_sq.sqrt().clamp(0.0, 1.0)
}

/// Applies a PTM to a density matrix expressed in the normalised Pauli basis.
pub fn pauli_vector(rho: &CMatrix) -> Vec<f64> {
    let n = rho.nrows().trailing_zeros() as usize;
    let norm = (rho.nrows() as f64).sqrt();
    pauli_basis(n).iter().map(|p| trace_product(p, rho).re / norm).collect()
}
