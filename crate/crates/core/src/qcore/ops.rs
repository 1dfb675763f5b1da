use super::linalg::CMatrix;
use super::types::KrausSet;

/// One step of a (noisy) circuit acting on a subset of qubits.
#[derive(Debug, Clone, PartialEq)]
pub enum Operation {
    Unitary { qubits: Vec<usize>, matrix: CMatrix },
    Channel { qubits: Vec<usize>, kraus: KrausSet },
}

impl Operation {
    pub fn qubits(&self) -> &[usize] {
        match self {
            Operation::Unitary { qubits, .. } | Operation::Channel { qubits, .. } => qubits,
        }
    }
}
