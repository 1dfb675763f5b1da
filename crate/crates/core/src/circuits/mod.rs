//! Layered circuit model and the transformations used by the protocol.

mod builders;
mod prep;
pub mod qasm;
mod rc;

pub use builders::{build_target, lift_degeneracy, repeat_target, toffoli_lift_layer, IsingParams, TargetSpec};
pub use prep::{prepare_basis_state, prepare_pair_state, synthesize_state};
pub use rc::{allowed_frames, randomize_once, randomized_compile};

use std::collections::HashSet;
use std::fmt;

use crate::error::{CsbError, Result};
use crate::qcore::gates;
use crate::qcore::linalg::{apply_to_vector, CMatrix, C64, ONE, ZERO};
use crate::qcore::ops::Operation;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    /// Arbitrary single-qubit unitary.
    U(CMatrix),
    Cx,
    Cz,
    Zz(f64),
    Fsim {
        theta: f64,
        phi: f64,
    },
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Zz(_) | GateKind::Fsim { .. } => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx(_) => "rx",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::U(_) => "u",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Zz(_) => "zz",
            GateKind::Fsim { .. } => "fsim",
        }
    }

    pub fn matrix(&self) -> CMatrix {
        match self {
            GateKind::X => gates::x(),
            GateKind::Y => gates::y(),
            GateKind::Z => gates::z(),
            GateKind::H => gates::h(),
            GateKind::S => gates::s(),
            GateKind::Sdg => gates::s().adjoint(),
            GateKind::T => gates::t(),
            GateKind::Tdg => gates::t().adjoint(),
            GateKind::Rx(a) => gates::rx(*a),
            GateKind::Ry(a) => gates::ry(*a),
            GateKind::Rz(a) => gates::rz(*a),
            GateKind::U(m) => m.clone(),
            GateKind::Cx => gates::cnot(),
            GateKind::Cz => gates::cz(),
            GateKind::Zz(a) => gates::zz(*a),
            GateKind::Fsim { theta, phi } => gates::fsim(*theta, *phi),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self {
            GateKind::Z
            | GateKind::S
            | GateKind::Sdg
            | GateKind::T
            | GateKind::Tdg
            | GateKind::Rz(_)
            | GateKind::Cz
            | GateKind::Zz(_) => true,
            GateKind::U(m) => m[(0, 1)].norm() == 0.0 && m[(1, 0)].norm() == 0.0,
            _ => false,
        }
    }

    pub fn inverse(&self) -> GateKind {
        match self {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::T => GateKind::Tdg,
            GateKind::Tdg => GateKind::T,
            GateKind::Rx(a) => GateKind::Rx(-a),
            GateKind::Ry(a) => GateKind::Ry(-a),
            GateKind::Rz(a) => GateKind::Rz(-a),
            GateKind::U(m) => GateKind::U(m.adjoint()),
            GateKind::Zz(a) => GateKind::Zz(-a),
            GateKind::Fsim { theta, phi } => GateKind::Fsim {
                theta: -theta,
                phi: -phi,
            },
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// Pauli-frame gate on an otherwise idle slot; carries no noise.
    pub frame: bool,
    /// Rotation under test; receives the configured over-rotation.
    pub benchmarked: bool,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
            frame: false,
            benchmarked: false,
        }
    }

    pub fn benchmarked(mut self) -> Self {
        self.benchmarked = true;
        self
    }

    pub fn as_frame(mut self) -> Self {
        self.frame = true;
        self
    }

    pub fn matrix(&self) -> CMatrix {
        self.kind.matrix()
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.kind.name(), self.qubits)
    }
}

/// What a circuit implements; carried along for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Rz,
    Fsim,
    Toffoli,
    Ising,
    Preparation,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    width: usize,
    layers: Vec<Vec<Gate>>,
    kind: TargetKind,
}

impl Circuit {
    pub fn new(width: usize, kind: TargetKind) -> Self {
        Self {
            width,
            layers: Vec::new(),
            kind,
        }
    }

    pub fn from_layers(width: usize, kind: TargetKind, layers: Vec<Vec<Gate>>) -> Result<Self> {
        let mut c = Self::new(width, kind);
        for layer in layers {
            c.push_layer(layer)?;
        }
        Ok(c)
    }

    /// Appends a layer after checking qubit ranges and disjointness.
    pub fn push_layer(&mut self, layer: Vec<Gate>) -> Result<()> {
        let mut seen = HashSet::new();
        for g in &layer {
            if g.qubits.len() != g.kind.arity() {
                return Err(CsbError::Validation(format!(
                    "gate {g} expects {} qubits",
                    g.kind.arity()
                )));
            }
            if let GateKind::U(m) = &g.kind {
                if m.shape() != (2, 2) {
                    return Err(CsbError::Validation(format!("gate {g} is not 2x2")));
                }
            }
            for &q in &g.qubits {
                if q >= self.width {
                    return Err(CsbError::Validation(format!(
                        "gate {g} acts outside width {}",
                        self.width
                    )));
                }
                if !seen.insert(q) {
                    return Err(CsbError::Validation(format!("qubit {q} used twice in one layer")));
                }
            }
        }
        self.layers.push(layer);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: TargetKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut Vec<Vec<Gate>> {
        &mut self.layers
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn gate_count(&self) -> usize {
        self.gates().count()
    }

    /// Number of layers containing a multi-qubit gate.
    pub fn hard_cycle_count(&self) -> usize {
        self.layers.iter().filter(|l| is_hard(l)).count()
    }

    /// Ideal operations in time order.
    pub fn operations(&self) -> Vec<Operation> {
        self.gates()
            .map(|g| Operation::Unitary {
                qubits: g.qubits.clone(),
                matrix: g.matrix(),
            })
            .collect()
    }

    /// Applies the ideal circuit to a state vector.
    pub fn apply_to_state(&self, state: &mut [C64]) {
        for g in self.gates() {
            apply_to_vector(state, self.width, &g.qubits, &g.matrix());
        }
    }

    /// Output state on `|0…0⟩`.
    pub fn output_state(&self) -> Vec<C64> {
        let mut psi = vec![ZERO; 1usize << self.width];
        psi[0] = ONE;
        self.apply_to_state(&mut psi);
        psi
    }

    /// Dense composed unitary. Memory is `4^n`, so keep `n` small.
    pub fn unitary(&self) -> CMatrix {
        let d = 1usize << self.width;
        let mut u = CMatrix::identity(d, d);
        for j in 0..d {
            let mut col: Vec<C64> = u.column(j).iter().cloned().collect();
            self.apply_to_state(&mut col);
            u.set_column(j, &nalgebra::DVector::from_vec(col));
        }
        u
    }

    /// Diagonal of the composed unitary when every gate is diagonal.
    pub fn diagonal_phases(&self) -> Option<Vec<C64>> {
        if !self.gates().all(|g| g.kind.is_diagonal()) {
            return None;
        }
        let n = self.width;
        let mut diag = vec![ONE; 1usize << n];
        for g in self.gates() {
            let m = g.matrix();
            let k = g.qubits.len();
            for (r, v) in diag.iter_mut().enumerate() {
                let local = g
                    .qubits
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &q)| acc | (((r >> (n - 1 - q)) & 1) << (k - 1 - i)));
                *v *= m[(local, local)];
            }
        }
        Some(diag)
    }

    /// Reversed circuit of inverse gates.
    pub fn inverse(&self) -> Circuit {
        let layers = self
            .layers
            .iter()
            .rev()
            .map(|l| {
                l.iter()
                    .map(|g| Gate {
                        kind: g.kind.inverse(),
                        ..g.clone()
                    })
                    .collect()
            })
            .collect();
        Circuit {
            width: self.width,
            layers,
            kind: self.kind,
        }
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &Circuit) -> Result<Circuit> {
        if self.width != other.width {
            return Err(CsbError::DimensionMismatch {
                expected: self.width,
                found: other.width,
            });
        }
        let mut out = self.clone();
        out.layers.extend(other.layers.iter().cloned());
        Ok(out)
    }
}

pub(crate) fn is_hard(layer: &[Gate]) -> bool {
    layer.iter().any(|g| g.kind.arity() > 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{max_abs_diff, phase_invariant_distance};

    #[test]
    fn rejects_overlapping_layer() {
        let mut c = Circuit::new(2, TargetKind::Custom);
        let err = c.push_layer(vec![Gate::new(GateKind::H, &[0]), Gate::new(GateKind::Cx, &[0, 1])]);
        assert!(err.is_err());
        assert!(c.push_layer(vec![Gate::new(GateKind::H, &[2])]).is_err());
        assert!(c.push_layer(vec![Gate::new(GateKind::Cx, &[0])]).is_err());
    }

    #[test]
    fn unitary_and_inverse() {
        let c = Circuit::from_layers(
            2,
            TargetKind::Custom,
            vec![
                vec![Gate::new(GateKind::H, &[0]), Gate::new(GateKind::T, &[1])],
                vec![Gate::new(GateKind::Cx, &[0, 1])],
                vec![Gate::new(GateKind::Ry(0.3), &[1])],
            ],
        )
        .unwrap();
        let expect =
            crate::qcore::linalg::embed(&gates::ry(0.3), &[1], 2) * gates::cnot() * gates::h().kronecker(&gates::t());
        assert!(max_abs_diff(&c.unitary(), &expect) < 1e-14);
        let id = c.then(&c.inverse()).unwrap().unitary();
        assert!(phase_invariant_distance(&id, &CMatrix::identity(4, 4)) < 1e-13);
    }

    #[test]
    fn diagonal_phases_match_unitary() {
        let c = Circuit::from_layers(
            3,
            TargetKind::Custom,
            vec![
                vec![
                    Gate::new(GateKind::Rz(0.4), &[0]),
                    Gate::new(GateKind::Zz(0.9), &[2, 1]),
                ],
                vec![Gate::new(GateKind::Cz, &[0, 2]), Gate::new(GateKind::T, &[1])],
            ],
        )
        .unwrap();
        let diag = c.diagonal_phases().unwrap();
        let u = c.unitary();
        for (i, v) in diag.iter().enumerate() {
            assert!((u[(i, i)] - v).norm() < 1e-14);
        }
        let mut nd = c.clone();
        nd.push_layer(vec![Gate::new(GateKind::H, &[0])]).unwrap();
        assert!(nd.diagonal_phases().is_none());
    }
}
