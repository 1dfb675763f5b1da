//! Damping and coherent error models attached to circuits.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Gate, GateKind, TargetKind};
use crate::error::{invalid, Result};
use crate::qcore::channel::{process_fidelity, ptm_of_operations, stochastic_fidelity_exact};
use crate::qcore::gates;
use crate::qcore::linalg::{diag, mat2, CMatrix, C64, ONE, ZERO};
use crate::qcore::ops::Operation;
use crate::qcore::types::{KrausSet, UnitaryMatrix};
use crate::qcore::DEFAULT_PTM_CAP;

/// Per-gate noise: damping after every gate, an Fsim-type coherent error
/// after every two-qubit gate and an over-rotation of benchmarked rotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Damping probability after single-qubit gates.
    pub one_qubit_damping: f64,
    /// Damping probability on each qubit of a two-qubit gate.
    pub two_qubit_damping: f64,
    pub coherent_theta: f64,
    pub coherent_phi: f64,
    pub rotation_overshoot: f64,
}

impl NoiseModel {
    pub fn new(
        one_qubit_damping: f64,
        two_qubit_damping: f64,
        coherent_theta: f64,
        coherent_phi: f64,
        rotation_overshoot: f64,
    ) -> Result<Self> {
        let m = Self {
            one_qubit_damping,
            two_qubit_damping,
            coherent_theta,
            coherent_phi,
            rotation_overshoot,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn ideal() -> Self {
        Self {
            one_qubit_damping: 0.0,
            two_qubit_damping: 0.0,
            coherent_theta: 0.0,
            coherent_phi: 0.0,
            rotation_overshoot: 0.0,
        }
    }

    /// Same damping probability on every gate.
    pub fn uniform(dp: f64, coherent_theta: f64, coherent_phi: f64, rotation_overshoot: f64) -> Result<Self> {
        Self::new(dp, dp, coherent_theta, coherent_phi, rotation_overshoot)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("one_qubit_damping", self.one_qubit_damping),
            ("two_qubit_damping", self.two_qubit_damping),
        ] {
            if !(0.0..=0.5).contains(&p) {
                return Err(invalid(name, format!("{p} outside [0, 0.5]")));
            }
        }
        for (name, a) in [
            ("coherent_theta", self.coherent_theta),
            ("coherent_phi", self.coherent_phi),
            ("rotation_overshoot", self.rotation_overshoot),
        ] {
            if !a.is_finite() || a.abs() >= FRAC_PI_2 {
                return Err(invalid(name, format!("|{a}| must be below π/2")));
            }
        }
        Ok(())
    }

    pub fn has_coherent_error(&self) -> bool {
        self.coherent_theta != 0.0 || self.coherent_phi != 0.0
    }
}

/// Amplitude damping (γ = δp) followed by phase damping (λ = δp).
pub fn make_damping_channels(dp: f64) -> Result<KrausSet> {
    if !(0.0..=0.5).contains(&dp) {
        return Err(invalid("dp", format!("{dp} outside [0, 0.5]")));
    }
    let r = |v: f64| C64::new(v, 0.0);
    let amplitude = KrausSet::new(vec![
        diag(&[ONE, r((1.0 - dp).sqrt())]),
        mat2(ZERO, r(dp.sqrt()), ZERO, ZERO),
    ])?;
    let phase = KrausSet::new(vec![diag(&[ONE, r((1.0 - dp).sqrt())]), diag(&[ZERO, r(dp.sqrt())])])?;
    KrausSet::new(amplitude.then(&phase).operators().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherentKind {
    Rz,
    Fsim,
}

pub fn make_coherent_error(kind: CoherentKind, d_theta: f64, d_phi: f64) -> Result<UnitaryMatrix> {
    match kind {
        CoherentKind::Rz => UnitaryMatrix::new(gates::rz(d_theta)),
        CoherentKind::Fsim => UnitaryMatrix::new(gates::fsim(d_theta, d_phi)),
    }
}

/// An ideal circuit with a noise model attached.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyCircuit {
    pub ideal: Circuit,
    pub model: NoiseModel,
}

fn overshot(kind: &GateKind, delta: f64) -> Option<CMatrix> {
    match kind {
        GateKind::Rx(a) => Some(gates::rx(a + delta)),
        GateKind::Ry(a) => Some(gates::ry(a + delta)),
        GateKind::Rz(a) => Some(gates::rz(a + delta)),
        GateKind::T | GateKind::Tdg | GateKind::S | GateKind::Sdg | GateKind::Z => {
            Some(gates::rz(delta) * kind.matrix())
        }
        _ => None,
    }
}

impl NoisyCircuit {
    pub fn new(ideal: Circuit, model: NoiseModel) -> Self {
        Self { ideal, model }
    }

    /// Noisy operations of one gate: gate, damping, then coherent error.
    pub fn gate_operations(&self, g: &Gate, damping: &[Option<KrausSet>; 2], out: &mut Vec<Operation>) {
        let m = &self.model;
        let matrix = match (g.benchmarked && m.rotation_overshoot != 0.0, g.frame) {
            (true, false) => overshot(&g.kind, m.rotation_overshoot).unwrap_or_else(|| g.matrix()),
            _ => g.matrix(),
        };
        out.push(Operation::Unitary {
            qubits: g.qubits.clone(),
            matrix,
        });
        if g.frame {
            return;
        }
        let two = g.kind.arity() == 2;
        if let Some(k) = &damping[usize::from(two)] {
            for &q in &g.qubits {
                out.push(Operation::Channel {
                    qubits: vec![q],
                    kraus: k.clone(),
                });
            }
        }
        if two && m.has_coherent_error() {
            out.push(Operation::Unitary {
                qubits: g.qubits.clone(),
                matrix: gates::fsim(m.coherent_theta, m.coherent_phi),
            });
        }
    }

    fn damping(&self) -> [Option<KrausSet>; 2] {
        let build = |p: f64| (p > 0.0).then(|| make_damping_channels(p).expect("model validated"));
        [build(self.model.one_qubit_damping), build(self.model.two_qubit_damping)]
    }

    pub fn operations(&self) -> Vec<Operation> {
        let damping = self.damping();
        let mut out = Vec::new();
        for g in self.ideal.gates() {
            self.gate_operations(g, &damping, &mut out);
        }
        out
    }

    /// Each gate relabelled onto qubits `0..arity`, as an ideal one-gate
    /// circuit paired with its noisy operations.
    pub fn local_gates(&self) -> Result<Vec<(Circuit, Vec<Operation>)>> {
        let damping = self.damping();
        self.ideal
            .gates()
            .map(|g| {
                let k = g.kind.arity();
                let local = Gate {
                    qubits: (0..k).collect(),
                    ..g.clone()
                };
                let mut ops = Vec::new();
                self.gate_operations(&local, &damping, &mut ops);
                Ok((Circuit::from_layers(k, TargetKind::Custom, vec![vec![local]])?, ops))
            })
            .collect()
    }
}

pub fn noisify_circuit(circ: &Circuit, model: &NoiseModel) -> NoisyCircuit {
    NoisyCircuit::new(circ.clone(), model.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    ExactChannel,
    ProductOfComponents,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub process_fidelity: f64,
    pub stochastic_fidelity: f64,
    pub method: OracleMethod,
}

fn exact_fidelities(n: usize, ideal: &[Operation], noisy: &[Operation]) -> Result<(f64, f64)> {
    let r_ideal = ptm_of_operations(n, ideal);
    let r_noisy = ptm_of_operations(n, noisy);
    Ok((
        process_fidelity(&r_ideal, &r_noisy)?,
        stochastic_fidelity_exact(&r_noisy),
    ))
}

/// Exact fidelities of the noisy target for widths up to the dense cap,
/// otherwise the product of per-gate exact fidelities.
pub fn oracle_fidelities(target: &Circuit, model: &NoiseModel) -> Result<GroundTruth> {
    let noisy = NoisyCircuit::new(target.clone(), model.clone());
    if target.width() <= DEFAULT_PTM_CAP {
        let (f, s) = exact_fidelities(target.width(), &target.operations(), &noisy.operations())?;
        return Ok(GroundTruth {
            process_fidelity: f,
            stochastic_fidelity: s,
            method: OracleMethod::ExactChannel,
        });
    }
    let (mut f, mut s) = (1.0, 1.0);
    for (ideal, ops) in noisy.local_gates()? {
        let (gf, gs) = exact_fidelities(ideal.width(), &ideal.operations(), &ops)?;
        f *= gf;
        s *= gs;
    }
    Ok(GroundTruth {
        process_fidelity: f,
        stochastic_fidelity: s,
        method: OracleMethod::ProductOfComponents,
    })
}
