//! Randomized compiling with Pauli frames absorbed into easy layers.

use rand::Rng;

use super::{is_hard, Circuit, Gate, GateKind};
use crate::error::{CsbError, Result};
use crate::qcore::gates::pauli;
use crate::qcore::linalg::{factor_two_qubit, CMatrix};
use crate::rng::{stream, tag};

/// A frame `P_a ⊗ P_b` together with the local correction `G (P_a ⊗ P_b) G†`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub paulis: (usize, usize),
    pub correction: (CMatrix, CMatrix),
}

/// Two-qubit Pauli frames whose conjugate through `g` is a product operator.
pub fn allowed_frames(g: &CMatrix) -> Vec<Frame> {
    let mut out = Vec::new();
    for p in 0..4 {
        for q in 0..4 {
            let pq = pauli(p).kronecker(&pauli(q));
            let conj = g * pq * g.adjoint();
            if let Some(correction) = factor_two_qubit(&conj) {
                out.push(Frame {
                    paulis: (p, q),
                    correction,
                });
            }
        }
    }
    out
}

fn is_scalar(m: &CMatrix) -> bool {
    m[(0, 1)].norm() < 1e-12 && m[(1, 0)].norm() < 1e-12 && (m[(0, 0)] - m[(1, 1)]).norm() < 1e-12
}

type EasyLayer = Vec<Option<Gate>>;

enum Slot {
    Easy(EasyLayer),
    Hard(Vec<Gate>),
}

fn easy_from(width: usize, layer: &[Gate]) -> EasyLayer {
    let mut slots = vec![None; width];
    for g in layer {
        slots[g.qubits[0]] = Some(g.clone());
    }
    slots
}

/// Applies `m` after whatever already occupies the slot.
fn append(slot: &mut Option<Gate>, q: usize, m: &CMatrix) {
    if is_scalar(m) {
        return;
    }
    *slot = Some(match slot.take() {
        Some(g) => Gate {
            kind: GateKind::U(m * g.matrix()),
            ..g
        },
        None => Gate::new(GateKind::U(m.clone()), &[q]).as_frame(),
    });
}

/// Applies `m` before whatever already occupies the slot.
fn prepend(slot: &mut Option<Gate>, q: usize, m: &CMatrix) {
    if is_scalar(m) {
        return;
    }
    *slot = Some(match slot.take() {
        Some(g) => Gate {
            kind: GateKind::U(g.matrix() * m),
            ..g
        },
        None => Gate::new(GateKind::U(m.clone()), &[q]).as_frame(),
    });
}

struct FrameCache(Vec<(GateKind, Vec<Frame>)>);

impl FrameCache {
    fn get(&mut self, g: &Gate) -> Result<&[Frame]> {
        let pos = match self.0.iter().position(|(k, _)| *k == g.kind) {
            Some(p) => p,
            None => {
                let frames = allowed_frames(&g.matrix());
                if frames.len() < 2 {
                    return Err(CsbError::UnsupportedCycle { gate: g.to_string() });
                }
                self.0.push((g.kind.clone(), frames));
                self.0.len() - 1
            }
        };
        Ok(&self.0[pos].1)
    }
}

/// One random compilation of `circ` with the same ideal unitary.
pub fn randomize_once<R: Rng>(circ: &Circuit, rng: &mut R) -> Result<Circuit> {
    let n = circ.width();
    let mut slots: Vec<Slot> = Vec::new();
    for layer in circ.layers() {
        if is_hard(layer) {
            if !matches!(slots.last(), Some(Slot::Easy(_))) {
                slots.push(Slot::Easy(vec![None; n]));
            }
            slots.push(Slot::Hard(layer.clone()));
        } else {
            slots.push(Slot::Easy(easy_from(n, layer)));
        }
    }
    if matches!(slots.last(), Some(Slot::Hard(_))) {
        slots.push(Slot::Easy(vec![None; n]));
    }

    let mut cache = FrameCache(Vec::new());
    for i in 0..slots.len() {
        let Slot::Hard(hard) = &slots[i] else { continue };
        let mut before: Vec<(usize, CMatrix)> = Vec::new();
        let mut after: Vec<(usize, CMatrix)> = Vec::new();
        let mut busy = vec![false; n];
        for g in hard {
            for &q in &g.qubits {
                busy[q] = true;
            }
            if g.kind.arity() == 2 {
                let frames = cache.get(g)?;
                let f = &frames[rng.random_range(0..frames.len())];
                let (a, b) = (g.qubits[0], g.qubits[1]);
                before.push((a, pauli(f.paulis.0)));
                before.push((b, pauli(f.paulis.1)));
                after.push((a, f.correction.0.clone()));
                after.push((b, f.correction.1.clone()));
            } else {
                let p = pauli(rng.random_range(0..4));
                let m = g.matrix();
                after.push((g.qubits[0], &m * &p * m.adjoint()));
                before.push((g.qubits[0], p));
            }
        }
        for q in (0..n).filter(|&q| !busy[q]) {
            let p = pauli(rng.random_range(0..4));
            before.push((q, p.clone()));
            after.push((q, p));
        }
        if let Slot::Easy(prev) = &mut slots[i - 1] {
            for (q, m) in &before {
                append(&mut prev[*q], *q, m);
            }
        }
        if let Slot::Easy(next) = &mut slots[i + 1] {
            for (q, m) in &after {
                prepend(&mut next[*q], *q, m);
            }
        }
    }

    let mut out = Circuit::new(n, circ.kind());
    for slot in slots {
        let layer: Vec<Gate> = match slot {
            Slot::Easy(e) => e.into_iter().flatten().collect(),
            Slot::Hard(h) => h,
        };
        if !layer.is_empty() {
            out.push_layer(layer)?;
        }
    }
    Ok(out)
}

/// `n_r` independent random compilations, each seeded from `seed` and its index.
pub fn randomized_compile(circ: &Circuit, n_r: usize, seed: u64) -> Result<Vec<Circuit>> {
    (0..n_r)
        .map(|r| {
            let mut rng = stream(seed, &[tag::RANDOMIZE, r as u64]);
            randomize_once(circ, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_target, lift_degeneracy, toffoli_lift_layer, IsingParams, TargetKind, TargetSpec};
    use crate::qcore::gates;
    use crate::qcore::linalg::phase_invariant_distance;

    #[test]
    fn frame_counts() {
        assert_eq!(allowed_frames(&gates::cnot()).len(), 16);
        assert_eq!(allowed_frames(&gates::cz()).len(), 16);
        assert_eq!(allowed_frames(&gates::zz(0.37)).len(), 8);
        assert!(allowed_frames(&gates::fsim(0.3, 0.7)).len() >= 2);
    }

    #[test]
    fn cnot_frame_absorbed() {
        let c = Circuit::from_layers(2, TargetKind::Custom, vec![vec![Gate::new(GateKind::Cx, &[0, 1])]]).unwrap();
        let out = randomized_compile(&c, 1, 5).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].hard_cycle_count(), 1);
        assert!(phase_invariant_distance(&out[0].unitary(), &gates::cnot()) < 1e-9);
        let frames = out[0].gates().filter(|g| g.frame).count();
        assert!(frames >= 1 || out[0].gate_count() == 1);
    }

    #[test]
    fn no_hard_cycles_gives_copies() {
        let c = build_target(&TargetSpec::Rz { theta: 0.4 }).unwrap();
        let out = randomized_compile(&c, 3, 1).unwrap();
        assert!(out.iter().all(|o| *o == c));
    }

    #[test]
    fn preserves_unitary_over_seeds() {
        let toffoli = build_target(&TargetSpec::Toffoli).unwrap();
        let varied = lift_degeneracy(&toffoli, &toffoli_lift_layer()).unwrap();
        let ising = build_target(&TargetSpec::Ising(
            IsingParams::new(vec![0.3, -0.7, 0.2], vec![0.5, -0.1, 0.9], 0.4).unwrap(),
        ))
        .unwrap();
        let fsim = build_target(&TargetSpec::Fsim { theta: 0.7, phi: 1.1 }).unwrap();
        for circ in [toffoli, varied, ising, fsim] {
            let u = circ.unitary();
            for (i, r) in randomized_compile(&circ, 100, 42).unwrap().iter().enumerate() {
                assert!(phase_invariant_distance(&r.unitary(), &u) < 1e-9, "seed index {i}");
                assert_eq!(r.hard_cycle_count(), circ.hard_cycle_count());
            }
        }
    }

    #[test]
    fn compilations_are_reproducible() {
        let c = build_target(&TargetSpec::Toffoli).unwrap();
        assert_eq!(
            randomized_compile(&c, 4, 9).unwrap(),
            randomized_compile(&c, 4, 9).unwrap()
        );
        assert_ne!(
            randomized_compile(&c, 1, 9).unwrap(),
            randomized_compile(&c, 1, 10).unwrap()
        );
    }
}
