use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{is_hard, Circuit, Gate, GateKind, TargetKind};
use crate::error::{invalid, CsbError, Result};

/// Ising ring `H = Σ h_i Z_i + Σ J_e Z_i Z_j` evolved for `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub h: Vec<f64>,
    /// One coupling per edge of [`IsingParams::edges`].
    pub j: Vec<f64>,
    pub dt: f64,
}

impl IsingParams {
    pub fn new(h: Vec<f64>, j: Vec<f64>, dt: f64) -> Result<Self> {
        let n = h.len();
        if n < 2 {
            return Err(invalid("ising.h", "need at least two qubits"));
        }
        if j.len() != Self::edges(n).len() {
            return Err(invalid(
                "ising.j",
                format!(
                    "expected {} couplings for {n} qubits, got {}",
                    Self::edges(n).len(),
                    j.len()
                ),
            ));
        }
        if !dt.is_finite() || h.iter().chain(&j).any(|v| !v.is_finite()) {
            return Err(invalid("ising", "non-finite parameter"));
        }
        Ok(Self { h, j, dt })
    }

    /// Fields and couplings drawn uniformly from `[-1, 1]`.
    pub fn random<R: Rng>(n: usize, dt: f64, rng: &mut R) -> Result<Self> {
        let h = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let j = (0..Self::edges(n).len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self::new(h, j, dt)
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    /// Ring edges; two qubits share a single edge.
    pub fn edges(n: usize) -> Vec<(usize, usize)> {
        match n {
            0 | 1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }

    /// Classical energy of basis state `x` (qubit 0 is the most significant bit).
    pub fn energy(&self, x: usize) -> f64 {
        let n = self.n();
        let z = |q: usize| if (x >> (n - 1 - q)) & 1 == 1 { -1.0 } else { 1.0 };
        let field: f64 = self.h.iter().enumerate().map(|(q, h)| h * z(q)).sum();
        let coupling: f64 = Self::edges(n)
            .iter()
            .zip(&self.j)
            .map(|(&(a, b), j)| j * z(a) * z(b))
            .sum();
        field + coupling
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetSpec {
    Rz { theta: f64 },
    Fsim { theta: f64, phi: f64 },
    Toffoli,
    Ising(IsingParams),
}

pub fn build_target(spec: &TargetSpec) -> Result<Circuit> {
    match spec {
        TargetSpec::Rz { theta } => {
            if !theta.is_finite() {
                return Err(invalid("theta", "must be finite"));
            }
            Circuit::from_layers(
                1,
                TargetKind::Rz,
                vec![vec![Gate::new(GateKind::Rz(*theta), &[0]).benchmarked()]],
            )
        }
        TargetSpec::Fsim { theta, phi } => {
            if !theta.is_finite() || !phi.is_finite() {
                return Err(invalid("theta/phi", "must be finite"));
            }
            Circuit::from_layers(
                2,
                TargetKind::Fsim,
                vec![vec![Gate::new(
                    GateKind::Fsim {
                        theta: *theta,
                        phi: *phi,
                    },
                    &[0, 1],
                )]],
            )
        }
        TargetSpec::Toffoli => toffoli(),
        TargetSpec::Ising(p) => ising(p),
    }
}

fn toffoli() -> Result<Circuit> {
    use GateKind::*;
    let (a, b, c) = (0, 1, 2);
    let g = |k: GateKind, q: &[usize]| Gate::new(k, q);
    Circuit::from_layers(
        3,
        TargetKind::Toffoli,
        vec![
            vec![g(H, &[c])],
            vec![g(Cx, &[b, c])],
            vec![g(Tdg, &[c])],
            vec![g(Cx, &[a, c])],
            vec![g(T, &[c])],
            vec![g(Cx, &[b, c])],
            vec![g(Tdg, &[c])],
            vec![g(Cx, &[a, c])],
            vec![g(T, &[b]), g(T, &[c])],
            vec![g(Cx, &[a, b])],
            vec![g(Tdg, &[b])],
            vec![g(Cx, &[a, b])],
            vec![g(T, &[a]), g(H, &[c])],
        ],
    )
}

fn ising(p: &IsingParams) -> Result<Circuit> {
    let n = p.n();
    let mut c = Circuit::new(n, TargetKind::Ising);
    c.push_layer(
        (0..n)
            .map(|q| Gate::new(GateKind::Rz(2.0 * p.h[q] * p.dt), &[q]))
            .collect(),
    )?;
    let edges = IsingParams::edges(n);
    let zz = |e: usize| {
        let (a, b) = edges[e];
        Gate::new(GateKind::Zz(2.0 * p.j[e] * p.dt), &[a, b])
    };
    // Even bonds, odd bonds, and the closing bond of an odd ring on its own.
    let mut even = Vec::new();
    let mut odd = Vec::new();
    let mut closing = Vec::new();
    for (e, &(a, _)) in edges.iter().enumerate() {
        if n > 2 && e == n - 1 {
            if n.is_multiple_of(2) {
                odd.push(zz(e));
            } else {
                closing.push(zz(e));
            }
        } else if a % 2 == 0 {
            even.push(zz(e));
        } else {
            odd.push(zz(e));
        }
    }
    for layer in [even, odd, closing] {
        if !layer.is_empty() {
            c.push_layer(layer)?;
        }
    }
    Ok(c)
}

/// Layer appended to the Toffoli fragment to split its degenerate spectrum.
pub fn toffoli_lift_layer() -> Vec<Gate> {
    vec![
        Gate::new(GateKind::Rz(PI / 2.0), &[0]),
        Gate::new(GateKind::Rz(2.0 * PI / 3.0), &[1]),
        Gate::new(GateKind::Rx(4.0 * PI / 5.0), &[2]),
    ]
}

/// Rotation angle about Z of gates equal to `R_Z` up to a global phase.
fn z_angle(k: &GateKind) -> Option<f64> {
    match k {
        GateKind::Z => Some(PI),
        GateKind::S => Some(PI / 2.0),
        GateKind::Sdg => Some(-PI / 2.0),
        GateKind::T => Some(PI / 4.0),
        GateKind::Tdg => Some(-PI / 4.0),
        GateKind::Rz(a) => Some(*a),
        _ => None,
    }
}

/// Single-qubit gate equal to `second · first` up to a global phase.
fn merge_single(first: &Gate, second: &Gate) -> Gate {
    let kind = match (&first.kind, &second.kind) {
        (GateKind::Rx(a), GateKind::Rx(b)) => GateKind::Rx(a + b),
        (GateKind::Ry(a), GateKind::Ry(b)) => GateKind::Ry(a + b),
        (f, s) => match (z_angle(f), z_angle(s)) {
            (Some(a), Some(b)) => GateKind::Rz(a + b),
            _ => GateKind::U(second.matrix() * first.matrix()),
        },
    };
    Gate {
        kind,
        qubits: first.qubits.clone(),
        frame: first.frame && second.frame,
        benchmarked: first.benchmarked || second.benchmarked,
    }
}

/// Merges a layer of single-qubit gates into the final layer of `target`.
pub fn lift_degeneracy(target: &Circuit, layer: &[Gate]) -> Result<Circuit> {
    if let Some(g) = layer.iter().find(|g| g.kind.arity() != 1) {
        return Err(CsbError::Validation(format!(
            "lift layer must be single-qubit, found {g}"
        )));
    }
    let mut out = target.clone().with_kind(TargetKind::Custom);
    let last_is_easy = out.layers().last().is_some_and(|l| !is_hard(l));
    if !last_is_easy {
        out.push_layer(layer.to_vec())?;
        return Ok(out);
    }
    let mut last = out.layers_mut().pop().unwrap_or_default();
    for g in layer {
        match last.iter_mut().find(|e| e.qubits == g.qubits) {
            Some(existing) => *existing = merge_single(existing, g),
            None => last.push(g.clone()),
        }
    }
    last.sort_by_key(|g| g.qubits[0]);
    out.push_layer(last)?;
    Ok(out)
}

/// `circ` repeated `n_rep` times as one target unit.
pub fn repeat_target(circ: &Circuit, n_rep: usize) -> Result<Circuit> {
    if n_rep == 0 {
        return Err(invalid("n_rep", "must be at least 1"));
    }
    let mut out = circ.clone();
    for _ in 1..n_rep {
        out = out.then(circ)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::gates;
    use crate::qcore::linalg::{max_abs_diff, phase_invariant_distance, C64};
    use crate::qcore::{eig_unitary, UnitaryMatrix};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn rz_target_is_t_gate() {
        let c = build_target(&TargetSpec::Rz { theta: FRAC_PI_4 }).unwrap();
        assert!(phase_invariant_distance(&c.unitary(), &gates::t()) < 1e-14);
        assert!(c.gates().all(|g| g.benchmarked));
    }

    #[test]
    fn fsim_target_matrix() {
        let c = build_target(&TargetSpec::Fsim {
            theta: FRAC_PI_4,
            phi: PI / 2.0,
        })
        .unwrap();
        let u = c.unitary();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[(1, 1)] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((u[(1, 2)] - C64::new(0.0, -s)).norm() < 1e-15);
        assert!((u[(3, 3)] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn toffoli_fragment_composes_to_toffoli() {
        let c = build_target(&TargetSpec::Toffoli).unwrap();
        assert!(phase_invariant_distance(&c.unitary(), &gates::toffoli()) < 1e-9);
        assert_eq!(c.gates().filter(|g| g.kind == GateKind::Cx).count(), 6);
        assert!(!is_hard(c.layers().last().unwrap()));
    }

    #[test]
    fn ising_two_qubit_example() {
        let p = IsingParams::new(vec![0.3, -0.2], vec![0.5], 1.0).unwrap();
        let c = build_target(&TargetSpec::Ising(p.clone())).unwrap();
        let diag = c.diagonal_phases().unwrap();
        assert!(p.energy(0b01).abs() < 1e-15);
        assert!((diag[0b01] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ising_layers_are_disjoint_for_odd_and_even_rings() {
        for n in 2..=7 {
            let p = IsingParams::new(vec![0.1; n], vec![0.2; IsingParams::edges(n).len()], 0.5).unwrap();
            let c = build_target(&TargetSpec::Ising(p)).unwrap();
            assert_eq!(
                c.gates().filter(|g| g.kind.arity() == 2).count(),
                IsingParams::edges(n).len()
            );
            assert!(c.layers().len() <= 4);
        }
    }

    #[test]
    fn lift_toffoli_splits_spectrum() {
        let t = build_target(&TargetSpec::Toffoli).unwrap();
        let varied = lift_degeneracy(&t, &toffoli_lift_layer()).unwrap();
        assert_eq!(varied.layers().len(), t.layers().len());
        let expect = gates::rz(PI / 2.0)
            .kronecker(&gates::rz(2.0 * PI / 3.0))
            .kronecker(&gates::rx(4.0 * PI / 5.0))
            * gates::toffoli();
        assert!(phase_invariant_distance(&varied.unitary(), &expect) < 1e-9);
        let pairs = eig_unitary(&UnitaryMatrix::new(varied.unitary()).unwrap()).unwrap();
        let mut gap = f64::INFINITY;
        for (i, a) in pairs.iter().enumerate() {
            for b in &pairs[i + 1..] {
                let d = crate::qcore::linalg::wrap_phase(a.phase - b.phase).abs();
                gap = gap.min(d);
            }
        }
        assert!(gap > 0.05, "minimum gap {gap}");
    }

    #[test]
    fn lift_rz_adds_angles_and_identity_is_neutral() {
        let t = build_target(&TargetSpec::Rz { theta: FRAC_PI_4 }).unwrap();
        let l = lift_degeneracy(&t, &[Gate::new(GateKind::Rz(PI / 3.0), &[0])]).unwrap();
        assert_eq!(l.gates().next().unwrap().kind, GateKind::Rz(FRAC_PI_4 + PI / 3.0));
        let same = lift_degeneracy(&t, &[Gate::new(GateKind::Rz(0.0), &[0])]).unwrap();
        assert!(max_abs_diff(&same.unitary(), &t.unitary()) < 1e-15);
        assert!(lift_degeneracy(&t, &[Gate::new(GateKind::Cx, &[0, 1])]).is_err());
    }

    #[test]
    fn repeat_adds_angles() {
        let t = build_target(&TargetSpec::Rz { theta: FRAC_PI_4 }).unwrap();
        assert_eq!(repeat_target(&t, 1).unwrap(), t);
        let r2 = repeat_target(&t, 2).unwrap();
        assert!(max_abs_diff(&r2.unitary(), &gates::rz(PI / 2.0)) < 1e-14);
        let r8 = repeat_target(&t, 8).unwrap();
        assert!(phase_invariant_distance(&r8.unitary(), &gates::pauli(0)) < 1e-13);
        assert!(repeat_target(&t, 0).is_err());
    }
}
