//! Eigen-decomposition of ideal unitaries.

use std::f64::consts::PI;

use super::linalg::{eigen_complex, svd_complex, wrap_phase, CMatrix, C64, ZERO};
use super::types::{EigenPair, UnitaryMatrix};
use crate::error::{CsbError, Result};

/// Two eigenphases closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-7;

fn snap_phase(x: f64) -> f64 {
    let w = wrap_phase(x);
    if w < -PI + DEGENERACY_TOL {
        PI
    } else {
        w
    }
}

/// Makes the first non-negligible component real and positive.
fn fix_phase(v: &mut [C64]) {
    if let Some(first) = v.iter().find(|a| a.norm() > 1e-9).copied() {
        let rot = first.conj() / first.norm();
        for a in v.iter_mut() {
            *a *= rot;
        }
    }
}

fn normalize(v: &mut [C64]) -> f64 {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in v.iter_mut() {
            *a /= norm;
        }
    }
    norm
}

/// Canonical orthonormal basis of the range of a projector: Gram–Schmidt over
/// the projected computational basis vectors `P e_0, P e_1, …`.
fn canonical_basis(projector: &CMatrix, rank: usize) -> Vec<Vec<C64>> {
    let d = projector.nrows();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(rank);
    for j in 0..d {
        if basis.len() == rank {
            break;
        }
        let mut v: Vec<C64> = (0..d).map(|i| projector[(i, j)]).collect();
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
        }
        if normalize(&mut v) > 1e-6 {
            fix_phase(&mut v);
            basis.push(v);
        }
    }
    basis
}

/// Eigenphases (ascending in `(-π, π]`) and eigenvectors of a unitary.
///
/// Degenerate levels get a deterministic orthonormal basis, so repeated
/// calls on the same input always return identical vectors.
pub fn eig_unitary(u: &UnitaryMatrix) -> Result<Vec<EigenPair>> {
    let m = u.matrix();
    let d = m.nrows();
    let (vals, vecs) =
        eigen_complex(m).ok_or_else(|| CsbError::Validation("eigen-decomposition did not converge".into()))?;

    let mut order: Vec<(f64, usize)> = vals.iter().enumerate().map(|(i, z)| (snap_phase(z.arg()), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut clusters: Vec<Vec<(f64, usize)>> = Vec::new();
    for entry in order {
        match clusters.last_mut() {
            Some(last) if entry.0 - last.last().unwrap().0 < DEGENERACY_TOL => last.push(entry),
            _ => clusters.push(vec![entry]),
        }
    }

    let mut pairs = Vec::with_capacity(d);
    for cluster in clusters {
        // Eigenvectors inside a level need not be orthogonal; the SVD gives
        // an orthonormal basis of their span.
        let block = CMatrix::from_fn(d, cluster.len(), |i, k| vecs[(i, cluster[k].1)]);
        let span =
            svd_complex(&block).ok_or_else(|| CsbError::Validation("eigenvector orthonormalization failed".into()))?;
        if span.s.last().is_some_and(|&s| s < 1e-6 * span.s[0]) {
            return Err(CsbError::Validation(
                "eigenvectors of a degenerate level are dependent".into(),
            ));
        }
        let mut projector = CMatrix::zeros(d, d);
        for k in 0..cluster.len() {
            let qc = span.u.column(k);
            projector += qc * qc.adjoint();
        }
        for vector in canonical_basis(&projector, cluster.len()) {
            // Rayleigh quotient gives a phase accurate to machine precision.
            let uv: Vec<C64> = (0..d).map(|i| (0..d).map(|k| m[(i, k)] * vector[k]).sum()).collect();
            let rq: C64 = vector.iter().zip(&uv).map(|(a, b)| a.conj() * b).sum();
            pairs.push(EigenPair {
                phase: snap_phase(rq.arg()),
                vector,
            });
        }
    }
    // Stable sort keeps the Gram–Schmidt order inside degenerate levels.
    pairs.sort_by(|a, b| a.phase.total_cmp(&b.phase));
    Ok(pairs)
}

/// `‖U v − e^{iλ} v‖₂` for an eigenpair.
pub fn eigen_residual(u: &CMatrix, pair: &EigenPair) -> f64 {
    let d = u.nrows();
    let e = C64::from_polar(1.0, pair.phase);
    (0..d)
        .map(|i| {
            let uv: C64 = (0..d).fold(ZERO, |acc, k| acc + u[(i, k)] * pair.vector[k]);
            (uv - e * pair.vector[i]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Multiplicities of distinct eigenphases, with wrap-around at ±π.
pub fn phase_multiplicities(phases: &[f64]) -> Vec<usize> {
    let mut sorted: Vec<f64> = phases.iter().map(|&p| snap_phase(p)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut counts: Vec<usize> = Vec::new();
    let mut prev: Option<f64> = None;
    for p in sorted {
        match prev {
            Some(q) if p - q < DEGENERACY_TOL => *counts.last_mut().unwrap() += 1,
            _ => counts.push(1),
        }
        prev = Some(p);
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::super::gates;
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn phases(m: CMatrix) -> Vec<f64> {
        eig_unitary(&UnitaryMatrix::new(m).unwrap())
            .unwrap()
            .iter()
            .map(|p| p.phase)
            .collect()
    }

    #[test]
    fn rz_phases_on_basis_states() {
        let pairs = eig_unitary(&UnitaryMatrix::new(gates::rz(FRAC_PI_4)).unwrap()).unwrap();
        assert!((pairs[0].phase + FRAC_PI_4 / 2.0).abs() < 1e-14);
        assert!((pairs[1].phase - FRAC_PI_4 / 2.0).abs() < 1e-14);
        assert!((pairs[0].vector[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((pairs[1].vector[1] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn toffoli_multiplicities() {
        let u = gates::toffoli();
        let pairs = eig_unitary(&UnitaryMatrix::new(u.clone()).unwrap()).unwrap();
        let zeros = pairs.iter().filter(|p| p.phase.abs() < 1e-9).count();
        let pis = pairs.iter().filter(|p| (p.phase - PI).abs() < 1e-9).count();
        assert_eq!((zeros, pis), (7, 1));
        for p in &pairs {
            assert!(eigen_residual(&u, p) < 1e-9);
        }
        // The π level is (|110⟩ − |111⟩)/√2 with a positive first entry.
        let last = pairs.last().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((last.vector[6].re - s).abs() < 1e-12 && (last.vector[7].re + s).abs() < 1e-12);
        assert_eq!(
            phase_multiplicities(&pairs.iter().map(|p| p.phase).collect::<Vec<_>>()),
            vec![7, 1]
        );
    }

    #[test]
    fn fsim_phases() {
        let p = phases(gates::fsim(FRAC_PI_4, FRAC_PI_2));
        let expect = [-FRAC_PI_4, 0.0, FRAC_PI_4, FRAC_PI_2];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn degenerate_basis_is_orthonormal_and_deterministic() {
        let u = gates::toffoli();
        let a = eig_unitary(&UnitaryMatrix::new(u.clone()).unwrap()).unwrap();
        let b = eig_unitary(&UnitaryMatrix::new(u).unwrap()).unwrap();
        assert_eq!(a, b);
        for (i, x) in a.iter().enumerate() {
            for (j, y) in a.iter().enumerate() {
                let ip: C64 = x.vector.iter().zip(&y.vector).map(|(p, q)| p.conj() * q).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn non_unitary_is_rejected() {
        assert!(UnitaryMatrix::new(gates::h().map(|v| v * (1.0 + 1e-6))).is_err());
    }
}
