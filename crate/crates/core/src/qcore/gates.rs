//! Matrices of the standard gates used by the builders and noise models.

use super::linalg::{c, diag, mat2, CMatrix, C64, I, ONE, ZERO};

pub fn x() -> CMatrix {
    mat2(ZERO, ONE, ONE, ZERO)
}

pub fn y() -> CMatrix {
    mat2(ZERO, -I, I, ZERO)
}

pub fn z() -> CMatrix {
    diag(&[ONE, -ONE])
}

pub fn h() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    mat2(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))
}

pub fn s() -> CMatrix {
    diag(&[ONE, I])
}

pub fn t() -> CMatrix {
    diag(&[ONE, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)])
}

/// `R_X(θ) = exp(-iθX/2)`.
pub fn rx(theta: f64) -> CMatrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    mat2(c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0))
}

/// `R_Y(θ) = exp(-iθY/2)`.
pub fn ry(theta: f64) -> CMatrix {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    mat2(c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0))
}

/// `R_Z(θ) = exp(-iθZ/2)`.
pub fn rz(theta: f64) -> CMatrix {
    diag(&[C64::from_polar(1.0, -theta / 2.0), C64::from_polar(1.0, theta / 2.0)])
}

pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, col)] = ONE;
    }
    m
}

pub fn cz() -> CMatrix {
    diag(&[ONE, ONE, ONE, -ONE])
}

/// `ZZ(θ) = exp(-iθ Z⊗Z / 2)`.
pub fn zz(theta: f64) -> CMatrix {
    let a = C64::from_polar(1.0, -theta / 2.0);
    let b = C64::from_polar(1.0, theta / 2.0);
    diag(&[a, b, b, a])
}

/// Fermionic simulation gate with iswap angle `theta` and controlled phase `phi`.
pub fn fsim(theta: f64, phi: f64) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = c(theta.cos(), 0.0);
    m[(1, 2)] = c(0.0, -theta.sin());
    m[(2, 1)] = c(0.0, -theta.sin());
    m[(2, 2)] = c(theta.cos(), 0.0);
    m[(3, 3)] = C64::from_polar(1.0, phi);
    m
}

pub fn toffoli() -> CMatrix {
    let mut m = CMatrix::identity(8, 8);
    m[(6, 6)] = ZERO;
    m[(7, 7)] = ZERO;
    m[(6, 7)] = ONE;
    m[(7, 6)] = ONE;
    m
}

/// Single-qubit Pauli by index `0..4` = I, X, Y, Z.
pub fn pauli(index: usize) -> CMatrix {
    match index {
        0 => CMatrix::identity(2, 2),
        1 => x(),
        2 => y(),
        3 => z(),
        _ => panic!("pauli index {index} out of range"),
    }
}

/// Tensor product of single-qubit Paulis; `digits[0]` acts on qubit 0.
pub fn pauli_string(digits: &[usize]) -> CMatrix {
    digits
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, &p| acc.kronecker(&pauli(p)))
}

/// Base-4 digits of `index` for an `n`-qubit Pauli label (qubit 0 first).
pub fn pauli_digits(index: usize, n: usize) -> Vec<usize> {
    (0..n).map(|q| (index >> (2 * (n - 1 - q))) & 3).collect()
}

#[cfg(test)]
mod tests {
    use super::super::linalg::{max_abs_diff, phase_invariant_distance, unitarity_defect};
    use super::*;

    #[test]
    fn all_gates_are_unitary() {
        for m in [
            x(),
            y(),
            z(),
            h(),
            s(),
            t(),
            rx(0.3),
            ry(-1.1),
            rz(2.0),
            cnot(),
            cz(),
            zz(0.7),
            fsim(0.4, -0.9),
            toffoli(),
        ] {
            assert!(unitarity_defect(&m) < 1e-14);
        }
    }

    #[test]
    fn t_is_rz_quarter_pi_up_to_phase() {
        assert!(phase_invariant_distance(&t(), &rz(std::f64::consts::FRAC_PI_4)) < 1e-15);
    }

    #[test]
    fn fsim_angles_add() {
        let a = fsim(0.3, 0.5) * fsim(-0.1, 0.25);
        assert!(max_abs_diff(&a, &fsim(0.2, 0.75)) < 1e-14);
    }

    #[test]
    fn pauli_string_ordering() {
        let xz = pauli_string(&[1, 3]);
        assert!(max_abs_diff(&xz, &x().kronecker(&z())) < 1e-15);
        assert_eq!(pauli_digits(0b0111, 2), vec![1, 3]);
    }
}
