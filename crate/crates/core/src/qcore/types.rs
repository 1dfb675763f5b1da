use nalgebra::DMatrix;

use super::linalg::{is_power_of_two, max_abs_diff, unitarity_defect, CMatrix, C64};
use crate::error::{CsbError, Result};

/// Tolerance used when accepting a matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-8;
/// Tolerance for trace preservation of Kraus sets and PTM first rows.
pub const TP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_pow2(&m)?;
        let defect = unitarity_defect(&m);
        if defect > UNITARY_TOL {
            return Err(CsbError::Validation(format!(
                "matrix is not unitary: |UU† - I|_max = {defect:.3e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

fn check_square_pow2(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(CsbError::Validation(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_power_of_two(m.nrows()) || m.nrows() < 2 {
        return Err(CsbError::Validation(format!(
            "dimension {} is not a power of two",
            m.nrows()
        )));
    }
    Ok(())
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_pow2(&m)?;
        let herm = max_abs_diff(&m, &m.adjoint());
        if herm > 1e-10 {
            return Err(CsbError::Validation(format!(
                "density matrix not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(CsbError::Validation(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let hermitian = (&m + m.adjoint()).map(|v| v * 0.5);
        let min_eig = hermitian
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 {
            return Err(CsbError::Validation(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self(m))
    }

    /// Projector onto a (normalised on entry) pure state.
    pub fn pure(state: &[C64]) -> Result<Self> {
        let norm = state.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(CsbError::Validation("zero state vector".into()));
        }
        let v: Vec<C64> = state.iter().map(|a| a / norm).collect();
        let d = v.len();
        Self::new(CMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj()))
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis(n: usize, index: usize) -> Self {
        let d = 1usize << n;
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// Trace-preserving set of Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet(Vec<CMatrix>);

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| CsbError::Validation("empty Kraus set".into()))?;
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for k in &ops {
            if k.nrows() != d || k.ncols() != d {
                return Err(CsbError::DimensionMismatch {
                    expected: d,
                    found: k.nrows(),
                });
            }
            sum += k.adjoint() * k;
        }
        let defect = max_abs_diff(&sum, &CMatrix::identity(d, d));
        if defect > TP_TOL {
            return Err(CsbError::Validation(format!(
                "Kraus set not trace preserving (defect {defect:.3e})"
            )));
        }
        Ok(Self(ops))
    }

    pub fn unitary(u: &UnitaryMatrix) -> Self {
        Self(vec![u.matrix().clone()])
    }

    pub fn identity(d: usize) -> Self {
        Self(vec![CMatrix::identity(d, d)])
    }

    pub fn dim(&self) -> usize {
        self.0[0].nrows()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.0
    }

    /// Kraus set of `other ∘ self` (self applied first).
    pub fn then(&self, other: &KrausSet) -> KrausSet {
        let ops = other
            .0
            .iter()
            .flat_map(|b| self.0.iter().map(move |a| b * a))
            .filter(|k| k.iter().any(|v| v.norm() > 1e-15))
            .collect();
        KrausSet(ops)
    }

    /// Superoperator acting on row-major vectorised blocks:
    /// `S[(i,j),(k,l)] = Σ_m K_m[i,k] conj(K_m[j,l])`.
    pub fn superoperator(&self) -> CMatrix {
        let d = self.dim();
        let mut s = CMatrix::zeros(d * d, d * d);
        for k in &self.0 {
            for i in 0..d {
                for j in 0..d {
                    for a in 0..d {
                        let kia = k[(i, a)];
                        if kia.norm() == 0.0 {
                            continue;
                        }
                        for b in 0..d {
                            s[(i * d + j, a * d + b)] += kia * k[(j, b)].conj();
                        }
                    }
                }
            }
        }
        s
    }
}

/// Pauli transfer matrix in the normalised basis `P/√d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ptm {
    d: usize,
    m: DMatrix<f64>,
}

impl Ptm {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let d2 = m.nrows();
        let d = (d2 as f64).sqrt().round() as usize;
        if m.ncols() != d2 || d * d != d2 || !is_power_of_two(d) {
            return Err(CsbError::Validation(format!(
                "PTM shape {}x{} is not d²×d² for a qubit dimension d",
                m.nrows(),
                m.ncols()
            )));
        }
        let row_defect = (0..d2)
            .map(|j| (m[(0, j)] - if j == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if row_defect > TP_TOL {
            return Err(CsbError::Validation(format!(
                "PTM first row deviates from (1,0,…,0) by {row_defect:.3e}"
            )));
        }
        Ok(Self { d, m })
    }

    pub(crate) fn from_raw(d: usize, m: DMatrix<f64>) -> Self {
        Self { d, m }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            m: DMatrix::identity(d * d, d * d),
        }
    }

    /// Hilbert-space dimension `d` (the matrix is `d² × d²`).
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// PTM of `other ∘ self`.
    pub fn then(&self, other: &Ptm) -> Ptm {
        Ptm {
            d: self.d,
            m: &other.m * &self.m,
        }
    }

    /// Deviation of the first row from `(1, 0, …, 0)`.
    pub fn trace_preservation_defect(&self) -> f64 {
        (0..self.m.ncols())
            .map(|j| (self.m[(0, j)] - if j == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenphase and unit eigenvector of an ideal unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// Phase in `(-π, π]`.
    pub phase: f64,
    pub vector: Vec<C64>,
}

#[cfg(test)]
mod tests {
    use super::super::gates;
    use super::*;

    #[test]
    fn unitary_rejects_non_unitary() {
        let m = gates::h().map(|v| v * 1.01);
        assert!(matches!(UnitaryMatrix::new(m), Err(CsbError::Validation(_))));
        assert!(UnitaryMatrix::new(gates::cnot()).is_ok());
    }

    #[test]
    fn density_matrix_validation() {
        let plus = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let rho = DensityMatrix::pure(&plus).unwrap();
        assert!((rho.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
        let bad = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-0.5, 0.0),
            ],
        );
        assert!(DensityMatrix::new(bad).is_err());
    }

    #[test]
    fn kraus_rejects_non_tp() {
        let k = gates::h().map(|v| v * 0.9);
        assert!(KrausSet::new(vec![k]).is_err());
    }

    #[test]
    fn ptm_rejects_bad_first_row() {
        let mut m = DMatrix::identity(4, 4);
        m[(0, 3)] = 0.1;
        assert!(Ptm::new(m).is_err());
        assert!(Ptm::new(DMatrix::identity(3, 3)).is_err());
    }
}
