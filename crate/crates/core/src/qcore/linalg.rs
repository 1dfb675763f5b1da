//! Small dense complex matrix helpers.
//!
//! Qubit 0 is the most significant bit of a basis index, so a gate matrix
//! acting on qubits `[q0, q1]` is laid out as `M_{q0} ⊗ M_{q1}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn mat2(a: C64, b: C64, cc: C64, d: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

pub fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Distance between two unitaries after removing the best global phase,
/// measured as the max-norm of `a - e^{iφ} b`.
pub fn phase_invariant_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap: C64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    if overlap.norm() < 1e-300 {
        return max_abs_diff(a, b);
    }
    let phase = overlap / overlap.norm();
    let shifted = b.map(|x| x * phase);
    max_abs_diff(a, &shifted)
}

/// Deviation of `U U†` from the identity in max-norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let d = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &identity(d))
}

pub fn is_power_of_two(d: usize) -> bool {
    d >= 1 && d.is_power_of_two()
}

pub fn num_qubits(d: usize) -> usize {
    d.trailing_zeros() as usize
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Bit masks of `qubits` inside an `n`-qubit basis index, and the offsets of
/// every local basis state relative to a base index with those bits cleared.
#[derive(Debug, Clone)]
pub struct LocalLayout {
    pub mask: usize,
    pub offsets: Vec<usize>,
}

impl LocalLayout {
    pub fn new(n: usize, qubits: &[usize]) -> Self {
        let k = qubits.len();
        let bit = |q: usize| 1usize << (n - 1 - q);
        let mask = qubits.iter().map(|&q| bit(q)).fold(0, |m, b| m | b);
        let offsets = (0..1usize << k)
            .map(|l| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (l >> (k - 1 - i)) & 1 == 1)
                    .map(|(_, &q)| bit(q))
                    .sum()
            })
            .collect();
        Self { mask, offsets }
    }

    /// Local index of a full basis index.
    pub fn local_index(&self, full: usize) -> usize {
        self.offsets
            .iter()
            .position(|&o| full & self.mask == o)
            .expect("offset table covers every masked pattern")
    }

    pub fn bases(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        (0..d).filter(move |i| i & self.mask == 0)
    }
}

/// Lifts a `k`-local operator onto `n` qubits as a dense `2^n` matrix.
pub fn embed(op: &CMatrix, qubits: &[usize], n: usize) -> CMatrix {
    let d = 1usize << n;
    let layout = LocalLayout::new(n, qubits);
    let local = layout.offsets.len();
    assert_eq!(op.nrows(), local, "operator size does not match qubit count");
    let mut full = CMatrix::zeros(d, d);
    for base in layout.bases(d) {
        for r in 0..local {
            for cc in 0..local {
                full[(base + layout.offsets[r], base + layout.offsets[cc])] = op[(r, cc)];
            }
        }
    }
    full
}

/// Applies a `k`-local operator to a state vector in place.
pub fn apply_to_vector(state: &mut [C64], n: usize, qubits: &[usize], op: &CMatrix) {
    let layout = LocalLayout::new(n, qubits);
    let local = layout.offsets.len();
    let mut buf = vec![ZERO; local];
    for base in layout.bases(state.len()) {
        for (l, b) in buf.iter_mut().enumerate() {
            *b = (0..local).map(|m| op[(l, m)] * state[base + layout.offsets[m]]).sum();
        }
        for (l, b) in buf.iter().enumerate() {
            state[base + layout.offsets[l]] = *b;
        }
    }
}

fn to_faer_c(m: &CMatrix) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im))
}

fn to_faer_r(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer_c(m: faer::MatRef<'_, faer::c64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)].re, m[(i, j)].im))
}

/// Thin singular value decomposition `m = U diag(s) V†`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd<T: nalgebra::Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

pub fn svd_complex(m: &CMatrix) -> Option<Svd<C64>> {
    let svd = to_faer_c(m).thin_svd().ok()?;
    Some(Svd {
        u: from_faer_c(svd.U()),
        s: svd.S().column_vector().iter().map(|x| x.re).collect(),
        v: from_faer_c(svd.V()),
    })
}

pub fn svd_real(m: &DMatrix<f64>) -> Option<Svd<f64>> {
    let svd = to_faer_r(m).thin_svd().ok()?;
    let u = svd.U();
    let v = svd.V();
    Some(Svd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        s: svd.S().column_vector().iter().copied().collect(),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    })
}

/// Eigenvalues of a general real matrix.
pub fn eigenvalues_real(m: &DMatrix<f64>) -> Option<Vec<C64>> {
    let ev = to_faer_r(m).eigenvalues().ok()?;
    Some(ev.iter().map(|z| C64::new(z.re, z.im)).collect())
}

/// Eigenvalues and right eigenvectors (columns) of a general complex matrix.
pub fn eigen_complex(m: &CMatrix) -> Option<(Vec<C64>, CMatrix)> {
    let e = to_faer_c(m).eigen().ok()?;
    let vals = e.S().column_vector().iter().map(|z| C64::new(z.re, z.im)).collect();
    Some((vals, from_faer_c(e.U())))
}

/// Least-squares solution of `a x = b` through the pseudo-inverse, with
/// singular values below `rcond · s_max` discarded.
pub fn lstsq_complex(a: &CMatrix, b: &CMatrix, rcond: f64) -> Option<CMatrix> {
    let svd = svd_complex(a)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let uh_b = svd.u.adjoint() * b;
    let mut scaled = uh_b;
    for (k, &s) in svd.s.iter().enumerate() {
        let inv = if s > rcond * smax && s > 0.0 { 1.0 / s } else { 0.0 };
        scaled.row_mut(k).scale_mut(inv);
    }
    Some(&svd.v * scaled)
}

/// Splits a 4x4 operator into `a ⊗ b` when it is a product operator.
pub fn factor_two_qubit(m: &CMatrix) -> Option<(CMatrix, CMatrix)> {
    // Realignment: R[(i,j),(k,l)] = M[(i k),(j l)], rank one iff M = A ⊗ B.
    let mut r = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    r[(2 * i + j, 2 * k + l)] = m[(2 * i + k, 2 * j + l)];
                }
            }
        }
    }
    let svd = svd_complex(&r)?;
    let s = &svd.s;
    if s[0] < 1e-12 || s[1..].iter().any(|&x| x > 1e-9 * s[0]) {
        return None;
    }
    let scale = s[0].sqrt();
    let a = CMatrix::from_fn(2, 2, |i, j| svd.u[(2 * i + j, 0)] * scale);
    let b = CMatrix::from_fn(2, 2, |k, l| svd.v[(2 * k + l, 0)].conj() * scale);
    Some((a, b))
}
