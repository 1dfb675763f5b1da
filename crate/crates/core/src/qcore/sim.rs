//! Density-matrix simulation with k-local operations.
//!
//! Gates and channels are contracted directly against the qubit indices of
//! a row-major density matrix, so no operator larger than `4^k × 4^k` is
//! ever formed. Memory is `4^n` complex numbers, which keeps `n ≤ 12`
//! practical.

use super::linalg::{embed, CMatrix, LocalLayout, C64, ZERO};
use super::ops::Operation;
use super::types::DensityMatrix;
use crate::circuits::Circuit;
use crate::error::{CsbError, Result};
use crate::noise::{NoiseModel, NoisyCircuit};

/// Operation prepared for repeated application.
#[derive(Debug, Clone)]
pub enum CompiledOp {
    /// Diagonal unitary; `phases[r]` is the phase factor of full index `r`.
    Diagonal {
        phases: Vec<C64>,
    },
    Unitary {
        layout: LocalLayout,
        matrix: Vec<C64>,
    },
    /// Row-major superoperator kept as its nonzero entries `(row, col, value)`.
    Superop {
        layout: LocalLayout,
        entries: Vec<(usize, usize, C64)>,
    },
}

fn row_major(m: &CMatrix) -> Vec<C64> {
    let (r, c) = m.shape();
    (0..r * c).map(|i| m[(i / c, i % c)]).collect()
}

fn is_diagonal(m: &CMatrix) -> bool {
    let (r, c) = m.shape();
    (0..r).all(|i| (0..c).all(|j| i == j || m[(i, j)].norm() == 0.0))
}

fn superop(layout: LocalLayout, s: &CMatrix) -> CompiledOp {
    let (r, c) = s.shape();
    let entries = (0..r)
        .flat_map(|x| (0..c).map(move |y| (x, y)))
        .filter(|&(x, y)| s[(x, y)] != ZERO)
        .map(|(x, y)| (x, y, s[(x, y)]))
        .collect();
    CompiledOp::Superop { layout, entries }
}

fn compile_one(n: usize, op: &Operation) -> CompiledOp {
    let d = 1usize << n;
    match op {
        Operation::Unitary { qubits, matrix } if is_diagonal(matrix) => {
            let k = qubits.len();
            let phases = (0..d)
                .map(|r| {
                    let local = qubits
                        .iter()
                        .enumerate()
                        .fold(0usize, |acc, (i, &q)| acc | (((r >> (n - 1 - q)) & 1) << (k - 1 - i)));
                    matrix[(local, local)]
                })
                .collect();
            CompiledOp::Diagonal { phases }
        }
        Operation::Unitary { qubits, matrix } => CompiledOp::Unitary {
            layout: LocalLayout::new(n, qubits),
            matrix: row_major(matrix),
        },
        Operation::Channel { qubits, kraus } => superop(LocalLayout::new(n, qubits), &kraus.superoperator()),
    }
}

/// Prepares operations for application. Runs acting on at most two qubits
/// are merged, then runs of diagonal unitaries are fused.
pub fn compile(n: usize, ops: &[Operation]) -> Vec<CompiledOp> {
    let compiled = local_runs(ops)
        .into_iter()
        .map(|(support, run)| compile_run(n, &support, &run));
    let mut fused: Vec<CompiledOp> = Vec::with_capacity(ops.len());
    for op in compiled {
        match (fused.last_mut(), op) {
            (Some(CompiledOp::Diagonal { phases: acc }), CompiledOp::Diagonal { phases }) => {
                for (a, p) in acc.iter_mut().zip(phases) {
                    *a *= p;
                }
            }
            (_, op) => fused.push(op),
        }
    }
    fused
}

/// Widest qubit set that consecutive operations are merged over.
const FUSE_WIDTH: usize = 2;

/// Splits `ops` into maximal consecutive runs whose combined support spans
/// at most [`FUSE_WIDTH`] qubits.
fn local_runs(ops: &[Operation]) -> Vec<(Vec<usize>, Vec<&Operation>)> {
    let mut out = Vec::new();
    let mut run: Vec<&Operation> = Vec::new();
    let mut support: Vec<usize> = Vec::new();
    for op in ops {
        let mut union = support.clone();
        for &q in op.qubits() {
            if !union.contains(&q) {
                union.push(q);
            }
        }
        if union.len() <= FUSE_WIDTH || run.is_empty() {
            run.push(op);
            support = union;
        } else {
            out.push((std::mem::take(&mut support), std::mem::take(&mut run)));
            run.push(op);
            support = op.qubits().to_vec();
        }
    }
    if !run.is_empty() {
        out.push((support, run));
    }
    out
}

fn compile_run(n: usize, support: &[usize], run: &[&Operation]) -> CompiledOp {
    if let [op] = run {
        return compile_one(n, op);
    }
    let k = support.len();
    let local = |q: &[usize]| -> Vec<usize> {
        q.iter()
            .map(|x| support.iter().position(|s| s == x).expect("qubit inside run support"))
            .collect()
    };
    if run.iter().all(|op| matches!(op, Operation::Unitary { .. })) {
        let mut u = CMatrix::identity(1 << k, 1 << k);
        for op in run {
            if let Operation::Unitary { qubits, matrix } = op {
                u = embed(matrix, &local(qubits), k) * u;
            }
        }
        return compile_one(
            n,
            &Operation::Unitary {
                qubits: support.to_vec(),
                matrix: u,
            },
        );
    }
    let mut s = CMatrix::identity(1 << (2 * k), 1 << (2 * k));
    for op in run {
        let step = match op {
            Operation::Unitary { qubits, matrix } => superop_of(&[embed(matrix, &local(qubits), k)]),
            Operation::Channel { qubits, kraus } => {
                let lifted: Vec<CMatrix> = kraus.operators().iter().map(|m| embed(m, &local(qubits), k)).collect();
                superop_of(&lifted)
            }
        };
        s = step * s;
    }
    superop(LocalLayout::new(n, support), &s)
}

/// `S[(i,j),(a,b)] = Σ_m K_m[i,a] conj(K_m[j,b])`.
fn superop_of(kraus: &[CMatrix]) -> CMatrix {
    let d = kraus[0].nrows();
    let mut s = CMatrix::zeros(d * d, d * d);
    for k in kraus {
        for i in 0..d {
            for j in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        s[(i * d + j, a * d + b)] += k[(i, a)] * k[(j, b)].conj();
                    }
                }
            }
        }
    }
    s
}

/// Mutable simulation state, row-major `d × d`.
#[derive(Debug, Clone)]
pub struct DensityState {
    n: usize,
    d: usize,
    data: Vec<C64>,
}

impl DensityState {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        Self {
            n: d.trailing_zeros() as usize,
            d,
            data: row_major(rho.matrix()),
        }
    }

    pub fn from_pure(psi: &[C64]) -> Self {
        let d = psi.len();
        let mut data = vec![ZERO; d * d];
        for (i, a) in psi.iter().enumerate() {
            for (j, b) in psi.iter().enumerate() {
                data[i * d + j] = a * b.conj();
            }
        }
        Self {
            n: d.trailing_zeros() as usize,
            d,
            data,
        }
    }

    pub fn zero_state(n: usize) -> Self {
        let d = 1usize << n;
        let mut data = vec![ZERO; d * d];
        data[0] = C64::new(1.0, 0.0);
        Self { n, d, data }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.d, self.d, |i, j| self.data[i * self.d + j])
    }

    pub fn trace(&self) -> C64 {
        (0..self.d).map(|i| self.data[i * self.d + i]).sum()
    }

    pub fn apply_all(&mut self, ops: &[CompiledOp]) {
        for op in ops {
            self.apply(op);
        }
    }

    pub fn apply(&mut self, op: &CompiledOp) {
        match op {
            CompiledOp::Diagonal { phases } => self.apply_diagonal(phases),
            CompiledOp::Unitary { layout, matrix } => self.apply_unitary(layout, matrix),
            CompiledOp::Superop { layout, entries } => self.apply_superop(layout, entries),
        }
    }

    fn apply_diagonal(&mut self, phases: &[C64]) {
        let d = self.d;
        for (r, row) in self.data.chunks_mut(d).enumerate() {
            let pr = phases[r];
            for (v, pc) in row.iter_mut().zip(phases) {
                *v *= pr * pc.conj();
            }
        }
    }

    fn apply_unitary(&mut self, layout: &LocalLayout, u: &[C64]) {
        match layout.offsets.len() {
            2 => self.unitary_fixed::<2>(layout, u),
            4 => self.unitary_fixed::<4>(layout, u),
            _ => self.unitary_general(layout, u),
        }
    }

    fn unitary_fixed<const K: usize>(&mut self, layout: &LocalLayout, u: &[C64]) {
        let d = self.d;
        let off: [usize; K] = std::array::from_fn(|l| layout.offsets[l]);
        let u: [[C64; K]; K] = std::array::from_fn(|l| std::array::from_fn(|m| u[l * K + m]));
        let bases: Vec<usize> = layout.bases(d).collect();
        // ρ <- U ρ
        for &base in &bases {
            for col in 0..d {
                let v: [C64; K] = std::array::from_fn(|l| self.data[(base + off[l]) * d + col]);
                for l in 0..K {
                    let mut acc = ZERO;
                    for m in 0..K {
                        acc += u[l][m] * v[m];
                    }
                    self.data[(base + off[l]) * d + col] = acc;
                }
            }
        }
        // ρ <- ρ U†
        for row in self.data.chunks_mut(d) {
            for &base in &bases {
                let v: [C64; K] = std::array::from_fn(|l| row[base + off[l]]);
                for l in 0..K {
                    let mut acc = ZERO;
                    for m in 0..K {
                        acc += v[m] * u[l][m].conj();
                    }
                    row[base + off[l]] = acc;
                }
            }
        }
    }

    fn unitary_general(&mut self, layout: &LocalLayout, u: &[C64]) {
        let d = self.d;
        let k = layout.offsets.len();
        let off = &layout.offsets;
        let mut v = vec![ZERO; k];
        let mut w = vec![ZERO; k];
        for base in layout.bases(d) {
            for col in 0..d {
                for l in 0..k {
                    v[l] = self.data[(base + off[l]) * d + col];
                }
                for l in 0..k {
                    w[l] = (0..k).map(|m| u[l * k + m] * v[m]).sum();
                }
                for l in 0..k {
                    self.data[(base + off[l]) * d + col] = w[l];
                }
            }
        }
        let bases: Vec<usize> = layout.bases(d).collect();
        for row in self.data.chunks_mut(d) {
            for &base in &bases {
                for l in 0..k {
                    v[l] = row[base + off[l]];
                }
                for l in 0..k {
                    w[l] = (0..k).map(|m| v[m] * u[l * k + m].conj()).sum();
                }
                for l in 0..k {
                    row[base + off[l]] = w[l];
                }
            }
        }
    }

    fn apply_superop(&mut self, layout: &LocalLayout, entries: &[(usize, usize, C64)]) {
        match layout.offsets.len() {
            2 => self.superop_fixed::<2, 4>(layout, entries),
            4 => self.superop_fixed::<4, 16>(layout, entries),
            8 => self.superop_fixed::<8, 64>(layout, entries),
            k => panic!("superoperators on {k}-dimensional blocks are not supported"),
        }
    }

    fn superop_fixed<const K: usize, const KK: usize>(
        &mut self,
        layout: &LocalLayout,
        entries: &[(usize, usize, C64)],
    ) {
        let d = self.d;
        let off: [usize; K] = std::array::from_fn(|l| layout.offsets[l]);
        // Flat block positions of each vectorised index, relative to the block corner.
        let pos: [usize; KK] = std::array::from_fn(|y| off[y / K] * d + off[y % K]);
        let bases: Vec<usize> = layout.bases(d).collect();
        for &rb in &bases {
            for &cb in &bases {
                let corner = rb * d + cb;
                let b: [C64; KK] = std::array::from_fn(|y| self.data[corner + pos[y]]);
                let mut out = [ZERO; KK];
                for &(x, y, v) in entries {
                    out[x] += v * b[y];
                }
                for x in 0..KK {
                    self.data[corner + pos[x]] = out[x];
                }
            }
        }
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalised state vector.
    pub fn overlap(&self, psi: &[C64]) -> f64 {
        let d = self.d;
        let support: Vec<usize> = (0..psi.len()).filter(|&i| psi[i] != ZERO).collect();
        let mut acc = ZERO;
        for &i in &support {
            let row = &self.data[i * d..(i + 1) * d];
            let inner: C64 = support.iter().map(|&j| row[j] * psi[j]).sum();
            acc += psi[i].conj() * inner;
        }
        acc.re
    }

    /// `tr(O ρ)`.
    pub fn expectation(&self, o: &CMatrix) -> f64 {
        let d = self.d;
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += o[(i, j)] * self.data[j * d + i];
            }
        }
        acc.re
    }
}

/// Probability `tr(O · Λ(ρ))` after running `circ` (optionally noisy) on `rho`.
pub fn evolve_and_measure(
    rho: &DensityMatrix,
    circ: &Circuit,
    noise: Option<&NoiseModel>,
    observable: &DensityMatrix,
) -> Result<f64> {
    let d = 1usize << circ.width();
    for found in [rho.dim(), observable.dim()] {
        if found != d {
            return Err(CsbError::DimensionMismatch { expected: d, found });
        }
    }
    let ops = match noise {
        Some(model) => NoisyCircuit::new(circ.clone(), model.clone()).operations(),
        None => circ.operations(),
    };
    let mut state = DensityState::from_density(rho);
    state.apply_all(&compile(circ.width(), &ops));
    let p = state.expectation(observable.matrix());
    debug_assert!((-1e-9..=1.0 + 1e-9).contains(&p), "probability {p} out of range");
    Ok(p.clamp(0.0, 1.0))
}
