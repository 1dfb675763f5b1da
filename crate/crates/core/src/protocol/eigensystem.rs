//! Ideal spectrum of the target and sampling of initial states.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{prepare_pair_state, synthesize_state, Circuit, TargetKind};
use crate::error::{invalid, CsbError, Result};
use crate::qcore::eig::{eig_unitary, phase_multiplicities, DEGENERACY_TOL};
use crate::qcore::linalg::{wrap_phase, C64, ZERO};
use crate::qcore::types::{EigenPair, UnitaryMatrix};

/// Widest non-diagonal target whose eigenvectors are prepared by exact synthesis.
pub const DENSE_WIDTH_CAP: usize = 3;

/// Pair counts up to this size are enumerated; larger spaces are sampled by rejection.
const ENUMERATION_LIMIT: usize = 1 << 14;

/// Trivial and non-trivial operator-subspace dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceDims {
    pub d_ts: usize,
    pub d_ns: usize,
}

impl SubspaceDims {
    pub fn from_phases(phases: &[f64]) -> Self {
        let d = phases.len();
        let d_ts = phase_multiplicities(phases).iter().map(|m| m * m).sum();
        Self {
            d_ts,
            d_ns: d * d - d_ts,
        }
    }

    pub fn d2(&self) -> usize {
        self.d_ts + self.d_ns
    }
}

/// Eigenphases and eigenvectors of the ideal target.
#[derive(Debug, Clone)]
pub enum Eigensystem {
    /// Full eigendecomposition of a small unitary.
    Dense { n: usize, pairs: Vec<EigenPair> },
    /// Diagonal target: eigenvectors are computational basis states.
    Computational { n: usize, phases: Vec<f64> },
}

impl Eigensystem {
    pub fn of_circuit(circ: &Circuit) -> Result<Self> {
        let n = circ.width();
        if let Some(diag) = circ.diagonal_phases() {
            let phases = diag.iter().map(|z| snap(z.arg())).collect();
            return Ok(Eigensystem::Computational { n, phases });
        }
        if n > DENSE_WIDTH_CAP {
            return Err(CsbError::Capacity {
                width: n,
                cap: DENSE_WIDTH_CAP,
            });
        }
        let pairs = eig_unitary(&UnitaryMatrix::new(circ.unitary())?)?;
        Ok(Eigensystem::Dense { n, pairs })
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            Eigensystem::Dense { n, .. } | Eigensystem::Computational { n, .. } => *n,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits()
    }

    pub fn phase(&self, a: usize) -> f64 {
        match self {
            Eigensystem::Dense { pairs, .. } => pairs[a].phase,
            Eigensystem::Computational { phases, .. } => phases[a],
        }
    }

    pub fn phases(&self) -> Vec<f64> {
        match self {
            Eigensystem::Dense { pairs, .. } => pairs.iter().map(|p| p.phase).collect(),
            Eigensystem::Computational { phases, .. } => phases.clone(),
        }
    }

    pub fn vector(&self, a: usize) -> Vec<C64> {
        match self {
            Eigensystem::Dense { pairs, .. } => pairs[a].vector.clone(),
            Eigensystem::Computational { n, .. } => {
                let mut v = vec![ZERO; 1 << n];
                v[a] = C64::new(1.0, 0.0);
                v
            }
        }
    }

    pub fn subspace_dims(&self) -> SubspaceDims {
        SubspaceDims::from_phases(&self.phases())
    }

    pub fn is_degenerate(&self) -> bool {
        phase_multiplicities(&self.phases()).iter().any(|&m| m > 1)
    }

    /// Smallest wrapped distance between two distinct eigenphases.
    pub fn min_gap(&self) -> f64 {
        let mut p = self.phases();
        p.sort_by(f64::total_cmp);
        p.dedup_by(|a, b| (*a - *b).abs() < DEGENERACY_TOL);
        if p.len() < 2 {
            return 0.0;
        }
        let wrap = 2.0 * std::f64::consts::PI - (p[p.len() - 1] - p[0]);
        p.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min)
    }

    fn distinct(&self, a: usize, b: usize) -> bool {
        wrap_phase(self.phase(a) - self.phase(b)).abs() > DEGENERACY_TOL
    }
}

fn snap(x: f64) -> f64 {
    let w = wrap_phase(x);
    if w < -std::f64::consts::PI + DEGENERACY_TOL {
        std::f64::consts::PI
    } else {
        w
    }
}

/// Initial state `c_a|φ_a⟩ + c_b|φ_b⟩`, or the eigenstate `|φ_a⟩` when `a = b`.
///
/// Specs sharing a `group` are measured separately and their signals averaged.
#[derive(Debug, Clone)]
pub struct InitialStateSpec {
    pub a: usize,
    pub b: usize,
    pub c_a: C64,
    pub c_b: C64,
    pub phase_a: f64,
    pub phase_b: f64,
    pub group: usize,
    pub state: Vec<C64>,
    pub preparation: Circuit,
}

/// Serializable identity of a spec, enough to rebuild it from the eigensystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecLabel {
    pub a: usize,
    pub b: usize,
    pub group: usize,
    pub phase_a: f64,
    pub phase_b: f64,
}

impl InitialStateSpec {
    pub fn new(sys: &Eigensystem, a: usize, b: usize, group: usize) -> Result<Self> {
        let d = sys.dim();
        if a >= d || b >= d {
            return Err(invalid("pair", format!("({a}, {b}) outside dimension {d}")));
        }
        let (c_a, c_b) = if a == b {
            (C64::new(1.0, 0.0), ZERO)
        } else {
            (C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0))
        };
        let (va, vb) = (sys.vector(a), sys.vector(b));
        let state: Vec<C64> = va.iter().zip(&vb).map(|(x, y)| c_a * x + c_b * y).collect();
        let preparation = match sys {
            Eigensystem::Computational { n, .. } => prepare_pair_state(*n, a, b)?,
            Eigensystem::Dense { .. } => synthesize_state(&state)?,
        };
        Ok(Self {
            a,
            b,
            c_a,
            c_b,
            phase_a: sys.phase(a),
            phase_b: sys.phase(b),
            group,
            state,
            preparation,
        })
    }

    /// Ideal phase `λ_a − λ_b` of the eigen-operator `|φ_a⟩⟨φ_b|`, wrapped.
    pub fn gap(&self) -> f64 {
        wrap_phase(self.phase_a - self.phase_b)
    }

    pub fn label(&self) -> SpecLabel {
        SpecLabel {
            a: self.a,
            b: self.b,
            group: self.group,
            phase_a: self.phase_a,
            phase_b: self.phase_b,
        }
    }
}

fn unordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// `K` eigenstate pairs with unequal phases, sampled uniformly without
/// replacement, or all of them when there are at most `K`. Shortfalls are
/// filled with equal-phase pairs. Rotation targets get one superposition and
/// one eigenstate spec, each analyzed on its own.
pub fn sample_eigenpairs<R: Rng>(
    sys: &Eigensystem,
    k: usize,
    kind: TargetKind,
    rng: &mut R,
) -> Result<Vec<InitialStateSpec>> {
    sample_resolvable_pairs(sys, k, kind, 0.0, rng)
}

/// As [`sample_eigenpairs`], drawing only pairs whose phase gap is at least
/// `min_gap`. Unequal pairs below it fill shortfalls before equal ones.
pub fn sample_resolvable_pairs<R: Rng>(
    sys: &Eigensystem,
    k: usize,
    kind: TargetKind,
    min_gap: f64,
    rng: &mut R,
) -> Result<Vec<InitialStateSpec>> {
    if k == 0 {
        return Err(invalid("pairs", "K must be at least 1"));
    }
    let d = sys.dim();
    if !(0..d).any(|a| (a + 1..d).any(|b| sys.distinct(a, b))) {
        return Err(CsbError::DegenerateSpectrum);
    }
    if kind == TargetKind::Rz && d == 2 {
        // The eigenstate least like |0⟩ exercises the decaying population.
        let v0 = sys.vector(0)[0].norm_sqr();
        let v1 = sys.vector(1)[0].norm_sqr();
        let e = if v1 <= v0 { 1 } else { 0 };
        return Ok(vec![
            InitialStateSpec::new(sys, 0, 1, 0)?,
            InitialStateSpec::new(sys, e, e, 1)?,
        ]);
    }
    let resolvable =
        |a: usize, b: usize| sys.distinct(a, b) && wrap_phase(sys.phase(a) - sys.phase(b)).abs() >= min_gap;

    let total = d * (d - 1) / 2;
    let mut chosen: Vec<(usize, usize)> = if total <= ENUMERATION_LIMIT {
        let all = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b)));
        let (mut good, mut close, mut equal) = (Vec::new(), Vec::new(), Vec::new());
        for (a, b) in all {
            if resolvable(a, b) {
                good.push((a, b));
            } else if sys.distinct(a, b) {
                close.push((a, b));
            } else {
                equal.push((a, b));
            }
        }
        if good.len() <= k {
            close.shuffle(rng);
            equal.shuffle(rng);
            let need = k - good.len();
            good.into_iter()
                .chain(close.into_iter().chain(equal).take(need))
                .collect()
        } else {
            index::sample(rng, good.len(), k).iter().map(|i| good[i]).collect()
        }
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(k);
        let mut attempts = 0usize;
        while out.len() < k {
            attempts += 1;
            if attempts > 1000 * k + 10_000 {
                return Err(CsbError::Validation(
                    "could not sample enough unequal-phase pairs".into(),
                ));
            }
            let (a, b) = unordered(rng.random_range(0..d), rng.random_range(0..d));
            if a != b && resolvable(a, b) && seen.insert((a, b)) {
                out.push((a, b));
            }
        }
        out
    };
    chosen.sort_unstable();
    chosen
        .into_iter()
        .enumerate()
        .map(|(g, (a, b))| InitialStateSpec::new(sys, a, b, g))
        .collect()
}
