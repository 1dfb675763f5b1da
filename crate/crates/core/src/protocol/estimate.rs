//! Mode matching, diagonal entries of the pure-noise channel and estimators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::eigensystem::{Eigensystem, SubspaceDims};
use crate::circuits::TargetSpec;
use crate::error::{invalid, CsbError, Result};
use crate::pencil::ModeSet;
use crate::qcore::eig::DEGENERACY_TOL;
use crate::qcore::linalg::{wrap_phase, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subspace {
    Trivial,
    NonTrivial,
}

const FIXED_POINT_FLOOR: f64 = 1e-7;
const FIXED_POINT_CAP: f64 = 1e-2;

/// A noisy eigenvalue paired with its ideal counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedEigenvalue {
    pub z: C64,
    /// Amplitude of the mode in its signal.
    pub coefficient: C64,
    /// Ideal phase `λ_a − λ_b`, zero for trivial matches.
    pub ideal_phase: f64,
    /// `arg z − ideal_phase`, wrapped.
    pub phase_error: f64,
    pub subspace: Subspace,
    /// Eigen-operator `|φ_a⟩⟨φ_b|` of a non-trivial match.
    pub operator: Option<(usize, usize)>,
    /// `|δλ|` reached half the ideal gap.
    pub ambiguous: bool,
    /// Trivial mode attributed to the channel's fixed point and left out of averages.
    pub fixed_point: bool,
    /// Diagonal entry `E_{ab,ab}` of the pure-noise channel.
    pub entry: Option<C64>,
}

impl MatchedEigenvalue {
    fn new(z: C64, ideal: f64, subspace: Subspace, operator: Option<(usize, usize)>) -> Self {
        Self {
            z,
            coefficient: C64::new(0.0, 0.0),
            ideal_phase: ideal,
            phase_error: wrap_phase(z.arg() - ideal),
            subspace,
            operator,
            ambiguous: false,
            fixed_point: false,
            entry: None,
        }
    }

    /// `|z|`, clipped to the unit disc.
    pub fn amplitude(&self) -> f64 {
        self.z.norm().min(1.0)
    }
}

fn distance(z: C64, phase: f64) -> f64 {
    wrap_phase(z.arg() - phase).abs()
}

fn nearest(modes: &[C64], used: &[bool], phase: f64) -> Option<usize> {
    (0..modes.len())
        .filter(|&i| !used[i])
        .min_by(|&i, &j| distance(modes[i], phase).total_cmp(&distance(modes[j], phase)))
}

/// Assigns each mode to `e^{iΔ}`, `e^{−iΔ}` or 1, with `Δ = λ_a − λ_b`.
pub fn match_modes(m: &ModeSet, gap: f64, pair: (usize, usize)) -> Result<Vec<MatchedEigenvalue>> {
    let mut out = match_phases(m, gap, pair)?;
    for me in &mut out {
        if let Some(md) = m.modes.iter().find(|md| md.z == me.z) {
            me.coefficient = md.c;
        }
    }
    Ok(out)
}

fn match_phases(m: &ModeSet, gap: f64, pair: (usize, usize)) -> Result<Vec<MatchedEigenvalue>> {
    if m.modes.is_empty() {
        return Err(CsbError::EmptyModes(
            m.diagnostic.clone().unwrap_or_else(|| "no modes to match".into()),
        ));
    }
    let zs: Vec<C64> = m.modes.iter().map(|md| md.z).collect();
    let gap = wrap_phase(gap);
    if gap.abs() < DEGENERACY_TOL {
        return Ok(zs
            .iter()
            .map(|&z| MatchedEigenvalue::new(z, 0.0, Subspace::Trivial, None))
            .collect());
    }
    let (a, b) = pair;
    let mut used = vec![false; zs.len()];
    let mut out = Vec::with_capacity(zs.len() + 1);
    let flagged = |mut me: MatchedEigenvalue| {
        me.ambiguous = me.phase_error.abs() >= gap.abs() / 2.0;
        me
    };

    let plus = nearest(&zs, &used, gap).expect("at least one mode");
    used[plus] = true;
    out.push(flagged(MatchedEigenvalue::new(
        zs[plus],
        gap,
        Subspace::NonTrivial,
        Some((a, b)),
    )));

    // At Δ = π both orientations share one ideal eigenvalue; a single real
    // mode then stands for both.
    let at_pi = (gap.abs() - std::f64::consts::PI).abs() < DEGENERACY_TOL;
    let minus_z = match nearest(&zs, &used, -gap) {
        Some(i) if !at_pi || distance(zs[i], -gap) < std::f64::consts::FRAC_PI_2 => {
            used[i] = true;
            zs[i]
        }
        _ => zs[plus].conj(),
    };
    out.push(flagged(MatchedEigenvalue::new(
        minus_z,
        -gap,
        Subspace::NonTrivial,
        Some((b, a)),
    )));

    for (i, &z) in zs.iter().enumerate() {
        if !used[i] {
            out.push(MatchedEigenvalue::new(z, 0.0, Subspace::Trivial, None));
        }
    }
    Ok(out)
}

/// Largest distance from 1 at which a trivial mode of amplitude `c` in a
/// signal of `len` points measured with `shots` shots is taken as the
/// fixed point. Zero shots means exact probabilities.
pub fn fixed_point_tolerance(c: C64, shots: u64, len: usize) -> f64 {
    if shots == 0 {
        return FIXED_POINT_FLOOR;
    }
    let n = len as f64;
    let sum_sq = (n - 1.0) * n * (2.0 * n - 1.0) / 6.0;
    let sigma = 0.5 / (shots as f64).sqrt();
    (4.0 * sigma / (c.norm() * sum_sq.sqrt())).clamp(FIXED_POINT_FLOOR, FIXED_POINT_CAP)
}

/// Marks trivial modes indistinguishable from `z = 1` as the fixed point.
pub fn mark_fixed_point(matches: &mut [MatchedEigenvalue], shots: u64, len: usize) {
    for m in matches.iter_mut().filter(|m| m.subspace == Subspace::Trivial) {
        m.fixed_point = (m.z - 1.0).norm() <= fixed_point_tolerance(m.coefficient, shots, len);
    }
}

/// Fills `E_{ab,ab} = g e^{iδλ}` for every match.
pub fn compute_diagonal_entries(matches: &mut [MatchedEigenvalue]) {
    for m in matches {
        m.entry = Some(C64::from_polar(m.amplitude(), m.phase_error));
    }
}

/// Process and stochastic fidelity estimates with the imaginary residue of
/// the averaged non-trivial entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub process_fidelity: f64,
    pub stochastic_fidelity: f64,
    pub imaginary_residue: f64,
    pub trivial_samples: usize,
    pub nontrivial_samples: usize,
}

/// Subspace-weighted averages of the diagonal entries. The trivial subspace
/// holds the exact eigenvalue 1 once; its other `d_ts − 1` entries are
/// represented by the mean of the sampled trivial modes.
pub fn estimate_fidelities(matches: &[MatchedEigenvalue], dims: SubspaceDims) -> Result<FidelityEstimate> {
    let entry = |m: &MatchedEigenvalue| m.entry.unwrap_or_else(|| C64::from_polar(m.amplitude(), m.phase_error));
    let (mut triv_re, mut triv_g2) = (Vec::new(), Vec::new());
    let (mut non_re, mut non_im, mut non_g2) = (Vec::new(), Vec::new(), Vec::new());
    for m in matches.iter().filter(|m| !m.fixed_point) {
        let e = entry(m);
        match m.subspace {
            Subspace::Trivial => {
                triv_re.push(e.re);
                triv_g2.push(m.amplitude().powi(2));
            }
            Subspace::NonTrivial => {
                non_re.push(e.re);
                non_im.push(e.im);
                non_g2.push(m.amplitude().powi(2));
            }
        }
    }
    if dims.d_ns > 0 && non_re.is_empty() {
        return Err(CsbError::EmptySubspace("non-trivial"));
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let d2 = dims.d2() as f64;
    let (ts, ns) = (dims.d_ts as f64, dims.d_ns as f64);
    // Without samples the remaining trivial entries are taken as 1.
    let rest = |v: &[f64]| if v.is_empty() { 1.0 } else { mean(v) };
    let triv_sum = |v: &[f64]| if ts > 0.0 { 1.0 + (ts - 1.0) * rest(v) } else { 0.0 };
    let f = (triv_sum(&triv_re) + ns * mean(&non_re)) / d2;
    let f2 = (triv_sum(&triv_g2) + ns * mean(&non_g2)) / d2;
    Ok(FidelityEstimate {
        process_fidelity: f.clamp(0.0, 1.0),
        stochastic_fidelity: f2.max(0.0).sqrt().min(1.0),
        imaginary_residue: mean(&non_im).abs(),
        trivial_samples: triv_re.len() + 1,
        nontrivial_samples: non_re.len(),
    })
}

fn find_vector(sys: &Eigensystem, reference: &[C64]) -> Option<usize> {
    (0..sys.dim()).find(|&a| {
        let v = sys.vector(a);
        v.iter()
            .zip(reference)
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
            .norm_sqr()
            > 0.99
    })
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Angles of the implemented unitary recovered from non-trivial phases.
///
/// Rotations report `theta` and `delta_theta`; Fsim targets additionally
/// `phi` and `delta_phi`. Other targets have no parametrisation and give an
/// empty map. `n_rep` undoes target repetition.
pub fn estimate_unitary_params(
    matches: &[MatchedEigenvalue],
    target: &TargetSpec,
    sys: &Eigensystem,
    n_rep: usize,
) -> Result<BTreeMap<String, f64>> {
    if n_rep == 0 {
        return Err(invalid("n_rep", "must be at least 1"));
    }
    let scale = 1.0 / n_rep as f64;
    let nontrivial = || {
        matches
            .iter()
            .filter(|m| m.subspace == Subspace::NonTrivial)
            .filter_map(|m| m.operator.map(|op| (op, m.phase_error)))
    };
    let mut out = BTreeMap::new();
    match target {
        TargetSpec::Rz { theta } => {
            // |1⟩⟨0| carries phase θ + δθ; |0⟩⟨1| the opposite.
            let (one, zero) = match (find_vector(sys, &basis(2, 1)), find_vector(sys, &basis(2, 0))) {
                (Some(o), Some(z)) => (o, z),
                _ => return Err(CsbError::MissingPair("rotation eigenstates")),
            };
            let samples: Vec<f64> = nontrivial()
                .filter_map(|(op, dl)| match op {
                    o if o == (one, zero) => Some(dl),
                    o if o == (zero, one) => Some(-dl),
                    _ => None,
                })
                .collect();
            let dt = mean_of(&samples).ok_or(CsbError::MissingPair("|0⟩,|1⟩"))? * scale;
            out.insert("theta".into(), theta + dt);
            out.insert("delta_theta".into(), dt);
        }
        TargetSpec::Fsim { theta, phi } => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut plus = basis(4, 1);
            plus[1] = C64::new(s, 0.0);
            plus[2] = C64::new(s, 0.0);
            let mut minus = plus.clone();
            minus[2] = C64::new(-s, 0.0);
            let idx = |v: &[C64], name| find_vector(sys, v).ok_or(CsbError::MissingPair(name));
            let (sp, sm) = (idx(&plus, "s+")?, idx(&minus, "s-")?);
            let (e00, e11) = (idx(&basis(4, 0), "|00⟩")?, idx(&basis(4, 3), "|11⟩")?);
            // |s+⟩⟨s−| carries −2θ and |00⟩⟨11| carries −φ.
            let th: Vec<f64> = nontrivial()
                .filter_map(|(op, dl)| match op {
                    o if o == (sp, sm) => Some(-dl / 2.0),
                    o if o == (sm, sp) => Some(dl / 2.0),
                    _ => None,
                })
                .collect();
            let ph: Vec<f64> = nontrivial()
                .filter_map(|(op, dl)| match op {
                    o if o == (e00, e11) => Some(-dl),
                    o if o == (e11, e00) => Some(dl),
                    _ => None,
                })
                .collect();
            let dt = mean_of(&th).ok_or(CsbError::MissingPair("(s+, s-)"))? * scale;
            let dp = mean_of(&ph).ok_or(CsbError::MissingPair("(|00⟩, |11⟩)"))? * scale;
            out.insert("theta".into(), theta + dt);
            out.insert("delta_theta".into(), dt);
            out.insert("phi".into(), phi + dp);
            out.insert("delta_phi".into(), dp);
        }
        TargetSpec::Toffoli | TargetSpec::Ising(_) => {}
    }
    Ok(out)
}

fn basis(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Number of sampled entries `K = ⌈ln(2/δ) / (2ε²)⌉` for precision `ε` at confidence `1 − δ`.
pub fn hoeffding_sample_size(epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid("epsilon", format!("{epsilon} not in (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1)")));
    }
    let k = (2.0 / delta).ln() / (2.0 * epsilon * epsilon);
    // Values within rounding of an integer are not pushed to the next one.
    let r = k.round();
    let k = if (k - r).abs() < 1e-9 * r.max(1.0) { r } else { k.ceil() };
    Ok((k as usize).max(1))
}
