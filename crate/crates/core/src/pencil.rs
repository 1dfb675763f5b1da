//! Matrix pencil extraction of damped oscillating modes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CsbError, Result};
use crate::qcore::linalg::{eigen_complex, lstsq_complex, svd_real, CMatrix, C64};

/// Modes with `|z|` above `1 + UNIT_TOL` are rejected as unphysical.
pub const UNIT_TOL: f64 = 0.05;
pub const DEFAULT_SV_THRESHOLD: f64 = 0.05;
pub const DEFAULT_MAX_MODES: usize = 4;
pub const MAX_MODES_CAP: usize = 6;
pub const MIN_SIGNAL_LEN: usize = 8;

/// Measured probabilities for `L = 0, 1, …, L_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    values: Vec<f64>,
    shots: u64,
    variance: Option<Vec<f64>>,
}

impl Signal {
    pub fn new(values: Vec<f64>, shots: u64) -> Result<Self> {
        if values.len() < MIN_SIGNAL_LEN {
            return Err(invalid(
                "signal",
                format!("length {} below {MIN_SIGNAL_LEN}", values.len()),
            ));
        }
        if let Some(l) = values.iter().position(|v| !v.is_finite()) {
            return Err(CsbError::NonFinite(l));
        }
        if let Some(v) = values.iter().find(|v| !(-1e-9..=1.0 + 1e-9).contains(*v)) {
            return Err(invalid("signal", format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            values,
            shots,
            variance: None,
        })
    }

    pub fn with_variance(mut self, variance: Vec<f64>) -> Result<Self> {
        if variance.len() != self.values.len() {
            return Err(CsbError::DimensionMismatch {
                expected: self.values.len(),
                found: variance.len(),
            });
        }
        self.variance = Some(variance);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn variance(&self) -> Option<&[f64]> {
        self.variance.as_deref()
    }

    pub fn l_max(&self) -> usize {
        self.values.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub z: C64,
    pub c: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    /// Sorted by `|c|` descending.
    pub modes: Vec<Mode>,
    /// RMS reconstruction error.
    pub residual: f64,
    pub singular_values: Vec<f64>,
    pub retained: usize,
    /// True when more singular values passed the threshold than the cap allowed.
    pub saturated: bool,
    /// Pencil eigenvalues outside the unit disc tolerance.
    pub rejected: Vec<C64>,
    pub diagnostic: Option<String>,
}

impl ModeSet {
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

fn model_value(modes: &[Mode], l: usize) -> C64 {
    modes.iter().map(|m| m.c * m.z.powu(l as u32)).sum()
}

fn rms_residual(values: &[f64], modes: &[Mode]) -> f64 {
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(l, &s)| (C64::new(s, 0.0) - model_value(modes, l)).norm_sqr())
        .sum();
    (sum / values.len() as f64).sqrt()
}

/// RMS of `s_L − Σ c_k z_k^L`.
pub fn reconstruct_residual(s: &Signal, m: &ModeSet) -> f64 {
    rms_residual(s.values(), &m.modes)
}

fn fit_coefficients(values: &[f64], z: &[C64]) -> Vec<C64> {
    let n = values.len();
    let vander = CMatrix::from_fn(n, z.len(), |l, k| z[k].powu(l as u32));
    let rhs = CMatrix::from_fn(n, 1, |l, _| C64::new(values[l], 0.0));
    match lstsq_complex(&vander, &rhs, 1e-14) {
        Some(c) => c.iter().cloned().collect(),
        None => vec![C64::new(0.0, 0.0); z.len()],
    }
}

/// Matrix pencil on a raw real series, without range checks on the values.
pub fn matrix_pencil(values: &[f64], max_modes: usize, sv_threshold: f64) -> Result<ModeSet> {
    if max_modes == 0 || max_modes > MAX_MODES_CAP {
        return Err(invalid("max_modes", format!("{max_modes} not in 1..={MAX_MODES_CAP}")));
    }
    if !(sv_threshold > 0.0 && sv_threshold < 1.0) {
        return Err(invalid("sv_threshold", format!("{sv_threshold} not in (0, 1)")));
    }
    if let Some(l) = values.iter().position(|v| !v.is_finite()) {
        return Err(CsbError::NonFinite(l));
    }
    let n = values.len();
    if n < MIN_SIGNAL_LEN {
        return Err(invalid("signal", format!("length {n} below {MIN_SIGNAL_LEN}")));
    }
    let p = n / 2;
    let hankel = DMatrix::from_fn(n - p, p + 1, |i, j| values[i + j]);
    let svd = svd_real(&hankel).ok_or_else(|| CsbError::Validation("Hankel SVD did not converge".into()))?;
    let sv = svd.s;

    let empty = |diag: String| ModeSet {
        modes: vec![],
        residual: rms_residual(values, &[]),
        singular_values: sv.clone(),
        retained: 0,
        saturated: false,
        rejected: vec![],
        diagnostic: Some(diag),
    };
    let sigma0 = sv.first().copied().unwrap_or(0.0);
    if !(sigma0 > 0.0) {
        return Ok(empty("signal is identically zero".into()));
    }
    let above = sv.iter().filter(|&&s| s > sv_threshold * sigma0).count();
    let m = above.min(max_modes).min(p);
    if m == 0 {
        return Ok(empty("no singular value above threshold".into()));
    }

    // Columns of W span the vectors (z_k^j)_j, j = 0..=P.
    let w = svd.v.columns(0, m).map(|x| C64::new(x, 0.0));
    let top = w.rows(0, p).into_owned();
    let bot = w.rows(1, p).into_owned();
    let pencil =
        lstsq_complex(&top, &bot, 1e-14).ok_or_else(|| CsbError::Validation("pencil least squares failed".into()))?;
    let (eig, _) =
        eigen_complex(&pencil).ok_or_else(|| CsbError::Validation("pencil eigenvalues did not converge".into()))?;

    let (kept, rejected): (Vec<C64>, Vec<C64>) = eig.into_iter().partition(|z| z.norm() <= 1.0 + UNIT_TOL);
    let coeffs = fit_coefficients(values, &kept);
    let mut modes: Vec<Mode> = kept.iter().zip(coeffs).map(|(&z, c)| Mode { z, c }).collect();
    modes.sort_by(|a, b| {
        b.c.norm()
            .total_cmp(&a.c.norm())
            .then(b.z.norm().total_cmp(&a.z.norm()))
            .then(a.z.im.total_cmp(&b.z.im))
    });
    let residual = rms_residual(values, &modes);
    Ok(ModeSet {
        modes,
        residual,
        singular_values: sv,
        retained: m,
        saturated: above > m,
        diagnostic: (!rejected.is_empty()).then(|| format!("{} mode(s) outside the unit disc", rejected.len())),
        rejected,
    })
}

/// Damped modes of a measured signal.
pub fn estimate_modes(s: &Signal, max_modes: usize, sv_threshold: f64) -> Result<ModeSet> {
    matrix_pencil(s.values(), max_modes, sv_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Binomial, Distribution};
    use std::f64::consts::FRAC_PI_4;

    fn synth(modes: &[Mode], l_max: usize) -> Vec<f64> {
        (0..=l_max).map(|l| model_value(modes, l).re).collect()
    }

    fn reference_modes() -> Vec<Mode> {
        let z = C64::from_polar(0.98, FRAC_PI_4);
        vec![
            Mode {
                z: C64::new(1.0, 0.0),
                c: C64::new(0.5, 0.0),
            },
            Mode {
                z,
                c: C64::new(0.25, 0.0),
            },
            Mode {
                z: z.conj(),
                c: C64::new(0.25, 0.0),
            },
        ]
    }

    fn closest(found: &[Mode], z: C64) -> f64 {
        found.iter().map(|m| (m.z - z).norm()).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn constant_signal() {
        let s = Signal::new(vec![1.0; 20], 1).unwrap();
        let m = estimate_modes(&s, 4, 0.05).unwrap();
        assert_eq!(m.modes.len(), 1);
        assert!((m.modes[0].z - C64::new(1.0, 0.0)).norm() < 1e-10, "{m:?}");
        assert!((m.modes[0].c - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(m.residual < 1e-10);
    }

    #[test]
    fn three_mode_recovery() {
        let truth = reference_modes();
        let s = Signal::new(synth(&truth, 50), 1).unwrap();
        let m = estimate_modes(&s, 4, 0.05).unwrap();
        assert_eq!(m.modes.len(), 3);
        for t in &truth {
            assert!(closest(&m.modes, t.z) < 1e-8);
        }
        assert!(reconstruct_residual(&s, &m) < 1e-10);
    }

    #[test]
    fn residual_of_empty_set_is_rms_value() {
        let s = Signal::new(vec![0.3; 12], 1).unwrap();
        let empty = ModeSet {
            modes: vec![],
            residual: 0.0,
            singular_values: vec![],
            retained: 0,
            saturated: false,
            rejected: vec![],
            diagnostic: None,
        };
        assert!((reconstruct_residual(&s, &empty) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_gives_empty_set() {
        let m = matrix_pencil(&[0.0; 16], 4, 0.05).unwrap();
        assert!(m.is_empty());
        assert!(m.diagnostic.is_some());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Signal::new(vec![0.5; 4], 1).is_err());
        assert!(matches!(
            Signal::new(vec![0.5, f64::NAN, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5], 1),
            Err(CsbError::NonFinite(1))
        ));
        assert!(Signal::new(vec![1.5; 10], 1).is_err());
        assert!(matrix_pencil(&[0.5; 10], 7, 0.05).is_err());
        assert!(matrix_pencil(&[0.5; 10], 4, 1.0).is_err());
    }

    fn shot_noise_signal(exact: &[f64], shots: u64, rng: &mut rand_chacha::ChaCha8Rng) -> Signal {
        let values = exact
            .iter()
            .map(|&p| Binomial::new(shots, p.clamp(0.0, 1.0)).unwrap().sample(rng) as f64 / shots as f64)
            .collect();
        Signal::new(values, shots).unwrap()
    }

    #[test]
    fn shot_noise_monte_carlo_magnitude() {
        let truth = reference_modes();
        let exact = synth(&truth, 50);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut mags = Vec::new();
        for _ in 0..100 {
            let s = shot_noise_signal(&exact, 10_000, &mut rng);
            let m = estimate_modes(&s, 4, 0.05).unwrap();
            let best = m
                .modes
                .iter()
                .filter(|md| md.z.im > 0.0)
                .min_by(|a, b| (a.z - truth[1].z).norm().total_cmp(&(b.z - truth[1].z).norm()))
                .expect("oscillating mode found");
            mags.push(best.z.norm());
        }
        let mean = mags.iter().sum::<f64>() / mags.len() as f64;
        let sd = (mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (mags.len() - 1) as f64).sqrt();
        let se = sd / (mags.len() as f64).sqrt();
        assert!((mean - 0.98).abs() < 3.0 * se + 1e-4, "mean {mean} se {se}");
        // Individual estimates are also tight around the truth.
        assert!(mags.iter().all(|m| (m - 0.98).abs() < 10.0 * sd.max(1e-4)));
    }

    #[test]
    fn shot_noise_residual_scale() {
        let exact = vec![0.5; 51];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s = shot_noise_signal(&exact, 10_000, &mut rng);
        let m = estimate_modes(&s, 4, 0.05).unwrap();
        let scale = (0.25f64 / 10_000.0).sqrt();
        assert!(m.residual < 2.0 * scale && m.residual > 0.3 * scale, "{}", m.residual);
    }

    #[test]
    fn phase_precision_improves_with_length() {
        let truth = reference_modes();
        let mut spreads = Vec::new();
        for l_max in [25usize, 50, 100] {
            let exact = synth(&truth, l_max);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
            let phases: Vec<f64> = (0..200)
                .map(|_| {
                    let s = shot_noise_signal(&exact, 10_000, &mut rng);
                    let m = estimate_modes(&s, 4, 0.05).unwrap();
                    m.modes
                        .iter()
                        .filter(|md| md.z.im > 0.0)
                        .map(|md| md.z.arg())
                        .min_by(|a, b| (a - FRAC_PI_4).abs().total_cmp(&(b - FRAC_PI_4).abs()))
                        .unwrap()
                })
                .collect();
            let mean = phases.iter().sum::<f64>() / phases.len() as f64;
            let sd = (phases.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (phases.len() - 1) as f64).sqrt();
            spreads.push(sd);
        }
        assert!(spreads[0] > spreads[1] && spreads[1] > spreads[2], "{spreads:?}");
    }

    /// Real-valued mode sets: real modes and conjugate pairs, well separated.
    fn mode_strategy() -> impl Strategy<Value = Vec<Mode>> {
        let real = (0.6f64..1.0, 0.02f64..1.0, any::<bool>()).prop_map(|(r, c, neg)| {
            vec![Mode {
                z: C64::new(r, 0.0),
                c: C64::new(if neg { -c } else { c }, 0.0),
            }]
        });
        let pair = (0.6f64..1.0, 0.1f64..3.0, 0.02f64..1.0, -3.1f64..3.1).prop_map(|(r, ph, c, cph)| {
            let z = C64::from_polar(r, ph);
            let c = C64::from_polar(c, cph);
            vec![
                Mode { z, c },
                Mode {
                    z: z.conj(),
                    c: c.conj(),
                },
            ]
        });
        prop::collection::vec(prop_oneof![real, pair], 1..=3)
            .prop_map(|groups| groups.into_iter().flatten().take(4).collect::<Vec<_>>())
            .prop_filter("modes well separated, conjugate pairs intact", |modes| {
                let closed = modes
                    .iter()
                    .all(|m| m.z.im == 0.0 || modes.iter().any(|o| (o.z - m.z.conj()).norm() < 1e-15));
                let separated = modes
                    .iter()
                    .enumerate()
                    .all(|(i, a)| modes[i + 1..].iter().all(|b| (a.z - b.z).norm() > 0.01));
                closed && separated
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn noiseless_recovery_is_exact(modes in mode_strategy()) {
            let values = synth(&modes, 100);
            let found = matrix_pencil(&values, 4, 1e-9).unwrap();
            prop_assert_eq!(found.modes.len(), modes.len());
            for m in &modes {
                let err = closest(&found.modes, m.z);
                prop_assert!(err < 1e-8, "mode {} recovered with error {:e}", m.z, err);
            }
        }

        #[test]
        fn real_signals_give_conjugate_pairs(modes in mode_strategy(), noise_seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(noise_seed);
            let values: Vec<f64> = synth(&modes, 50).iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect();
            let found = matrix_pencil(&values, 6, 0.01).unwrap();
            for m in found.modes.iter().filter(|m| m.z.im.abs() > 1e-9) {
                prop_assert!(found.modes.iter().any(|o| (o.z - m.z.conj()).norm() < 1e-6));
            }
        }
    }
}
