//! Benchmarking circuits and simulated measurement of their signals.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::eigensystem::InitialStateSpec;
use crate::circuits::{randomize_once, repeat_target, Circuit};
use crate::error::{invalid, Result};
use crate::noise::{NoiseModel, NoisyCircuit};
use crate::pencil::{Signal, MIN_SIGNAL_LEN};
use crate::qcore::sim::{compile, CompiledOp, DensityState};
use crate::rng::{stream, tag};

/// How the probabilities of one spec are turned into a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub l_max: usize,
    /// Shots per circuit; `None` keeps exact probabilities.
    pub shots: Option<u64>,
    /// Number of randomized compilations sharing the shot budget.
    pub randomizations: Option<usize>,
    /// Apply the noise model to the preparation circuit as well.
    pub noisy_preparation: bool,
}

fn check_l_max(l_max: usize) -> Result<()> {
    if l_max + 1 < MIN_SIGNAL_LEN {
        return Err(invalid(
            "l_max",
            format!("{l_max} gives fewer than {MIN_SIGNAL_LEN} points"),
        ));
    }
    Ok(())
}

/// For each spec, the circuits `prep · target^L` for `L = 0..=l_max`.
pub fn generate_benchmark_suite(
    specs: &[InitialStateSpec],
    target: &Circuit,
    l_max: usize,
) -> Result<Vec<Vec<Circuit>>> {
    check_l_max(l_max)?;
    specs
        .iter()
        .map(|s| {
            let mut out = Vec::with_capacity(l_max + 1);
            out.push(s.preparation.clone());
            for l in 1..=l_max {
                out.push(s.preparation.then(&repeat_target(target, l)?)?);
            }
            Ok(out)
        })
        .collect()
}

fn initial_state(spec: &InitialStateSpec, model: &NoiseModel, noisy: bool) -> DensityState {
    if noisy {
        let n = spec.preparation.width();
        let ops = NoisyCircuit::new(spec.preparation.clone(), model.clone()).operations();
        let mut st = DensityState::zero_state(n);
        st.apply_all(&compile(n, &ops));
        st
    } else {
        DensityState::from_pure(&spec.state)
    }
}

fn noisy_ops(circ: &Circuit, model: &NoiseModel) -> Vec<CompiledOp> {
    compile(
        circ.width(),
        &NoisyCircuit::new(circ.clone(), model.clone()).operations(),
    )
}

/// Probabilities `⟨ψ|Λ^L(ρ)|ψ⟩` for `L = 0..=l_max`, evolving one state.
pub fn exact_probabilities(
    spec: &InitialStateSpec,
    target: &Circuit,
    model: &NoiseModel,
    l_max: usize,
    noisy_preparation: bool,
) -> Vec<f64> {
    let ops = noisy_ops(target, model);
    let mut st = initial_state(spec, model, noisy_preparation);
    let mut out = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        out.push(st.overlap(&spec.state).clamp(0.0, 1.0));
        if l < l_max {
            st.apply_all(&ops);
        }
    }
    out
}

/// One randomized-compiling trajectory: every repetition of the target is
/// compiled independently, and the length-`L` circuit is the first `L` of them.
pub fn randomized_probabilities<R: Rng>(
    spec: &InitialStateSpec,
    target: &Circuit,
    model: &NoiseModel,
    l_max: usize,
    noisy_preparation: bool,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut st = initial_state(spec, model, noisy_preparation);
    let mut out = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        out.push(st.overlap(&spec.state).clamp(0.0, 1.0));
        if l < l_max {
            let copy = randomize_once(target, rng)?;
            st.apply_all(&noisy_ops(&copy, model));
        }
    }
    Ok(out)
}

fn binomial_fraction<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 {
        return 0;
    }
    Binomial::new(n, p.clamp(0.0, 1.0))
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}

/// Per-circuit probabilities drawn with `shots` binomial samples each.
pub fn sample_shots<R: Rng>(probabilities: &[f64], shots: u64, rng: &mut R) -> Vec<f64> {
    probabilities
        .iter()
        .map(|&p| binomial_fraction(shots, p, rng) as f64 / shots as f64)
        .collect()
}

/// Measured signal of one spec. `seed` should already identify the spec and
/// repetition; `cached` may hold its exact probabilities when randomization is off.
pub fn acquire_signal(
    spec: &InitialStateSpec,
    target: &Circuit,
    model: &NoiseModel,
    acq: &Acquisition,
    seed: u64,
    cached: Option<&[f64]>,
) -> Result<Signal> {
    check_l_max(acq.l_max)?;
    if acq.shots == Some(0) {
        return Err(invalid("shots", "must be at least 1"));
    }
    let mut shot_rng = stream(seed, &[tag::SHOTS]);
    let values = match acq.randomizations {
        None | Some(0) => {
            let probs = match cached {
                Some(p) => p.to_vec(),
                None => exact_probabilities(spec, target, model, acq.l_max, acq.noisy_preparation),
            };
            match acq.shots {
                Some(n) => sample_shots(&probs, n, &mut shot_rng),
                None => probs,
            }
        }
        Some(n_r) => {
            let mut counts = vec![0.0; acq.l_max + 1];
            for r in 0..n_r {
                let mut rc_rng = stream(seed, &[tag::RANDOMIZE, r as u64]);
                let probs =
                    randomized_probabilities(spec, target, model, acq.l_max, acq.noisy_preparation, &mut rc_rng)?;
                match acq.shots {
                    Some(n) => {
                        let share = n / n_r as u64 + u64::from((r as u64) < n % n_r as u64);
                        for (c, &p) in counts.iter_mut().zip(&probs) {
                            *c += binomial_fraction(share, p, &mut shot_rng) as f64;
                        }
                    }
                    None => {
                        for (c, &p) in counts.iter_mut().zip(&probs) {
                            *c += p;
                        }
                    }
                }
            }
            let norm = acq.shots.map_or(n_r as f64, |n| n as f64);
            counts.into_iter().map(|c| c / norm).collect()
        }
    };
    Signal::new(values, acq.shots.unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_target, lift_degeneracy, toffoli_lift_layer, TargetSpec};
    use crate::protocol::eigensystem::{sample_eigenpairs, Eigensystem};
    use crate::qcore::sim::evolve_and_measure;
    use crate::qcore::types::DensityMatrix;
    use rand::SeedableRng;
    use std::f64::consts::FRAC_PI_4;

    fn t_specs() -> (Circuit, Vec<InitialStateSpec>) {
        let t = build_target(&TargetSpec::Rz { theta: FRAC_PI_4 }).unwrap();
        let sys = Eigensystem::of_circuit(&t).unwrap();
        let specs = sample_eigenpairs(&sys, 2, t.kind(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(0)).unwrap();
        (t, specs)
    }

    #[test]
    fn suite_sizes() {
        let (t, specs) = t_specs();
        let suite = generate_benchmark_suite(&specs, &t, 50).unwrap();
        assert_eq!(suite.len(), 2);
        assert!(suite.iter().all(|s| s.len() == 51));
        assert_eq!(suite.iter().map(Vec::len).sum::<usize>(), 2 * 51);
        assert!(generate_benchmark_suite(&specs, &t, 3).is_err());
    }

    #[test]
    fn noiseless_t_signal_closed_form() {
        let (t, specs) = t_specs();
        let model = NoiseModel::ideal();
        let sup = exact_probabilities(&specs[0], &t, &model, 16, false);
        let eig = exact_probabilities(&specs[1], &t, &model, 16, false);
        for l in 0..=16 {
            let expect = (1.0 + (FRAC_PI_4 * l as f64).cos()) / 2.0;
            assert!((sup[l] - expect).abs() < 1e-12, "L={l}");
            assert!((eig[l] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectory_matches_circuit_simulation() {
        let toffoli = build_target(&TargetSpec::Toffoli).unwrap();
        let v = lift_degeneracy(&toffoli, &toffoli_lift_layer()).unwrap();
        let sys = Eigensystem::of_circuit(&v).unwrap();
        let specs = sample_eigenpairs(&sys, 2, v.kind(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(3)).unwrap();
        let model = NoiseModel::uniform(0.002, 0.01, 0.01, 0.0).unwrap();
        let traj = exact_probabilities(&specs[0], &v, &model, 8, true);
        let suite = generate_benchmark_suite(&specs[..1], &v, 8).unwrap();
        let proj = DensityMatrix::pure(&specs[0].state).unwrap();
        for (l, circ) in suite[0].iter().enumerate() {
            let p = evolve_and_measure(&DensityMatrix::basis(3, 0), circ, Some(&model), &proj).unwrap();
            assert!((p - traj[l]).abs() < 1e-10, "L={l}");
        }
    }

    #[test]
    fn shots_are_reproducible_and_binomial() {
        let (t, specs) = t_specs();
        let model = NoiseModel::uniform(0.01, 0.0, 0.0, -0.01).unwrap();
        let acq = Acquisition {
            l_max: 20,
            shots: Some(10_000),
            randomizations: None,
            noisy_preparation: false,
        };
        let a = acquire_signal(&specs[0], &t, &model, &acq, 7, None).unwrap();
        let b = acquire_signal(&specs[0], &t, &model, &acq, 7, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shots(), 10_000);
        let exact = exact_probabilities(&specs[0], &t, &model, 20, false);
        for (x, p) in a.values().iter().zip(&exact) {
            assert!((x - p).abs() < 5.0 * (p * (1.0 - p) / 1e4).sqrt() + 1e-12);
        }
    }

    #[test]
    fn randomized_noiseless_signal_equals_plain() {
        let toffoli = build_target(&TargetSpec::Toffoli).unwrap();
        let v = lift_degeneracy(&toffoli, &toffoli_lift_layer()).unwrap();
        let sys = Eigensystem::of_circuit(&v).unwrap();
        let specs = sample_eigenpairs(&sys, 1, v.kind(), &mut rand_chacha::ChaCha8Rng::seed_from_u64(1)).unwrap();
        let model = NoiseModel::ideal();
        let acq = Acquisition {
            l_max: 10,
            shots: None,
            randomizations: Some(4),
            noisy_preparation: false,
        };
        let rc = acquire_signal(&specs[0], &v, &model, &acq, 3, None).unwrap();
        let plain = exact_probabilities(&specs[0], &v, &model, 10, false);
        for (x, y) in rc.values().iter().zip(&plain) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn randomized_shot_budget_is_preserved() {
        let (t, specs) = t_specs();
        let model = NoiseModel::ideal();
        let acq = Acquisition {
            l_max: 9,
            shots: Some(1003),
            randomizations: Some(10),
            noisy_preparation: false,
        };
        let s = acquire_signal(&specs[1], &t, &model, &acq, 3, None).unwrap();
        // The eigenstate is never lost without noise, so every shot succeeds.
        assert!(s.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }
}
