//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line straight to stdout, past the harness
//! capture, and fails when the criterion is not met.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use csb_cli::config::{ExperimentConfig, OneOrMany};
use csb_cli::driver::run_sweep;
use csb_core::circuits::{toffoli_lift_layer, IsingParams, TargetSpec};
use csb_core::noise::{NoiseModel, NoisyCircuit};
use csb_core::pencil::{matrix_pencil, Mode};
use csb_core::protocol::{hoeffding_sample_size, run_experiment, CsbReport, Experiment, Flag, Settings};
use csb_core::qcore::linalg::C64;
use csb_core::qcore::{channel_eigenvalues, gates, ptm_of_circuit, ptm_of_operations, CMatrix, Ptm, DEFAULT_PTM_CAP};
use csb_core::rng::stream;
use rand::Rng;

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn bundled(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

fn infidelity_error(estimate: f64, exact: f64) -> f64 {
    ((1.0 - estimate) - (1.0 - exact)) / (1.0 - exact)
}

/// Mean estimate within max(15% relative infidelity, 3 sample σ) of `exact`.
fn within_tolerance(mean: f64, std: f64, exact: f64) -> bool {
    infidelity_error(mean, exact).abs() <= 0.15 || (mean - exact).abs() <= 3.0 * std
}

fn exact_oracle(r: &CsbReport) -> (f64, f64) {
    let o = r.oracle.expect("oracle requested");
    (o.process_fidelity, o.stochastic_fidelity)
}

#[test]
fn criterion_1_t_gate_suite() {
    let cfg = bundled("tgate.cfg");
    let start = Instant::now();
    let results = run_sweep(&cfg, |_, _| {}).unwrap();
    let elapsed = start.elapsed();
    let mut ok = elapsed < Duration::from_secs(120);
    let mut parts = Vec::new();
    for (pt, out) in &results {
        let r = &out.report;
        let (f, _) = exact_oracle(r);
        let pass = within_tolerance(r.process_fidelity.mean, r.process_fidelity.std, f);
        ok &= pass;
        parts.push(format!(
            "dp={:.0e} err={:+.1}%",
            pt.sweep_value.unwrap(),
            100.0 * infidelity_error(r.process_fidelity.mean, f)
        ));
    }
    report(1, ok, &format!("{} in {:.1}s", parts.join(", "), elapsed.as_secs_f64()));
}

#[test]
fn criterion_2_unitary_angle_recovery() {
    let cfg = bundled("tgate_angle.cfg");
    let results = run_sweep(&cfg, |_, _| {}).unwrap();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (pt, out) in &results {
        let truth = pt.experiment.noise.rotation_overshoot;
        let est = out.report.unitary["delta_theta"].mean;
        worst = worst.max((est - truth).abs());
        ok &= (est - truth).abs() <= 1e-3;
    }
    report(
        2,
        ok,
        &format!(
            "{} angles, worst |dtheta error| = {worst:.2e} (limit 1e-3)",
            results.len()
        ),
    );
}

#[test]
fn criterion_3_fsim_suite() {
    let cfg = bundled("fsim.cfg");
    let results = run_sweep(&cfg, |_, _| {}).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (pt, out) in &results {
        let r = &out.report;
        let dp = pt.sweep_value.unwrap();
        let (f, fs) = exact_oracle(r);
        ok &= within_tolerance(r.process_fidelity.mean, r.process_fidelity.std, f);
        ok &= within_tolerance(r.stochastic_fidelity.mean, r.stochastic_fidelity.std, fs);
        let dt = (r.unitary["delta_theta"].mean - pt.experiment.noise.coherent_theta).abs();
        let dphi = (r.unitary["delta_phi"].mean - pt.experiment.noise.coherent_phi).abs();
        if dp <= 3e-3 {
            ok &= dt <= 2e-3 && dphi <= 2e-3;
        }
        parts.push(format!(
            "dp={dp:.0e} F err={:+.1}% Fsto err={:+.1}% angle err=({dt:.1e},{dphi:.1e})",
            100.0 * infidelity_error(r.process_fidelity.mean, f),
            100.0 * infidelity_error(r.stochastic_fidelity.mean, fs),
        ));
    }
    report(3, ok, &parts.join("; "));
}

#[test]
fn criterion_4_toffoli_degeneracy() {
    let settings = Settings {
        pairs: 10,
        l_max: 50,
        seed: 41,
        ..Settings::default()
    };
    let weak = NoiseModel::uniform(1e-3, 0.01, 0.0, 0.0).unwrap();
    let raw = run_experiment(&Experiment {
        target: TargetSpec::Toffoli,
        lift: None,
        noise: weak.clone(),
        settings: settings.clone(),
    })
    .unwrap()
    .report;
    let (f_raw, _) = exact_oracle(&raw);
    let raw_err = infidelity_error(raw.process_fidelity.mean, f_raw);
    let raw_ok = !raw.unreliable_flags().is_empty() || raw_err.abs() > 0.25;

    let varied = run_experiment(&Experiment {
        target: TargetSpec::Toffoli,
        lift: Some(toffoli_lift_layer()),
        noise: weak,
        settings,
    })
    .unwrap()
    .report;
    let f_ref = varied
        .reference_oracle
        .expect("lifted runs carry the unlifted oracle")
        .process_fidelity;
    let varied_err = infidelity_error(varied.process_fidelity.mean, f_ref);
    let varied_ok = within_tolerance(varied.process_fidelity.mean, varied.process_fidelity.std, f_ref);

    let mut cfg = bundled("toffoli.cfg");
    cfg.coherent_theta = OneOrMany::One(0.05);
    let strong = &run_sweep(&cfg, |_, _| {}).unwrap()[0].1.report;
    let f_strong = strong.reference_oracle.unwrap().process_fidelity;
    let strong_err = infidelity_error(strong.process_fidelity.mean, f_strong);
    let strong_ok = strong_err.abs() <= 0.20;

    report(
        4,
        raw_ok && varied_ok && strong_ok,
        &format!(
            "raw flags={:?} err={:+.1}%; varied weak err={:+.1}%; varied strong+RC err={:+.1}%",
            raw.unreliable_flags(),
            100.0 * raw_err,
            100.0 * varied_err,
            100.0 * strong_err
        ),
    );
}

/// Real signals from real modes and conjugate pairs, pairwise separated by
/// more than 0.01 with coefficients above 0.02.
fn random_modes<R: Rng>(rng: &mut R) -> Vec<Mode> {
    loop {
        let mut modes = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            if rng.random_bool(0.5) {
                let c = rng.random_range(0.02..1.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
                modes.push(Mode {
                    z: C64::new(rng.random_range(0.6..1.0), 0.0),
                    c: C64::new(c, 0.0),
                });
            } else {
                let z = C64::from_polar(rng.random_range(0.6..1.0), rng.random_range(0.1..3.0));
                let c = C64::from_polar(rng.random_range(0.02..1.0), rng.random_range(-3.1..3.1));
                modes.push(Mode { z, c });
                modes.push(Mode {
                    z: z.conj(),
                    c: c.conj(),
                });
            }
        }
        modes.truncate(4);
        let closed = modes
            .iter()
            .all(|m| m.z.im == 0.0 || modes.iter().any(|o| (o.z - m.z.conj()).norm() < 1e-15));
        let separated = modes
            .iter()
            .enumerate()
            .all(|(i, a)| modes[i + 1..].iter().all(|b| (a.z - b.z).norm() > 0.01));
        if closed && separated {
            return modes;
        }
    }
}

fn synth(modes: &[Mode], l_max: usize) -> Vec<f64> {
    (0..=l_max)
        .map(|l| modes.iter().map(|m| m.c * m.z.powu(l as u32)).sum::<C64>().re)
        .collect()
}

#[test]
fn criterion_5_matrix_pencil() {
    let mut rng = stream(5, &[0]);
    let mut worst: f64 = 0.0;
    let mut count_ok = true;
    let mut conj_ok = true;
    for _ in 0..500 {
        let modes = random_modes(&mut rng);
        let found = matrix_pencil(&synth(&modes, 100), 4, 1e-9).unwrap();
        count_ok &= found.modes.len() == modes.len();
        for m in &modes {
            let err = found
                .modes
                .iter()
                .map(|f| (f.z - m.z).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(err);
        }
        let noisy: Vec<f64> = synth(&modes, 50)
            .into_iter()
            .map(|v| v + rng.random_range(-1e-3..1e-3))
            .collect();
        let found = matrix_pencil(&noisy, 6, 0.01).unwrap();
        for m in found.modes.iter().filter(|m| m.z.im.abs() > 1e-9) {
            conj_ok &= found.modes.iter().any(|o| (o.z - m.z.conj()).norm() < 1e-6);
        }
    }
    report(
        5,
        count_ok && conj_ok && worst < 1e-8,
        &format!("500 draws, worst |z error| = {worst:.1e}, conjugate pairs closed: {conj_ok}"),
    );
}

fn spectral_defects(m: &Ptm) -> (f64, f64, f64) {
    let eig = channel_eigenvalues(m);
    let outside = eig.iter().map(|z| z.norm() - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let unpaired = eig
        .iter()
        .map(|z| eig.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    (m.trace_preservation_defect(), outside, unpaired)
}

#[test]
fn criterion_6_spectral_invariants() {
    let configs = [
        "tgate.cfg",
        "tgate_angle.cfg",
        "fsim.cfg",
        "fsim_angle.cfg",
        "toffoli.cfg",
        "ising.cfg",
    ];
    let (mut row, mut disc, mut pair) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    let mut channels = 0;
    for name in configs {
        for pt in bundled(name).expand().unwrap() {
            let p = pt.experiment.prepare().unwrap();
            let noise = &pt.experiment.noise;
            let mut ptms = Vec::new();
            if p.circuit.width() <= DEFAULT_PTM_CAP {
                ptms.push(ptm_of_circuit(&p.circuit, Some(noise)).unwrap());
            }
            for (ideal, ops) in NoisyCircuit::new(p.circuit.clone(), noise.clone())
                .local_gates()
                .unwrap()
            {
                ptms.push(ptm_of_operations(ideal.width(), &ops));
            }
            for m in &ptms {
                let (r, d, c) = spectral_defects(m);
                row = row.max(r);
                disc = disc.max(d);
                pair = pair.max(c);
            }
            channels += ptms.len();
        }
    }
    report(
        6,
        row <= 1e-10 && disc <= 1e-8 && pair <= 1e-8,
        &format!(
            "{channels} channels: first-row defect {row:.1e}, max |z|-1 = {disc:.1e}, conjugate mismatch {pair:.1e}"
        ),
    );
}

#[test]
fn criterion_7_ising() {
    let mut rng = stream(7, &[0]);
    let params = IsingParams::random(6, 0.3, &mut rng).unwrap();
    let weak = run_experiment(&Experiment {
        target: TargetSpec::Ising(params),
        lift: None,
        noise: NoiseModel::uniform(1e-3, 0.01, 0.01, 0.0).unwrap(),
        settings: Settings {
            pairs: 10,
            l_max: 50,
            repetitions: 4,
            seed: 70,
            ..Settings::default()
        },
    })
    .unwrap()
    .report;
    let (f6, _) = exact_oracle(&weak);
    let err6 = infidelity_error(weak.process_fidelity.mean, f6);
    let weak_ok = err6.abs() <= 0.15;

    let mut cfg = bundled("ising.cfg");
    cfg.coherent_theta = OneOrMany::One(0.05);
    cfg.repetitions = 1;
    let start = Instant::now();
    let strong = run_sweep(&cfg, |_, _| {}).unwrap();
    let elapsed = start.elapsed();
    let r10 = &strong[0].1.report;
    let flagged = r10.flags.contains(&Flag::StrongUnitaryError) || r10.flags.contains(&Flag::ManyModes);
    let ok = weak_ok && flagged && elapsed < Duration::from_secs(1800);
    report(
        7,
        ok,
        &format!(
            "n=6 weak err={:+.1}% vs product oracle; n=10 strong flags={:?} in {:.0}s",
            100.0 * err6,
            r10.flags,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_8_hoeffding() {
    let mut grid_ok = true;
    for &eps in &[0.01, 0.02, 0.03, 0.05, 0.07] {
        for &delta in &[0.01, 0.02, 0.05, 0.1] {
            let expected = ((2.0f64 / delta).ln() / (2.0 * eps * eps)).ceil() as usize;
            grid_ok &= hoeffding_sample_size(eps, delta).unwrap() == expected;
        }
    }
    let k = hoeffding_sample_size(0.05, 0.05).unwrap();

    // Diagonal entries of a one-qubit depolarizing noise process in the
    // operator basis |a⟩⟨b| of the T-gate eigenvectors, which are |0⟩ and |1⟩.
    let p: f64 = 0.9;
    let mut kraus: Vec<CMatrix> = vec![gates::pauli(0).scale((1.0 - 3.0 * p / 4.0).sqrt())];
    kraus.extend((1..4).map(|i| gates::pauli(i).scale((p / 4.0f64).sqrt())));
    let mut entries = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            let e: C64 = kraus.iter().map(|m| m[(a, a)] * m[(b, b)].conj()).sum();
            entries.push(e.re);
        }
    }
    let f_true = entries.iter().sum::<f64>() / 4.0;
    let mut rng = stream(8, &[0]);
    let trials = 200;
    let covered = (0..trials)
        .filter(|_| {
            let mean = (0..k).map(|_| entries[rng.random_range(0..4)]).sum::<f64>() / k as f64;
            (mean - f_true).abs() <= 0.05
        })
        .count();
    let coverage = covered as f64 / trials as f64;
    report(
        8,
        grid_ok && k == 738 && coverage >= 0.95,
        &format!("20-point grid exact: {grid_ok}; K = {k}; coverage {covered}/{trials} at eps 0.05"),
    );
}
