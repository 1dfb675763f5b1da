//! Repeated experiments, analysis of measured signals and the final report.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::acquire::{acquire_signal, exact_probabilities, Acquisition};
use super::eigensystem::{sample_resolvable_pairs, Eigensystem, InitialStateSpec, SpecLabel, SubspaceDims};
use super::estimate::{
    compute_diagonal_entries, estimate_fidelities, estimate_unitary_params, mark_fixed_point, match_modes,
    MatchedEigenvalue, Subspace,
};
use crate::circuits::{build_target, lift_degeneracy, repeat_target, Circuit, Gate, TargetSpec};
use crate::error::{invalid, CsbError, Result};
use crate::noise::{oracle_fidelities, GroundTruth, NoiseModel};
use crate::pencil::{estimate_modes, Mode, Signal, DEFAULT_MAX_MODES, DEFAULT_SV_THRESHOLD, MAX_MODES_CAP};
use crate::rng::{derive_seed, stream, tag};

/// Protocol parameters shared by every repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Number of sampled eigenstate pairs `K`.
    pub pairs: usize,
    pub l_max: usize,
    /// Shots per circuit; `None` uses exact probabilities.
    pub shots: Option<u64>,
    pub repetitions: usize,
    /// Randomized compilations per circuit, sharing its shots.
    pub randomizations: Option<usize>,
    pub seed: u64,
    pub max_modes: usize,
    pub sv_threshold: f64,
    /// The benchmarked unit is the target repeated this many times.
    pub n_rep: usize,
    pub noisy_preparation: bool,
    /// RMS non-trivial phase error (radians) above which a strong unitary error is flagged.
    pub unitary_alarm: f64,
    pub compute_oracle: bool,
    /// Smallest phase gap of a sampled pair; `None` means one period over `l_max`.
    pub min_gap: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            pairs: 10,
            l_max: 50,
            shots: Some(10_000),
            repetitions: 10,
            randomizations: None,
            seed: 0,
            max_modes: DEFAULT_MAX_MODES,
            sv_threshold: DEFAULT_SV_THRESHOLD,
            n_rep: 1,
            noisy_preparation: false,
            unitary_alarm: 0.05,
            compute_oracle: true,
            min_gap: None,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pairs", self.pairs),
            ("repetitions", self.repetitions),
            ("n_rep", self.n_rep),
            ("max_modes", self.max_modes),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        if self.max_modes > MAX_MODES_CAP {
            return Err(invalid(
                "max_modes",
                format!("{} above {MAX_MODES_CAP}", self.max_modes),
            ));
        }
        if self.shots == Some(0) {
            return Err(invalid("shots", "must be at least 1"));
        }
        if self.randomizations == Some(0) {
            return Err(invalid("randomizations", "must be at least 1"));
        }
        if let (Some(n), Some(r)) = (self.shots, self.randomizations) {
            if n < r as u64 {
                return Err(invalid("shots", format!("{n} shots cannot cover {r} randomizations")));
            }
        }
        if !(self.sv_threshold > 0.0 && self.sv_threshold < 1.0) {
            return Err(invalid("sv_threshold", "must lie in (0, 1)"));
        }
        if self.min_gap.is_some_and(|g| !(0.0..=std::f64::consts::PI).contains(&g)) {
            return Err(invalid("min_gap", "must lie in [0, π]"));
        }
        if !(self.unitary_alarm > 0.0) {
            return Err(invalid("unitary_alarm", "must be positive"));
        }
        Ok(())
    }

    pub fn resolution_gap(&self) -> f64 {
        self.min_gap.unwrap_or(std::f64::consts::TAU / self.l_max.max(1) as f64)
    }

    fn acquisition(&self) -> Acquisition {
        Acquisition {
            l_max: self.l_max,
            shots: self.shots,
            randomizations: self.randomizations,
            noisy_preparation: self.noisy_preparation,
        }
    }
}

/// A target, its noise and the protocol settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub target: TargetSpec,
    /// Single-qubit layer merged into the target to lift degeneracy.
    pub lift: Option<Vec<Gate>>,
    pub noise: NoiseModel,
    pub settings: Settings,
}

/// Experiment with its benchmarked circuit and ideal spectrum resolved.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub experiment: Experiment,
    /// The target as given, repeated `n_rep` times but without the lift layer.
    pub reference: Circuit,
    /// The unit whose powers are measured.
    pub circuit: Circuit,
    pub eigensystem: Eigensystem,
    pub dims: SubspaceDims,
}

impl Experiment {
    pub fn prepare(&self) -> Result<Prepared> {
        self.settings.validate()?;
        self.noise.validate()?;
        let base = build_target(&self.target)?;
        let lifted = match &self.lift {
            Some(layer) => lift_degeneracy(&base, layer)?,
            None => base.clone(),
        };
        let circuit = repeat_target(&lifted, self.settings.n_rep)?;
        let reference = repeat_target(&base, self.settings.n_rep)?;
        let eigensystem = Eigensystem::of_circuit(&circuit)?;
        let dims = eigensystem.subspace_dims();
        Ok(Prepared {
            experiment: self.clone(),
            reference,
            circuit,
            eigensystem,
            dims,
        })
    }
}

/// Conditions under which the estimates should not be trusted as they stand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    DegenerateSpectrum,
    EigenvalueMatchingUnreliable,
    StrongUnitaryError,
    ManyModes,
    HighResidual,
}

impl Flag {
    /// Flags that make `--strict` runs fail.
    pub fn is_unreliable(self) -> bool {
        !matches!(self, Flag::HighResidual)
    }

    pub fn advice(self) -> &'static str {
        match self {
            Flag::DegenerateSpectrum => "degenerate ideal spectrum; consider lifting the degeneracy",
            Flag::EigenvalueMatchingUnreliable => "eigenvalue matching unreliable; consider randomized compiling",
            Flag::StrongUnitaryError => "large phase errors indicate a strong unitary error",
            Flag::ManyModes => "more modes than retained; damping rates may be inaccurate",
            Flag::HighResidual => "mode reconstruction residual above the shot-noise scale",
        }
    }
}

/// One measured signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub repetition: usize,
    pub spec_index: usize,
    pub signal: Signal,
}

/// Mode extraction and matching for one group of specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub group: usize,
    pub specs: Vec<SpecLabel>,
    pub modes: Vec<Mode>,
    pub residual: f64,
    pub singular_values: Vec<f64>,
    pub saturated: bool,
    pub matches: Vec<MatchedEigenvalue>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub index: usize,
    pub process_fidelity: f64,
    pub stochastic_fidelity: f64,
    pub imaginary_residue: f64,
    pub rms_phase_error: f64,
    pub unitary: BTreeMap<String, f64>,
    pub flags: Vec<Flag>,
    pub probes: Vec<ProbeRecord>,
}

/// Mean and sample standard deviation over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Estimate {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                count: 0,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, count: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsbReport {
    pub width: usize,
    pub dims: SubspaceDims,
    pub min_phase_gap: f64,
    pub process_fidelity: Estimate,
    pub stochastic_fidelity: Estimate,
    pub unitary: BTreeMap<String, Estimate>,
    pub flags: Vec<Flag>,
    pub total_shots: u64,
    /// Ground truth of the benchmarked circuit.
    pub oracle: Option<GroundTruth>,
    /// Ground truth of the target before the lift layer, when one was applied.
    pub reference_oracle: Option<GroundTruth>,
    pub repetitions: Vec<RepetitionReport>,
}

impl CsbReport {
    pub fn unreliable_flags(&self) -> Vec<Flag> {
        self.flags.iter().copied().filter(|f| f.is_unreliable()).collect()
    }
}

/// Signals plus the report derived from them.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: CsbReport,
    pub specs: Vec<Vec<SpecLabel>>,
    pub signals: Vec<SignalRecord>,
}

/// Specs of every repetition, each repetition drawing from its own stream.
pub fn sample_all_specs(p: &Prepared) -> Result<Vec<Vec<InitialStateSpec>>> {
    let s = &p.experiment.settings;
    (0..s.repetitions)
        .map(|r| {
            let mut rng = stream(s.seed, &[tag::REPETITION, r as u64, tag::SAMPLE_PAIRS]);
            sample_resolvable_pairs(&p.eigensystem, s.pairs, p.circuit.kind(), s.resolution_gap(), &mut rng)
        })
        .collect()
}

/// Simulates every signal of every repetition.
pub fn acquire_all(p: &Prepared, specs: &[Vec<InitialStateSpec>]) -> Result<Vec<SignalRecord>> {
    let s = &p.experiment.settings;
    let acq = s.acquisition();
    let tasks: Vec<(usize, usize)> = specs
        .iter()
        .enumerate()
        .flat_map(|(r, v)| (0..v.len()).map(move |i| (r, i)))
        .collect();

    // Without randomization the exact probabilities depend only on the pair.
    let mut cache: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    if s.randomizations.is_none() {
        let unique: BTreeSet<(usize, usize)> = tasks.iter().map(|&(r, i)| (specs[r][i].a, specs[r][i].b)).collect();
        let firsts: Vec<&InitialStateSpec> = unique
            .iter()
            .map(|&(a, b)| {
                tasks
                    .iter()
                    .map(|&(r, i)| &specs[r][i])
                    .find(|sp| (sp.a, sp.b) == (a, b))
                    .expect("pair drawn from tasks")
            })
            .collect();
        let computed: Vec<((usize, usize), Vec<f64>)> = firsts
            .par_iter()
            .map(|sp| {
                let probs = exact_probabilities(sp, &p.circuit, &p.experiment.noise, s.l_max, s.noisy_preparation);
                ((sp.a, sp.b), probs)
            })
            .collect();
        cache.extend(computed);
    }

    tasks
        .par_iter()
        .map(|&(r, i)| {
            let spec = &specs[r][i];
            let seed = derive_seed(s.seed, &[tag::REPETITION, r as u64, i as u64]);
            let cached = cache.get(&(spec.a, spec.b)).map(Vec::as_slice);
            let signal = acquire_signal(spec, &p.circuit, &p.experiment.noise, &acq, seed, cached)?;
            Ok(SignalRecord {
                repetition: r,
                spec_index: i,
                signal,
            })
        })
        .collect()
}

fn residual_limit(shots: u64) -> f64 {
    if shots == 0 {
        1e-6
    } else {
        3.0 * 0.5 / (shots as f64).sqrt() + 1e-6
    }
}

fn analyze_probe(
    p: &Prepared,
    group: usize,
    members: &[&InitialStateSpec],
    signals: &[&Signal],
) -> Result<ProbeRecord> {
    let s = &p.experiment.settings;
    let len = signals[0].values().len();
    if signals.iter().any(|sg| sg.values().len() != len) {
        return Err(invalid("signals", "lengths differ inside a group"));
    }
    let avg: Vec<f64> = (0..len)
        .map(|l| signals.iter().map(|sg| sg.values()[l]).sum::<f64>() / signals.len() as f64)
        .collect();
    let signal = Signal::new(avg, signals[0].shots())?;
    let lead = members.iter().find(|m| m.a != m.b).unwrap_or(&members[0]);
    let labels = members.iter().map(|m| m.label()).collect();
    let modes = estimate_modes(&signal, s.max_modes, s.sv_threshold)?;
    let mut record = ProbeRecord {
        group,
        specs: labels,
        modes: modes.modes.clone(),
        residual: modes.residual,
        singular_values: modes.singular_values.clone(),
        saturated: modes.saturated,
        matches: vec![],
        error: None,
    };
    match match_modes(&modes, lead.gap(), (lead.a, lead.b)) {
        Ok(mut matches) => {
            mark_fixed_point(&mut matches, signal.shots(), len);
            compute_diagonal_entries(&mut matches);
            record.matches = matches;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    Ok(record)
}

fn analyze_repetition(
    p: &Prepared,
    index: usize,
    specs: &[InitialStateSpec],
    signals: &[&Signal],
) -> Result<RepetitionReport> {
    let s = &p.experiment.settings;
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, sp) in specs.iter().enumerate() {
        groups.entry(sp.group).or_default().push(i);
    }
    let probes: Vec<ProbeRecord> = groups
        .iter()
        .map(|(&g, idx)| {
            let members: Vec<&InitialStateSpec> = idx.iter().map(|&i| &specs[i]).collect();
            let sigs: Vec<&Signal> = idx.iter().map(|&i| signals[i]).collect();
            analyze_probe(p, g, &members, &sigs)
        })
        .collect::<Result<_>>()?;

    let all: Vec<MatchedEigenvalue> = probes.iter().flat_map(|pr| pr.matches.iter().cloned()).collect();
    let fid = estimate_fidelities(&all, p.dims)?;

    let errors: Vec<f64> = all
        .iter()
        .filter(|m| m.subspace == Subspace::NonTrivial)
        .map(|m| m.phase_error)
        .collect();
    let rms_phase_error = if errors.is_empty() {
        0.0
    } else {
        (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
    };

    let mut flags = BTreeSet::new();
    if all.iter().any(|m| m.ambiguous) || probes.iter().any(|pr| pr.error.is_some()) {
        flags.insert(Flag::EigenvalueMatchingUnreliable);
    }
    if probes.iter().any(|pr| pr.saturated) {
        flags.insert(Flag::ManyModes);
    }
    let shots = signals.first().map_or(0, |sg| sg.shots());
    if probes.iter().any(|pr| pr.residual > residual_limit(shots)) {
        flags.insert(Flag::HighResidual);
    }
    if rms_phase_error > s.unitary_alarm {
        flags.insert(Flag::StrongUnitaryError);
    }

    let unitary = if s.randomizations.is_none() {
        estimate_unitary_params(&all, &p.experiment.target, &p.eigensystem, s.n_rep).unwrap_or_default()
    } else {
        BTreeMap::new()
    };

    Ok(RepetitionReport {
        index,
        process_fidelity: fid.process_fidelity,
        stochastic_fidelity: fid.stochastic_fidelity,
        imaginary_residue: fid.imaginary_residue,
        rms_phase_error,
        unitary,
        flags: flags.into_iter().collect(),
        probes,
    })
}

/// Steps 3a–4 on already measured signals.
pub fn analyze(p: &Prepared, specs: &[Vec<InitialStateSpec>], signals: &[SignalRecord]) -> Result<CsbReport> {
    let mut by_rep: Vec<Vec<Option<&Signal>>> = specs.iter().map(|v| vec![None; v.len()]).collect();
    for rec in signals {
        let slot = by_rep
            .get_mut(rec.repetition)
            .and_then(|v| v.get_mut(rec.spec_index))
            .ok_or_else(|| invalid("signals", format!("unknown spec {}/{}", rec.repetition, rec.spec_index)))?;
        *slot = Some(&rec.signal);
    }
    let per_rep: Vec<Vec<&Signal>> = by_rep
        .into_iter()
        .enumerate()
        .map(|(r, v)| {
            v.into_iter()
                .enumerate()
                .map(|(i, s)| s.ok_or_else(|| invalid("signals", format!("missing signal {r}/{i}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let reps: Vec<RepetitionReport> = per_rep
        .par_iter()
        .enumerate()
        .map(|(r, sigs)| analyze_repetition(p, r, &specs[r], sigs))
        .collect::<Result<_>>()?;

    let f: Vec<f64> = reps.iter().map(|r| r.process_fidelity).collect();
    let fs: Vec<f64> = reps.iter().map(|r| r.stochastic_fidelity).collect();
    let mut unitary = BTreeMap::new();
    let keys: BTreeSet<&String> = reps.iter().flat_map(|r| r.unitary.keys()).collect();
    for k in keys {
        let v: Vec<f64> = reps.iter().filter_map(|r| r.unitary.get(k).copied()).collect();
        unitary.insert(k.clone(), Estimate::from_samples(&v));
    }
    let mut flags: BTreeSet<Flag> = reps.iter().flat_map(|r| r.flags.iter().copied()).collect();
    if p.eigensystem.is_degenerate() {
        flags.insert(Flag::DegenerateSpectrum);
    }
    let total_shots = signals
        .iter()
        .map(|r| r.signal.shots() * r.signal.values().len() as u64)
        .sum();

    let e = &p.experiment;
    let (oracle, reference_oracle) = if e.settings.compute_oracle {
        let o = oracle_fidelities(&p.circuit, &e.noise)?;
        let r = match e.lift {
            Some(_) => Some(oracle_fidelities(&p.reference, &e.noise)?),
            None => None,
        };
        (Some(o), r)
    } else {
        (None, None)
    };

    Ok(CsbReport {
        width: p.circuit.width(),
        dims: p.dims,
        min_phase_gap: p.eigensystem.min_gap(),
        process_fidelity: Estimate::from_samples(&f),
        stochastic_fidelity: Estimate::from_samples(&fs),
        unitary,
        flags: flags.into_iter().collect(),
        total_shots,
        oracle,
        reference_oracle,
        repetitions: reps,
    })
}

/// Rebuilds specs from stored labels.
pub fn specs_from_labels(p: &Prepared, labels: &[Vec<SpecLabel>]) -> Result<Vec<Vec<InitialStateSpec>>> {
    labels
        .iter()
        .map(|v| {
            v.iter()
                .map(|l| InitialStateSpec::new(&p.eigensystem, l.a, l.b, l.group))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Samples specs, simulates all signals and analyzes them.
pub fn run_experiment(e: &Experiment) -> Result<RunOutput> {
    let p = e.prepare()?;
    run_prepared(&p)
}

pub fn run_prepared(p: &Prepared) -> Result<RunOutput> {
    let specs = sample_all_specs(p)?;
    let signals = acquire_all(p, &specs)?;
    let report = analyze(p, &specs, &signals)?;
    if !report.process_fidelity.mean.is_finite() {
        return Err(CsbError::Validation("no repetition produced an estimate".into()));
    }
    let labels = specs
        .iter()
        .map(|v| v.iter().map(InitialStateSpec::label).collect())
        .collect();
    Ok(RunOutput {
        report,
        specs: labels,
        signals,
    })
}
