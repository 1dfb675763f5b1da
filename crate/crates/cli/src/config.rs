//! Flat TOML experiment configuration and its expansion into sweep points.

use std::path::{Path, PathBuf};

use csb_core::circuits::{toffoli_lift_layer, IsingParams, TargetSpec};
use csb_core::noise::NoiseModel;
use csb_core::protocol::{Experiment, Settings};
use csb_core::rng::{derive_seed, stream, tag};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A scalar or a list; a list marks the sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    fn is_list(&self) -> bool {
        matches!(self, OneOrMany::Many(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetName {
    Rz,
    Fsim,
    Toffoli,
    Ising,
}

fn zero() -> OneOrMany<f64> {
    OneOrMany::One(0.0)
}

fn default_l_max() -> OneOrMany<usize> {
    OneOrMany::One(50)
}

fn default_repetitions() -> usize {
    10
}

fn default_shots() -> u64 {
    10_000
}

/// Angles in radians, damping parameters as probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    pub target: TargetName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Merge the single-qubit lift layer into a Toffoli target.
    #[serde(default)]
    pub lift: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<f64>>,
    /// Seed for randomly drawn Ising fields and couplings; defaults to `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ising_seed: Option<u64>,

    #[serde(default = "zero")]
    pub dp: OneOrMany<f64>,
    /// Damping after two-qubit gates when it differs from `dp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dp_two_qubit: Option<f64>,
    #[serde(default = "zero")]
    pub coherent_theta: OneOrMany<f64>,
    #[serde(default = "zero")]
    pub coherent_phi: OneOrMany<f64>,
    /// Sets `coherent_phi = ratio · coherent_theta` at every sweep point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherent_phi_ratio: Option<f64>,
    #[serde(default = "zero")]
    pub rotation_overshoot: OneOrMany<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default = "default_l_max")]
    pub l_max: OneOrMany<usize>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Use exact probabilities instead of sampled shots.
    #[serde(default)]
    pub exact: bool,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub randomizations: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sv_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rep: Option<usize>,
    #[serde(default)]
    pub noisy_preparation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary_alarm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
    #[serde(default = "yes")]
    pub oracle: bool,
}

fn yes() -> bool {
    true
}

/// One point of the sweep, ready to run.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub id: String,
    pub sweep_value: Option<f64>,
    pub experiment: Experiment,
}

fn field(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{name}: {}", reason.into()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("csb-out").join(&self.name))
    }

    fn sweepables(&self) -> [(&'static str, &OneOrMany<f64>); 4] {
        [
            ("dp", &self.dp),
            ("coherent_theta", &self.coherent_theta),
            ("coherent_phi", &self.coherent_phi),
            ("rotation_overshoot", &self.rotation_overshoot),
        ]
    }

    /// Name of the swept parameter, if any.
    pub fn sweep_axis(&self) -> Option<&'static str> {
        self.sweepables().iter().find(|(_, v)| v.is_list()).map(|(n, _)| *n)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(field("name", "must be a non-empty file-name-safe string"));
        }
        let lists: Vec<&str> = self
            .sweepables()
            .iter()
            .filter(|(_, v)| v.is_list())
            .map(|(n, _)| *n)
            .collect();
        if lists.len() > 1 {
            return Err(field(
                lists[1],
                format!("only one sweep axis allowed, `{}` is already a list", lists[0]),
            ));
        }
        let points = self.sweep_len();
        for (name, v) in self.sweepables() {
            if let OneOrMany::Many(vals) = v {
                if vals.is_empty() {
                    return Err(field(name, "sweep list is empty"));
                }
            }
        }
        if let OneOrMany::Many(v) = &self.l_max {
            if v.len() != points && v.len() != 1 {
                return Err(field("l_max", format!("{} values for {points} sweep points", v.len())));
            }
        }
        if self.coherent_phi_ratio.is_some() && self.coherent_phi != zero() {
            return Err(field("coherent_phi_ratio", "conflicts with an explicit coherent_phi"));
        }
        for (name, v) in [
            ("repetitions", Some(self.repetitions)),
            ("pairs", self.pairs),
            ("randomizations", self.randomizations),
            ("n_rep", self.n_rep),
            ("max_modes", self.max_modes),
        ] {
            if v == Some(0) {
                return Err(field(name, "must be positive"));
            }
        }
        if self.shots == 0 {
            return Err(field("shots", "must be positive"));
        }
        let needs = |ok: bool, name: &str, what: &str| if ok { Ok(()) } else { Err(field(name, what.to_string())) };
        match self.target {
            TargetName::Rz => needs(self.theta.is_some(), "theta", "required for an rz target")?,
            TargetName::Fsim => {
                needs(self.theta.is_some(), "theta", "required for an fsim target")?;
                needs(self.phi.is_some(), "phi", "required for an fsim target")?;
            }
            TargetName::Toffoli => {}
            TargetName::Ising => {
                needs(self.dt.is_some(), "dt", "required for an ising target")?;
                needs(
                    self.qubits.is_some() || self.h.is_some(),
                    "qubits",
                    "required unless h and j are given",
                )?;
                needs(
                    self.h.is_some() == self.j.is_some(),
                    "j",
                    "h and j must be given together",
                )?;
            }
        }
        if self.lift && self.target != TargetName::Toffoli {
            return Err(field("lift", "only defined for a toffoli target"));
        }
        Ok(())
    }

    fn sweep_len(&self) -> usize {
        self.sweepables()
            .iter()
            .map(|(_, v)| v.values().len())
            .max()
            .unwrap_or(1)
    }

    pub fn target_spec(&self) -> Result<TargetSpec, CliError> {
        Ok(match self.target {
            TargetName::Rz => TargetSpec::Rz {
                theta: self.theta.unwrap_or_default(),
            },
            TargetName::Fsim => TargetSpec::Fsim {
                theta: self.theta.unwrap_or_default(),
                phi: self.phi.unwrap_or_default(),
            },
            TargetName::Toffoli => TargetSpec::Toffoli,
            TargetName::Ising => {
                let dt = self.dt.unwrap_or_default();
                let params = match (&self.h, &self.j) {
                    (Some(h), Some(j)) => IsingParams::new(h.clone(), j.clone(), dt)?,
                    _ => {
                        let seed = self.ising_seed.unwrap_or(self.seed);
                        let mut rng = stream(seed, &[tag::ISING_PARAMS]);
                        IsingParams::random(self.qubits.unwrap_or_default(), dt, &mut rng)?
                    }
                };
                TargetSpec::Ising(params)
            }
        })
    }

    /// Expands the sweep into runnable experiments with derived seeds.
    pub fn expand(&self) -> Result<Vec<SweepPoint>, CliError> {
        let target = self.target_spec()?;
        let lift = self.lift.then(toffoli_lift_layer);
        let points = self.sweep_len();
        let axis = self.sweep_axis();
        let at = |v: &OneOrMany<f64>, i: usize| {
            let vals = v.values();
            vals[i.min(vals.len() - 1)]
        };
        let l_max = self.l_max.values();
        let defaults = Settings::default();
        (0..points)
            .map(|i| {
                let dp = at(&self.dp, i);
                let theta = at(&self.coherent_theta, i);
                let phi = match self.coherent_phi_ratio {
                    Some(r) => r * theta,
                    None => at(&self.coherent_phi, i),
                };
                let noise = NoiseModel::new(
                    dp,
                    self.dp_two_qubit.unwrap_or(dp),
                    theta,
                    phi,
                    at(&self.rotation_overshoot, i),
                )?;
                let settings = Settings {
                    pairs: self.pairs.unwrap_or(match self.target {
                        TargetName::Rz => 2,
                        TargetName::Fsim => 6,
                        _ => 10,
                    }),
                    l_max: l_max[i.min(l_max.len() - 1)],
                    shots: (!self.exact).then_some(self.shots),
                    repetitions: self.repetitions,
                    randomizations: self.randomizations,
                    seed: derive_seed(self.seed, &[tag::SWEEP, i as u64]),
                    max_modes: self.max_modes.unwrap_or(defaults.max_modes),
                    sv_threshold: self.sv_threshold.unwrap_or(defaults.sv_threshold),
                    n_rep: self.n_rep.unwrap_or(1),
                    noisy_preparation: self.noisy_preparation,
                    unitary_alarm: self.unitary_alarm.unwrap_or(defaults.unitary_alarm),
                    compute_oracle: self.oracle,
                    min_gap: self.min_gap,
                };
                settings.validate()?;
                let sweep_value = axis.map(|a| match a {
                    "dp" => dp,
                    "coherent_theta" => theta,
                    "coherent_phi" => phi,
                    _ => at(&self.rotation_overshoot, i),
                });
                Ok(SweepPoint {
                    id: format!("{}-{i}", self.name),
                    sweep_value,
                    experiment: Experiment {
                        target: target.clone(),
                        lift: lift.clone(),
                        noise,
                        settings,
                    },
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
seed = 1
target = "rz"
theta = 0.7853981633974483
dp = [0.001, 0.01]
l_max = [100, 50]
rotation_overshoot = -0.01
"#;

    #[test]
    fn sweep_expands_with_matching_l_max() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.sweep_axis(), Some("dp"));
        let pts = cfg.expand().unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].experiment.settings.l_max, 100);
        assert_eq!(pts[1].experiment.settings.l_max, 50);
        assert_eq!(pts[1].sweep_value, Some(0.01));
        assert_eq!(pts[0].experiment.settings.pairs, 2);
        assert_ne!(pts[0].experiment.settings.seed, pts[1].experiment.settings.seed);
        assert_eq!(pts[0].experiment.noise.rotation_overshoot, -0.01);
    }

    #[test]
    fn unknown_field_is_rejected_with_its_name() {
        let err = ExperimentConfig::from_toml(&format!("{MINIMAL}\nshotz = 3\n")).unwrap_err();
        assert!(err.to_string().contains("shotz"), "{err}");
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace("seed = 1\n", "");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn two_sweep_axes_are_rejected() {
        let text = MINIMAL.replace("rotation_overshoot = -0.01", "rotation_overshoot = [-0.01, 0.0]");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("rotation_overshoot"), "{err}");
    }

    #[test]
    fn non_positive_counts_are_rejected() {
        let err = ExperimentConfig::from_toml(&format!("{MINIMAL}\nrepetitions = 0\n")).unwrap_err();
        assert!(err.to_string().contains("repetitions"), "{err}");
        let err = ExperimentConfig::from_toml(&format!("{MINIMAL}\nshots = 0\n")).unwrap_err();
        assert!(err.to_string().contains("shots"), "{err}");
    }

    #[test]
    fn phi_ratio_follows_theta() {
        let text = r#"
name = "f"
seed = 3
target = "fsim"
theta = 0.785
phi = 1.57
coherent_theta = [0.01, 0.02]
coherent_phi_ratio = 0.5
"#;
        let pts = ExperimentConfig::from_toml(text).unwrap().expand().unwrap();
        assert_eq!(pts[1].experiment.noise.coherent_phi, 0.01);
        assert_eq!(pts[1].sweep_value, Some(0.02));
    }

    #[test]
    fn seeded_ising_draw_is_reproducible() {
        let text = r#"
name = "i"
seed = 9
target = "ising"
qubits = 4
dt = 0.3
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.target_spec().unwrap(), cfg.target_spec().unwrap());
        let err = ExperimentConfig::from_toml(&text.replace("dt = 0.3\n", "")).unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
    }
}
