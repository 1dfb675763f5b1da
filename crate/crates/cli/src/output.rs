//! On-disk formats: `signals.csv`, `report.json` and their readers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use csb_core::circuits::TargetSpec;
use csb_core::noise::NoiseModel;
use csb_core::pencil::Signal;
use csb_core::protocol::{CsbReport, Settings, SignalRecord, SpecLabel};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{CliError, Result};

pub const SIGNALS_FILE: &str = "signals.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "plot.svg";

/// One row of `signals.csv`: the measured probability of one circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub experiment_id: String,
    pub repetition: usize,
    pub spec_index: usize,
    #[serde(rename = "L")]
    pub length: usize,
    pub probability: f64,
    /// Shots behind the probability; 0 for exact probabilities.
    pub shots: u64,
}

/// Everything known about one sweep point after analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub id: String,
    pub sweep_value: Option<f64>,
    pub target: TargetSpec,
    pub noise: NoiseModel,
    pub settings: Settings,
    /// Specs of every repetition, in `spec_index` order.
    pub specs: Vec<Vec<SpecLabel>>,
    pub report: CsbReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub config: ExperimentConfig,
    pub sweep_axis: Option<String>,
    pub experiments: Vec<ExperimentRecord>,
}

/// The parts of a stored report needed to redo the analysis.
#[derive(Debug, Clone, Deserialize)]
pub struct StoredRun {
    pub config: ExperimentConfig,
    pub experiments: Vec<StoredExperiment>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StoredExperiment {
    pub id: String,
    pub specs: Vec<Vec<SpecLabel>>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io(dir))
}

pub fn signal_rows(id: &str, signals: &[SignalRecord]) -> Vec<SignalRow> {
    signals
        .iter()
        .flat_map(|rec| {
            rec.signal.values().iter().enumerate().map(move |(l, &p)| SignalRow {
                experiment_id: id.to_string(),
                repetition: rec.repetition,
                spec_index: rec.spec_index,
                length: l,
                probability: p,
                shots: rec.signal.shots(),
            })
        })
        .collect()
}

pub fn write_signals(path: &Path, rows: &[SignalRow]) -> Result<()> {
    let csv_err = |e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io(path))
}

pub fn read_signals(path: &Path) -> Result<Vec<SignalRow>> {
    let csv_err = |e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

/// Reassembles signal records per experiment id.
pub fn records_from_rows(rows: &[SignalRow]) -> Result<BTreeMap<String, Vec<SignalRecord>>> {
    let mut grouped: BTreeMap<(String, usize, usize), Vec<&SignalRow>> = BTreeMap::new();
    for r in rows {
        grouped
            .entry((r.experiment_id.clone(), r.repetition, r.spec_index))
            .or_default()
            .push(r);
    }
    let mut out: BTreeMap<String, Vec<SignalRecord>> = BTreeMap::new();
    for ((id, repetition, spec_index), mut pts) in grouped {
        pts.sort_by_key(|r| r.length);
        if pts.iter().enumerate().any(|(l, r)| r.length != l) {
            return Err(CliError::Config(format!(
                "signals: {id} repetition {repetition} spec {spec_index} has gaps in L"
            )));
        }
        let shots = pts[0].shots;
        let signal = Signal::new(pts.iter().map(|r| r.probability).collect(), shots)?;
        out.entry(id).or_default().push(SignalRecord {
            repetition,
            spec_index,
            signal,
        });
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}
