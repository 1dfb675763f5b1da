//! Sweep execution, persistence and re-analysis.

use std::fmt::Write as _;
use std::path::Path;

use csb_core::protocol::{analyze, run_prepared, specs_from_labels, Flag, RunOutput};

use crate::config::{ExperimentConfig, SweepPoint};
use crate::output::{
    ensure_dir, read_json, read_signals, records_from_rows, signal_rows, write_json, write_signals, ExperimentRecord,
    RunDocument, SignalRow, StoredRun, PLOT_FILE, REPORT_FILE, SIGNALS_FILE,
};
use crate::plot::plot_report;
use crate::{CliError, Result};

/// Runs every sweep point in order. `progress` sees each finished point.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(&SweepPoint, &RunOutput),
) -> Result<Vec<(SweepPoint, RunOutput)>> {
    cfg.expand()?
        .into_iter()
        .map(|point| {
            let p = point.experiment.prepare()?;
            let out = run_prepared(&p)?;
            progress(&point, &out);
            Ok((point, out))
        })
        .collect()
}

pub fn document(cfg: &ExperimentConfig, results: &[(SweepPoint, RunOutput)]) -> RunDocument {
    RunDocument {
        config: cfg.clone(),
        sweep_axis: cfg.sweep_axis().map(str::to_string),
        experiments: results
            .iter()
            .map(|(pt, out)| ExperimentRecord {
                id: pt.id.clone(),
                sweep_value: pt.sweep_value,
                target: pt.experiment.target.clone(),
                noise: pt.experiment.noise.clone(),
                settings: pt.experiment.settings.clone(),
                specs: out.specs.clone(),
                report: out.report.clone(),
            })
            .collect(),
    }
}

/// Writes `signals.csv`, `report.json` and `plot.svg` into `dir`.
pub fn write_outputs(dir: &Path, doc: &RunDocument, rows: &[SignalRow]) -> Result<()> {
    ensure_dir(dir)?;
    write_signals(&dir.join(SIGNALS_FILE), rows)?;
    let report = dir.join(REPORT_FILE);
    write_json(&report, doc)?;
    plot_report(&report, &dir.join(PLOT_FILE))
}

/// Runs a configuration and persists its outputs in `dir`.
pub fn run_config(
    cfg: &ExperimentConfig,
    dir: &Path,
    progress: impl FnMut(&SweepPoint, &RunOutput),
) -> Result<RunDocument> {
    let results = run_sweep(cfg, progress)?;
    let rows: Vec<SignalRow> = results
        .iter()
        .flat_map(|(pt, out)| signal_rows(&pt.id, &out.signals))
        .collect();
    let doc = document(cfg, &results);
    write_outputs(dir, &doc, &rows)?;
    Ok(doc)
}

/// Re-analyzes the signals stored in `dir` and rewrites its report and plot.
pub fn analyze_dir(dir: &Path) -> Result<RunDocument> {
    let stored: StoredRun = read_json(&dir.join(REPORT_FILE))?;
    let rows = read_signals(&dir.join(SIGNALS_FILE))?;
    let mut by_id = records_from_rows(&rows)?;
    let points = stored.config.expand()?;
    let mut results = Vec::with_capacity(points.len());
    for point in points {
        let labels = &stored
            .experiments
            .iter()
            .find(|e| e.id == point.id)
            .ok_or_else(|| CliError::Config(format!("report has no experiment `{}`", point.id)))?
            .specs;
        let signals = by_id
            .remove(&point.id)
            .ok_or_else(|| CliError::Config(format!("signals: no rows for `{}`", point.id)))?;
        let p = point.experiment.prepare()?;
        let specs = specs_from_labels(&p, labels)?;
        let report = analyze(&p, &specs, &signals)?;
        results.push((
            point,
            RunOutput {
                report,
                specs: labels.clone(),
                signals,
            },
        ));
    }
    let doc = document(&stored.config, &results);
    let report = dir.join(REPORT_FILE);
    write_json(&report, &doc)?;
    plot_report(&report, &dir.join(PLOT_FILE))?;
    Ok(doc)
}

/// Flags that fail a `--strict` run, per experiment id.
pub fn unreliable(doc: &RunDocument) -> Vec<(String, Vec<Flag>)> {
    doc.experiments
        .iter()
        .map(|e| (e.id.clone(), e.report.unreliable_flags()))
        .filter(|(_, f)| !f.is_empty())
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

/// Human-readable summary table.
pub fn summary(doc: &RunDocument) -> String {
    let mut s = String::new();
    let axis = doc.sweep_axis.as_deref().unwrap_or("point");
    let _ = writeln!(
        s,
        "{:<16} {:>10} {:>22} {:>22} {:>10} {:>10}  flags",
        "id", axis, "F", "F_sto", "F exact", "Fsto exact"
    );
    for e in &doc.experiments {
        let r = &e.report;
        let flags: Vec<String> = r
            .flags
            .iter()
            .map(|f| {
                serde_json::to_value(f)
                    .map(|v| v.as_str().unwrap_or_default().to_string())
                    .unwrap_or_default()
            })
            .collect();
        let _ = writeln!(
            s,
            "{:<16} {:>10} {:>22} {:>22} {:>10} {:>10}  {}",
            e.id,
            e.sweep_value.map_or_else(|| "-".into(), |v| format!("{v:.3e}")),
            format!("{:.6} ± {:.6}", r.process_fidelity.mean, r.process_fidelity.std),
            format!("{:.6} ± {:.6}", r.stochastic_fidelity.mean, r.stochastic_fidelity.std),
            fmt_opt(r.oracle.as_ref().map(|o| o.process_fidelity)),
            fmt_opt(r.oracle.as_ref().map(|o| o.stochastic_fidelity)),
            flags.join(",")
        );
        for (k, v) in &r.unitary {
            let _ = writeln!(s, "{:<16} {k} = {:.3e} ± {:.1e}", "", v.mean, v.std);
        }
    }
    s
}
