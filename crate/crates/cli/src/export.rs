//! OpenQASM export of every benchmarking circuit of a configuration.
//!
//! The circuit for spec `k` at length `L` is `prep · target^L · prep⁻¹`
//! followed by a full measurement; the all-zero outcome frequency is the
//! signal value. Randomized copies follow the same seed streams as the
//! simulated runs of repetition 0.

use std::fs;
use std::path::{Path, PathBuf};

use csb_core::circuits::qasm::to_qasm;
use csb_core::circuits::{randomize_once, Circuit};
use csb_core::protocol::{sample_all_specs, InitialStateSpec, Prepared};
use csb_core::rng::{derive_seed, stream, tag};

use crate::config::ExperimentConfig;
use crate::{CliError, Result};

pub fn file_name(spec: usize, length: usize, copy: usize) -> String {
    format!("spec{spec}_L{length}_r{copy}.qasm")
}

/// Benchmarking circuits of one spec for `L = 0..=l_max`, one list per
/// randomized copy (a single copy without randomized compiling).
pub fn spec_circuits(p: &Prepared, spec: &InitialStateSpec, index: usize) -> Result<Vec<Vec<Circuit>>> {
    let s = &p.experiment.settings;
    let unprep = spec.preparation.inverse();
    let seed = derive_seed(s.seed, &[tag::REPETITION, 0, index as u64]);
    let copies = s.randomizations.unwrap_or(1);
    (0..copies)
        .map(|r| {
            let mut rng = stream(seed, &[tag::RANDOMIZE, r as u64]);
            let mut body = spec.preparation.clone();
            let mut out = Vec::with_capacity(s.l_max + 1);
            for l in 0..=s.l_max {
                out.push(body.then(&unprep)?);
                if l < s.l_max {
                    let step = match s.randomizations {
                        Some(_) => randomize_once(&p.circuit, &mut rng)?,
                        None => p.circuit.clone(),
                    };
                    body = body.then(&step)?;
                }
            }
            Ok(out)
        })
        .collect()
}

/// Writes `<output>/circuits/<id>/spec{K}_L{L}_r{copy}.qasm` for every sweep
/// point and returns the written paths in order.
pub fn export_circuits(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    export_to(cfg, &cfg.output_dir())
}

pub fn export_to(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for point in cfg.expand()? {
        let p = point.experiment.prepare()?;
        let specs = sample_all_specs(&p)?;
        let dir = out.join("circuits").join(&point.id);
        fs::create_dir_all(&dir).map_err(|e| CliError::Io {
            path: dir.clone(),
            source: e,
        })?;
        for (k, spec) in specs[0].iter().enumerate() {
            for (r, lengths) in spec_circuits(&p, spec, k)?.into_iter().enumerate() {
                for (l, circ) in lengths.iter().enumerate() {
                    let path = dir.join(file_name(k, l, r));
                    fs::write(&path, to_qasm(circ, true)).map_err(|e| CliError::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}
