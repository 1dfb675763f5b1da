use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csb_cli::config::ExperimentConfig;
use csb_cli::output::PLOT_FILE;
use csb_cli::{driver, export, plot, CliError};

#[derive(Debug, Parser)]
#[command(name = "csb", version, about = "Channel spectrum benchmarking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a configured experiment and write signals, report and plot.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Exit nonzero when any estimate carries an unreliability flag.
        #[arg(long)]
        strict: bool,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Redo the analysis on the signals stored in an output directory.
    Analyze {
        #[arg(long)]
        signals: PathBuf,
    },
    /// Write every benchmarking circuit of a configuration as OpenQASM.
    Export {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a stored report as an SVG plot next to it.
    Plot {
        #[arg(long)]
        report: PathBuf,
    },
}

fn strict_status(doc: &csb_cli::output::RunDocument) -> ExitCode {
    let bad = driver::unreliable(doc);
    if bad.is_empty() {
        return ExitCode::SUCCESS;
    }
    for (id, flags) in bad {
        for f in flags {
            eprintln!("{id}: {}", f.advice());
        }
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::Run {
            config,
            strict,
            workers,
        } => {
            if let Some(n) = workers {
                if n == 0 {
                    return Err(CliError::Config("workers: must be positive".into()));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Config(format!("workers: {e}")))?;
            }
            let cfg = ExperimentConfig::load(&config)?;
            let dir = cfg.output_dir();
            let doc = driver::run_config(&cfg, &dir, |pt, out| {
                eprintln!("{}: F = {:.6}", pt.id, out.report.process_fidelity.mean);
            })?;
            print!("{}", driver::summary(&doc));
            println!("wrote {}", dir.display());
            Ok(if strict { strict_status(&doc) } else { ExitCode::SUCCESS })
        }
        Command::Analyze { signals } => {
            let doc = driver::analyze_dir(&signals)?;
            print!("{}", driver::summary(&doc));
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let files = export::export_circuits(&cfg)?;
            println!(
                "wrote {} circuits under {}",
                files.len(),
                cfg.output_dir().join("circuits").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { report } => {
            let out = report.with_file_name(PLOT_FILE);
            plot::plot_report(&report, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
