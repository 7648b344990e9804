use std::path::{Path, PathBuf};
use std::process::ExitCode;

use active_ris::experiments::{
    emit_csv, read_config, run_experiment, ConfigFile, ExperimentSpec, Scale, EXPERIMENTS,
};
use active_ris::Error;
use clap::{Parser, Subcommand, ValueEnum};

/// Output directory for relative output paths.
const OUT_DIR_VAR: &str = "RIS_SIM_OUT_DIR";

/// Exit code for a run that produced a table with failed sweep points.
const PARTIAL_EXIT: u8 = 3;

#[derive(Parser)]
#[command(name = "ris-sim", version, about = "Amplifying RIS link simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
    },
    /// List registered experiments.
    ListExperiments,
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        experiment: Option<String>,
    },
}

fn resolve(
    experiment: Option<&str>,
    config: Option<&Path>,
    scale: Option<ScaleArg>,
) -> Result<ExperimentSpec, Error> {
    let mut file = match config {
        Some(path) => read_config(path)?,
        None => ConfigFile::default(),
    };
    if let Some(s) = scale {
        file.scale = Some(match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        });
    }
    ExperimentSpec::from_config(file, experiment)
}

fn output_path(spec: &ExperimentSpec, out: Option<PathBuf>) -> PathBuf {
    let path = out
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.id)));
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path,
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::ListExperiments => {
            for e in EXPERIMENTS {
                println!("{:<18} {}", e.id, e.description);
            }
            Ok(0)
        }
        Command::Validate { config, experiment } => {
            let spec = resolve(experiment.as_deref(), Some(&config), None)?;
            println!("{}: ok ({}, {} trials, seed {})", config.display(), spec.id, spec.trials, spec.seed);
            Ok(0)
        }
        Command::Run { experiment, config, seed, trials, out, scale } => {
            let mut spec = resolve(experiment.as_deref(), config.as_deref(), scale)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            spec.validate()?;
            let path = output_path(&spec, out);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let table = run_experiment(&spec)?;
            emit_csv(&table, &path)?;
            eprintln!(
                "{}: {} rows to {} in {:.2} s",
                spec.id,
                table.rows.len(),
                path.display(),
                table.wall_time
            );
            for (row, msg) in &table.failures {
                eprintln!("row {row} failed: {msg}");
            }
            Ok(if table.failures.is_empty() { 0 } else { PARTIAL_EXIT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
