//! Command line front end: named presets and config files in, regret
//! traces as CSV out.

use clap::{Parser, Subcommand};
use sidebandit::cli::{
    generate_dataset_file, resolve_config, run_to_csv, validate, CliError, CliOverrides,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sidebandit",
    version,
    about = "Linear bandit experiments with partially observed offline data as side information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write regret traces as CSV.
    Run {
        /// TOML config file; fields override the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named preset: fig2a, fig2b or fig2c.
        #[arg(long)]
        preset: Option<String>,
        /// Output CSV path (default from config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 = all cores, 1 = serial.
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed for the environment and offline log.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config and report problems without running anything.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
    },
    /// Generate the offline log alone and write it as a binary dataset file.
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            preset,
            out,
            threads,
            seed,
        } => {
            let overrides = CliOverrides {
                preset,
                out,
                threads,
                master_seed: seed,
            };
            let cfg = resolve_config(config.as_deref(), &overrides)?;
            let summary = run_to_csv(&cfg)?;
            println!(
                "wrote {} rows from {} cells to {}",
                summary.rows,
                summary.cells,
                summary.output_path.display()
            );
            Ok(())
        }
        Command::Validate { config, preset } => {
            let overrides = CliOverrides {
                preset,
                ..CliOverrides::default()
            };
            let cfg = resolve_config(config.as_deref(), &overrides)?;
            let issues = validate(&cfg);
            if issues.is_empty() {
                println!(
                    "config ok: {} cells",
                    sidebandit::cli::plan_cells(&cfg).len()
                );
                Ok(())
            } else {
                for issue in &issues {
                    eprintln!("problem: {issue}");
                }
                Err(CliError::Config {
                    what: format!("{} problem(s)", issues.len()),
                })
            }
        }
        Command::GenData {
            config,
            preset,
            out,
            seed,
        } => {
            let overrides = CliOverrides {
                preset,
                master_seed: seed,
                ..CliOverrides::default()
            };
            let cfg = resolve_config(config.as_deref(), &overrides)?;
            let summary = generate_dataset_file(&cfg, &out)?;
            println!(
                "wrote {} offline rows to {}",
                summary.rows,
                summary.output_path.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
