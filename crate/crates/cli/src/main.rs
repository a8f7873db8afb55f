use std::path::PathBuf;
use std::process::ExitCode;

use alphaeta_cli::config::{apply_override, load_table, Format};
use alphaeta_cli::output::{manifest_name, unix_ms, RunManifest, Sink};
use alphaeta_cli::{commands, CliError, ExperimentConfig, Subcommand};
use clap::Parser;

/// Simulator and attack lab for the αη coherent-state cipher.
#[derive(Parser, Debug)]
#[command(name = "alphaeta", version)]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// TOML or JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for all random streams.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// `section.key=value`, applied after the config file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut table = match &args.config {
        Some(path) => load_table(path)?,
        None => toml::Table::new(),
    };
    for o in &args.overrides {
        apply_override(&mut table, o)?;
    }
    let mut config = ExperimentConfig::from_table(table)?;
    if let Some(seed) = args.seed {
        config.run.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        config.run.trials = trials;
    }
    if let Some(out) = &args.out {
        config.run.out = out.clone();
    }
    if let Some(format) = args.format {
        config.run.format = format;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &Args) -> Result<(), CliError> {
    let config = load(args)?;
    let started = unix_ms();
    let mut sink = Sink::create(&config.run.out)?;
    commands::run(args.subcommand, &config, &mut sink)?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        subcommand: args.subcommand.name().to_owned(),
        master_seed: config.run.master_seed,
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        config: config.clone(),
        files: sink.files().to_vec(),
    };
    sink.json(&manifest_name(args.subcommand.name()), &manifest)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alphaeta {}: {e}", args.subcommand.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
