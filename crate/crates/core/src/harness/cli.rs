//! Command-line interface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::ExperimentConfig;
use super::experiment::{run_experiment_detailed, run_tau_sweep_detailed, ExperimentOutput};
use super::output::{write_records, write_trials};
use super::validate::run_checks;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rsma-ris", version, about = "Monte-Carlo simulator of malicious-RIS attacks on RSMA and SDMA downlinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep transmit power at the configured CSI error levels.
    Run(RunArgs),
    /// Sweep transmit power over the grid `sweep.bs_tau x sweep.attacker_tau`.
    SweepTau(RunArgs),
    /// Run the built-in invariant checks; exits nonzero if any fails.
    Validate(ValidateArgs),
    /// Print the reference configuration.
    DemoConfig(DemoArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration; the reference configuration if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Results CSV; standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `trials`.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads; all available cores if omitted.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write every trial's rates to this CSV.
    #[arg(long)]
    pub dump_trials: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Destination file; standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("`--threads` must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

fn write_outputs(args: &RunArgs, outputs: &[ExperimentOutput]) -> Result<()> {
    let records: Vec<_> = outputs.iter().flat_map(|o| o.records.iter().cloned()).collect();
    let mut out = open_output(args.output.as_deref())?;
    write_records(&mut out, &records)?;
    out.flush()?;
    if let Some(path) = &args.dump_trials {
        let trials: Vec<_> = outputs.iter().flat_map(|o| o.trial_records()).collect();
        let mut dump = open_output(Some(path))?;
        write_trials(&mut dump, &trials)?;
        dump.flush()?;
    }
    Ok(())
}

fn run(args: &RunArgs, sweep: bool) -> Result<()> {
    let config = load_config(args)?;
    let pool = thread_pool(args.threads)?;
    log::info!(
        "{} trials, {} threads, seed {}",
        config.trials,
        pool.current_num_threads(),
        config.seed
    );
    let outputs = pool.install(|| {
        if sweep {
            run_tau_sweep_detailed(&config)
        } else {
            run_experiment_detailed(&config).map(|o| vec![o])
        }
    })?;
    write_outputs(args, &outputs)
}

fn validate(args: &ValidateArgs) -> Result<bool> {
    let pool = thread_pool(args.threads)?;
    let checks = pool.install(|| run_checks(args.seed));
    let mut out = io::stdout().lock();
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            writeln!(out, "{verdict} {}", c.name)?;
        } else {
            writeln!(out, "{verdict} {} ({})", c.name, c.detail)?;
        }
    }
    Ok(checks.iter().all(|c| c.passed))
}

/// Runs the parsed command. `Ok(false)` means a check failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Run(args) => run(args, false).map(|_| true),
        Command::SweepTau(args) => run(args, true).map(|_| true),
        Command::Validate(args) => validate(args),
        Command::DemoConfig(args) => {
            let mut out = open_output(args.output.as_deref())?;
            out.write_all(ExperimentConfig::reference().to_toml_string().as_bytes())?;
            out.flush()?;
            Ok(true)
        }
    }
}
