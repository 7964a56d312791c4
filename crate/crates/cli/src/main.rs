use clap::{Parser, Subcommand};
use nelson_lab::config::RunConfig;
use nelson_lab::{default_threads, run, Experiment};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nelson-lab", version, about = "Dressed-particle dynamics, radiation and Fock-space experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; outputs are reproducible for a fixed count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Pair potential against the Coulomb law.
    Potentials,
    /// Effective classical flow, optionally over a Wigner ensemble.
    Trajectories,
    /// Radiated energy and power on the oscillator preset.
    Radiation,
    /// Single-mode van Hove checks: ground energy and dressing residuals.
    Spectrum,
    /// Dressed and bare leakage on the one-dimensional toy model.
    Adiabatic,
    /// Coupled particle and classical field simulation.
    ClassicalField,
    /// Deviation of the coupled simulation from the effective flows across epsilon.
    Scaling,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Potentials => Experiment::Potentials,
            Command::Trajectories => Experiment::Trajectories,
            Command::Radiation => Experiment::Radiation,
            Command::Spectrum => Experiment::Spectrum,
            Command::Adiabatic => Experiment::Adiabatic,
            Command::ClassicalField => Experiment::ClassicalField,
            Command::Scaling => Experiment::Scaling,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        let threads = cli.threads.or(cfg.threads).unwrap_or_else(default_threads);
        let manifest = run(cli.command.into(), &cfg, &cli.out, threads)?;
        println!("{}", serde_json::to_string_pretty(&manifest["summary"])?);
        anyhow::Ok(())
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
