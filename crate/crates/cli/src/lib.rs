//! Batch front end for the laboratory: one subcommand per experiment, a TOML
//! configuration, CSV outputs and a JSON manifest per run.

pub mod config;
pub mod experiments;
pub mod output;

use anyhow::{Context, Result};
use config::RunConfig;
use serde_json::json;
use std::path::Path;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Potentials,
    Trajectories,
    Radiation,
    Spectrum,
    Adiabatic,
    ClassicalField,
    Scaling,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Potentials => "potentials",
            Experiment::Trajectories => "trajectories",
            Experiment::Radiation => "radiation",
            Experiment::Spectrum => "spectrum",
            Experiment::Adiabatic => "adiabatic",
            Experiment::ClassicalField => "classical-field",
            Experiment::Scaling => "scaling",
        }
    }
}

pub fn version_string() -> String {
    let hash = std::process::Command::new("git")
        .args(["-C", env!("CARGO_MANIFEST_DIR"), "rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into());
    format!("v{}-g{}", env!("CARGO_PKG_VERSION"), hash)
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run one experiment on a pool of `threads` workers, write its CSVs and a
/// `manifest.json` into `out`, and return the manifest.
pub fn run(experiment: Experiment, cfg: &RunConfig, out: &Path, threads: usize) -> Result<serde_json::Value> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("building thread pool")?;
    let outcome = pool.install(|| match experiment {
        Experiment::Potentials => experiments::potentials(cfg),
        Experiment::Trajectories => experiments::trajectories(cfg),
        Experiment::Radiation => experiments::radiation(cfg),
        Experiment::Spectrum => experiments::spectrum(cfg),
        Experiment::Adiabatic => experiments::adiabatic(cfg),
        Experiment::ClassicalField => experiments::classical_field(cfg),
        Experiment::Scaling => experiments::scaling(cfg),
    })?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = Vec::new();
    for t in &outcome.tables {
        let path = out.join(&t.name);
        std::fs::write(&path, t.render()).with_context(|| format!("writing {}", path.display()))?;
        files.push(t.name.clone());
    }
    let mut resolved = cfg.clone();
    resolved.threads = Some(threads);
    let manifest = json!({
        "experiment": experiment.name(),
        "version": version_string(),
        "seed": cfg.seed,
        "threads": threads,
        "config": resolved,
        "outputs": files,
        "summary": outcome.summary,
        "metadata": {
            "classical_initial_field": "co-moving equilibrium field unless classical_field.initial_field = \"bare\"",
            "sigma_rule": cfg.system.sigma,
        },
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
