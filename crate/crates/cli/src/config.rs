//! Run configuration. Every section has defaults, so an empty file is a
//! valid configuration; unknown keys are rejected.

use anyhow::{bail, Context, Result};
use nelson_core::model::{FormFactor, SystemConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Infrared cutoff: a number, or a rule "eps^N" giving σ = ε^N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Fixed(f64),
    Rule(String),
}

impl Default for SigmaSpec {
    fn default() -> Self {
        SigmaSpec::Rule("eps^8".into())
    }
}

impl SigmaSpec {
    pub fn resolve(&self, eps: f64) -> Result<f64> {
        match self {
            SigmaSpec::Fixed(s) => Ok(*s),
            SigmaSpec::Rule(r) => {
                let power = r
                    .trim()
                    .strip_prefix("eps^")
                    .and_then(|p| p.trim().parse::<f64>().ok())
                    .with_context(|| format!("system.sigma: expected a number or \"eps^N\", got {r:?}"))?;
                Ok(eps.powf(power))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub charges: Vec<f64>,
    pub lambda: f64,
    pub sigma: SigmaSpec,
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection { charges: vec![1.0, 1.0], lambda: 1.0, sigma: SigmaSpec::default(), epsilon: 0.1, epsilons: vec![0.2, 0.1, 0.05] }
    }
}

impl SystemSection {
    pub fn build(&self, charges: &[f64], eps: f64) -> Result<SystemConfig> {
        let sigma = self.sigma.resolve(eps)?;
        let ff = FormFactor::new(self.lambda, sigma).context("system: lambda/sigma")?;
        SystemConfig::new(charges, ff, eps).context("system")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialsSection {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for PotentialsSection {
    fn default() -> Self {
        PotentialsSection { r_min: 0.1, r_max: 100.0, points: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoriesSection {
    pub positions: Vec<[f64; 3]>,
    pub momenta: Vec<[f64; 3]>,
    pub t_final: f64,
    pub dt: f64,
    /// "leapfrog" or "rk4".
    pub scheme: String,
    pub darwin: bool,
    pub ensemble_size: usize,
    pub position_spread: f64,
    pub momentum_spread: f64,
}

impl Default for TrajectoriesSection {
    fn default() -> Self {
        TrajectoriesSection {
            positions: vec![[0.0, 0.0, 0.0], [1.5, 0.0, 0.0]],
            momenta: vec![[0.0, 0.6, 0.0], [0.0, -0.6, 0.0]],
            t_final: 2.0,
            dt: 0.01,
            scheme: "rk4".into(),
            darwin: true,
            ensemble_size: 1,
            position_spread: 0.0,
            momentum_spread: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiationSection {
    pub amplitude: f64,
    pub omega: f64,
    pub dt: f64,
    pub t_final: f64,
    pub samples: usize,
    pub radial_panels: usize,
    pub nodes_per_panel: usize,
    pub n_theta: usize,
    pub dipole: bool,
    /// Window [average_from, average_to] for the time-averaged powers.
    pub average_from: f64,
    pub average_to: f64,
    pub average_samples: usize,
}

impl Default for RadiationSection {
    fn default() -> Self {
        RadiationSection {
            amplitude: 0.5,
            omega: 1.0,
            dt: 0.01,
            t_final: 4.0 * std::f64::consts::PI,
            samples: 33,
            radial_panels: 32,
            nodes_per_panel: 8,
            n_theta: 2,
            dipole: true,
            average_from: 2.0 * std::f64::consts::PI,
            average_to: 4.0 * std::f64::consts::PI,
            average_samples: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub n_max: usize,
    pub omega: f64,
    /// Values of |z|/ω to scan.
    pub couplings: Vec<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { n_max: 8, omega: 1.0, couplings: vec![0.0, 0.25, 0.5, 0.75, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdiabaticSection {
    pub length: f64,
    pub n_x: usize,
    pub charge: f64,
    pub modes: usize,
    pub n_max: usize,
    pub m_max: usize,
    pub dim_budget: usize,
    pub epsilons: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub times: Vec<f64>,
    pub sector: usize,
    pub packet_center: f64,
    pub packet_width: f64,
    pub packet_momentum: f64,
    pub tolerance: f64,
}

impl Default for AdiabaticSection {
    fn default() -> Self {
        AdiabaticSection {
            length: 40.0,
            n_x: 256,
            charge: 1.0,
            modes: 3,
            n_max: 2,
            m_max: 6,
            dim_budget: 1 << 16,
            epsilons: vec![0.2, 0.1, 0.05],
            sigmas: vec![0.1],
            times: vec![0.25, 0.5, 0.75, 1.0],
            sector: 0,
            packet_center: 20.0,
            packet_width: 1.5,
            packet_momentum: 0.5,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalFieldSection {
    pub positions: Vec<[f64; 3]>,
    pub velocities: Vec<[f64; 3]>,
    pub t_macro: f64,
    pub dt_micro: f64,
    /// "co_moving" or "bare".
    pub initial_field: String,
    pub radial_panels: usize,
    pub nodes_per_panel: usize,
    pub n_theta: usize,
    pub drift_tolerance: f64,
}

impl Default for ClassicalFieldSection {
    fn default() -> Self {
        ClassicalFieldSection {
            positions: vec![[0.0, 0.0, 0.0], [1.5, 0.0, 0.0]],
            velocities: vec![[0.0, 0.6, 0.0], [0.0, -0.6, 0.0]],
            t_macro: 1.0,
            dt_micro: 0.125,
            initial_field: "co_moving".into(),
            radial_panels: 6,
            nodes_per_panel: 8,
            n_theta: 24,
            drift_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub system: SystemSection,
    pub potentials: PotentialsSection,
    pub trajectories: TrajectoriesSection,
    pub radiation: RadiationSection,
    pub spectrum: SpectrumSection,
    pub adiabatic: AdiabaticSection,
    pub classical_field: ClassicalFieldSection,
}

impl RunConfig {
    /// Reads a TOML configuration, or the `config` object of a JSON run
    /// manifest so that earlier runs can be replayed.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let cfg = v.get("config").cloned().unwrap_or(v);
            return serde_json::from_value(cfg).with_context(|| format!("invalid configuration in {}", path.display()));
        }
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("invalid configuration in {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.charges.is_empty() {
            bail!("system.charges: at least one particle is required");
        }
        if s.epsilons.iter().chain([&s.epsilon]).any(|e| !(*e > 0.0 && *e < 1.0)) {
            bail!("system.epsilon/epsilons: values must lie in (0, 1)");
        }
        s.sigma.resolve(s.epsilon)?;
        let t = &self.trajectories;
        if t.positions.len() != t.momenta.len() {
            bail!("trajectories: positions and momenta need the same length");
        }
        if !matches!(t.scheme.as_str(), "rk4" | "leapfrog") {
            bail!("trajectories.scheme: expected \"rk4\" or \"leapfrog\", got {:?}", t.scheme);
        }
        if !matches!(self.classical_field.initial_field.as_str(), "co_moving" | "bare") {
            bail!("classical_field.initial_field: expected \"co_moving\" or \"bare\"");
        }
        if self.classical_field.positions.len() != self.classical_field.velocities.len() {
            bail!("classical_field: positions and velocities need the same length");
        }
        if self.potentials.points < 2 || !(self.potentials.r_min > 0.0 && self.potentials.r_max > self.potentials.r_min) {
            bail!("potentials: need points >= 2 and 0 < r_min < r_max");
        }
        if self.threads == Some(0) {
            bail!("threads: must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: RunConfig = toml::from_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!((c.system.sigma.resolve(0.1).unwrap() - 1e-8).abs() < 1e-22);
    }

    #[test]
    fn unknown_keys_and_bad_rules_are_rejected() {
        let e = toml::from_str::<RunConfig>("[system]\nlambdaa = 2.0\n").unwrap_err().to_string();
        assert!(e.contains("lambdaa"), "{e}");
        let c: RunConfig = toml::from_str("[system]\nsigma = \"eps**8\"\n").unwrap();
        assert!(c.validate().is_err());
        let c: RunConfig = toml::from_str("[system]\nsigma = 0.01\n").unwrap();
        assert_eq!(c.system.sigma.resolve(0.3).unwrap(), 0.01);
    }
}
