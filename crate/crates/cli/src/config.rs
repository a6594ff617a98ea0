//! Resolved run configuration: config file first, then flags.

use anyhow::{anyhow, Context};
use geoflow::exponential::DEFAULT_T_GRID;
use geoflow::flows::FlowConfig;
use geoflow::verify::VerifySettings;
use geoflow::Tolerances;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub model: String,
    pub suite: Option<String>,
    pub hamiltonian: String,
    pub chart: usize,
    pub x: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub t: f64,
    pub t_grid: Vec<f64>,
    /// Ladder for convergence studies; empty means the default ladder.
    pub steps: Vec<f64>,
    pub seed: u64,
    pub states: usize,
    pub covectors: usize,
    pub samples: usize,
    pub flow: FlowConfig,
    pub tolerances: Tolerances,
    /// Not part of the embedded copy: the same run written elsewhere must
    /// produce the same bytes.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let v = VerifySettings::default();
        RunConfig {
            command: String::new(),
            model: "heisenberg".into(),
            suite: None,
            hamiltonian: "h".into(),
            chart: 0,
            x: None,
            p: None,
            v: None,
            t: 1.0,
            t_grid: DEFAULT_T_GRID.to_vec(),
            steps: Vec::new(),
            seed: v.seed,
            states: v.states,
            covectors: v.covectors,
            samples: v.samples,
            flow: FlowConfig::default(),
            tolerances: Tolerances::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.flow.validate()?;
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(anyhow!("--t must be finite and non-negative"));
        }
        if self.p.is_some() && self.v.is_some() {
            return Err(anyhow!("give at most one of --p and --v"));
        }
        Ok(())
    }

    pub fn verify_settings(&self) -> VerifySettings {
        let d = VerifySettings::default();
        VerifySettings {
            seed: self.seed,
            states: self.states,
            covectors: self.covectors,
            samples: self.samples,
            t_grid: self.t_grid.clone(),
            ladder: if self.steps.is_empty() { d.ladder } else { self.steps.clone() },
            flow: self.flow.clone(),
            tolerances: self.tolerances.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str("model = \"hopf_s3\"\nseed = 3\n[flow]\nstep = 0.002\n").unwrap();
        assert_eq!(c.model, "hopf_s3");
        assert_eq!(c.seed, 3);
        assert_eq!(c.flow.step, 0.002);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("modle = \"x\"").is_err());
    }
}
