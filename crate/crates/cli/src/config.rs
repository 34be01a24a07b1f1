//! Experiment configuration: TOML file plus command-line overrides.

use serde::{Deserialize, Serialize};

use crate::CliError;

/// How the homogenized coefficient entering the continuum reference is
/// chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaMode {
    /// `sigma_mode = "estimate"`.
    Named(SigmaName),
    /// `sigma_mode = { fixed = 1.0 }`.
    Fixed { fixed: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaName {
    Estimate,
}

impl Default for SigmaMode {
    fn default() -> Self {
        SigmaMode::Named(SigmaName::Estimate)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub alpha: f64,
    pub m_list: Vec<u32>,
    pub k_max: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub tol_solver: f64,
    pub tol_eig: f64,
    pub c_admissibility: f64,
    pub sigma_mode: SigmaMode,
    pub bulk_margin: f64,
    pub out_dir: String,
    pub format: OutputFormat,
    pub svg: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            alpha: 4.0,
            m_list: vec![3, 4],
            k_max: 4,
            trials: 8,
            master_seed: 0,
            tol_solver: 1e-10,
            tol_eig: 1e-8,
            c_admissibility: 1.0,
            sigma_mode: SigmaMode::default(),
            bulk_margin: 0.25,
            out_dir: "out".into(),
            format: OutputFormat::Csv,
            svg: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {path}: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, msg: String| CliError::Config(format!("field `{name}`: {msg}"));
        if !(self.dim == 2 || self.dim == 3) {
            return Err(field("dim", format!("must be 2 or 3, got {}", self.dim)));
        }
        if !(self.alpha > 0.0) {
            return Err(field("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.m_list.is_empty() {
            return Err(field("m_list", "must be nonempty".into()));
        }
        if self.m_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field("m_list", format!("must be strictly ascending, got {:?}", self.m_list)));
        }
        if self.k_max == 0 {
            return Err(field("k_max", "must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(field("trials", "must be >= 1".into()));
        }
        for (name, v) in [("tol_solver", self.tol_solver), ("tol_eig", self.tol_eig)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(field(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.c_admissibility > 0.0) {
            return Err(field(
                "c_admissibility",
                format!("must be positive, got {}", self.c_admissibility),
            ));
        }
        if !(0.0..0.5).contains(&self.bulk_margin) {
            return Err(field(
                "bulk_margin",
                format!("must lie in [0, 0.5), got {}", self.bulk_margin),
            ));
        }
        if let SigmaMode::Fixed { fixed } = self.sigma_mode {
            if !(fixed > 0.0) {
                return Err(field("sigma_mode", format!("fixed value must be positive, got {fixed}")));
            }
        }
        Ok(())
    }
}
