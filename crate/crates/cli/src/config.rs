//! Run configuration: one JSON document.
//!
//! ```json
//! {
//!   "version": 1,
//!   "levy": {
//!     "drift_a": 0.632, "gaussian_q": 0.0, "subordinator": true,
//!     "measure": { "family": "gamma_like", "c": 1.0, "beta": 1.0 },
//!     "lambda_bar": 0.5
//!   },
//!   "volatility": {
//!     "terms": [{ "time": { "kind": "constant", "value": 0.5 },
//!                 "maturity": { "kind": "constant", "value": 1.0 } }],
//!     "lambda_lower": 0.5, "lambda_upper": 0.5,
//!     "x_derivative_bound": 0.0, "time_only": true
//!   },
//!   "initial_curve": { "kind": "exponential_decay", "level": 0.05, "amplitude": 0.03, "rate": 1.0 },
//!   "grid": { "delta": 0.0625, "t_star": 1.0, "t_max": 2.0, "gamma": 1.0 },
//!   "solver": { "tol": 1e-10, "max_iter": 200, "explosion_threshold": 1e6 },
//!   "mc": { "n_paths": 10000, "master_seed": 7, "eps": 0.001 },
//!   "outputs": { "dir": "out", "field_csv": true, "path_json": true }
//! }
//! ```
//!
//! `measure.family` is one of `point_masses` (`masses: [{location, weight}]`),
//! `stable_like` (`c, alpha, y_max`), `gamma_like` (`c, beta`) or
//! `user_density` (`table: [[y, density]]`, optional `tail_exponent` and
//! `certificates`). `kind` of a volatility factor is `constant` (`value`),
//! `affine` (`intercept, slope`) or `exp_decay` (`base, amplitude, rate`).
//! `initial_curve.kind` is `constant` (`level`), `affine`
//! (`intercept, slope`), `exponential_decay` (`level, amplitude, rate`) or
//! `table` (`points: [[x, r0]]`). `levy.lambda_bar` is optional and must
//! equal `volatility.lambda_upper` when present. `solver`, `mc` and
//! `outputs` may be omitted.

use hjmm_core::{
    GridSpec, InitialCurve, LevyModelSpec, ModelConfig, ModelError, SolverSettings, VolatilitySpec,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("unsupported config version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("levy.lambda_bar = {declared} disagrees with volatility.lambda_upper = {actual}")]
    LambdaBar { declared: f64, actual: f64 },
    #[error("mc.eps must be positive and finite, got {0}")]
    Eps(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevySection {
    #[serde(flatten)]
    pub spec: LevyModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSection {
    pub n_paths: u64,
    pub master_seed: u64,
    pub eps: f64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            master_seed: 0,
            eps: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub field_csv: bool,
    #[serde(default = "yes")]
    pub path_json: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            field_csv: true,
            path_json: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    pub levy: LevySection,
    pub volatility: VolatilitySpec,
    pub initial_curve: InitialCurve,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub outputs: OutputSection,
}

impl RunConfig {
    /// Parses and cross-validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = Self::parse(&text).map_err(|(field, message)| ConfigError::Parse {
            path: path.to_path_buf(),
            field,
            message,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Parses without validating; errors carry the offending field path.
    pub fn parse(text: &str) -> Result<Self, (String, String)> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| (e.path().to_string(), e.inner().to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != SCHEMA_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        if !(self.mc.eps > 0.0 && self.mc.eps.is_finite()) {
            return Err(ConfigError::Eps(self.mc.eps));
        }
        self.model().validate()?;
        let actual = self.volatility.lambda_bar();
        if let Some(declared) = self.levy.lambda_bar {
            if (declared - actual).abs() > 1e-12 * actual.abs().max(1.0) {
                return Err(ConfigError::LambdaBar { declared, actual });
            }
        }
        Ok(())
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            levy: self.levy.spec.clone(),
            volatility: self.volatility.clone(),
            initial_curve: self.initial_curve.clone(),
            grid: self.grid,
            solver: self.solver,
            eps: self.mc.eps,
        }
    }
}
