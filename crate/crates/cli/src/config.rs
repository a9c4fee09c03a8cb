//! Experiment configuration: a strict TOML schema.
//!
//! ```toml
//! seed = 7                      # randomised sampling (index, cover)
//!
//! [profile]                     # required
//! family = "ellipsoid"          # round_sphere | ellipsoid | stretched_sphere | dip_profile | samples
//! a = 1.0
//! c = 4.0
//!
//! [strength]                    # default: constant 1
//! kind = "cosine_series"        # constant | cosine_series | rigid
//! coeffs = [0.3]
//!
//! [grid]
//! m = [0.5, 1.0]                # speed parameters, default [1.0]
//! levels = 256                  # momentum levels per certificate
//!
//! [tolerances]
//! rtol = 1e-10
//! atol = 1e-12
//! validation = 1e-8
//! sign = 1e-6
//! critical_fraction = 1e-3
//!
//! [twist]
//! u = [-2.0, -1.0, 1.0]         # default: five points across (−ℓ, ℓ)
//! m = [0.08, 0.04, 0.02, 0.01]
//!
//! [index]
//! m = [0.025, 0.05, 0.1, 0.2]
//! samples = 200
//!
//! [cover]
//! samples = 1000
//!
//! [trajectory]                  # optional, exported by `orbits`
//! start = [1.0, 0.0, 0.0]       # (t, φ, θ)
//! duration = 50.0
//! samples = 2000
//! ```

use magflow::surface::{FamilySpec, StrengthSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("config error: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub profile: FamilySpec,
    #[serde(default = "default_strength")]
    pub strength: StrengthSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub twist: TwistConfig,
    #[serde(default)]
    pub index: IndexConfig,
    #[serde(default)]
    pub cover: CoverConfig,
    #[serde(default)]
    pub trajectory: Option<TrajectoryConfig>,
}

fn default_seed() -> u64 {
    7
}

fn default_strength() -> StrengthSpec {
    StrengthSpec::Constant { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub m: Vec<f64>,
    pub levels: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { m: vec![1.0], levels: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub validation: f64,
    pub sign: f64,
    pub critical_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, validation: 1e-8, sign: 1e-6, critical_fraction: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TwistConfig {
    pub u: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexConfig {
    pub m: Vec<f64>,
    pub samples: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self { m: vec![0.025, 0.05, 0.1, 0.2], samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverConfig {
    pub samples: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub start: [f64; 3],
    pub duration: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    2000
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        ConfigError::Syntax { line, column, message: e.message().to_string() }
    })?;
    if cfg.grid.m.is_empty() || cfg.grid.m.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(ConfigError::Invalid("grid.m must be a nonempty list of positive numbers".into()));
    }
    if cfg.grid.levels == 0 {
        return Err(ConfigError::Invalid("grid.levels must be positive".into()));
    }
    if cfg.index.m.is_empty() || cfg.index.samples == 0 {
        return Err(ConfigError::Invalid("index.m and index.samples must be nonempty".into()));
    }
    if let Some(ms) = &cfg.twist.m {
        if ms.is_empty() || ms.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::Invalid("twist.m must be nonempty and strictly decreasing".into()));
        }
    }
    Ok(cfg)
}
