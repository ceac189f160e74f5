//! The JSON run configuration shared by the CLI commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequalities::Family;
use crate::norms::{parse_norm, NormSpec};
use crate::report::{Tolerances, SCHEMA_VERSION};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "FINSLER_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    /// `"euclidean"`, `"lq:4"`, `"gauge:skew_l3"` or a norm object; the
    /// dimension is supplied per case.
    pub norm: serde_json::Value,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    /// Gagliardo-Nirenberg exponent; `p` is used when absent.
    pub q: Option<f64>,
    #[serde(rename = "R")]
    pub radius: f64,
    pub families: Vec<Family>,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// Monte Carlo samples per integrand of the polar-formula criterion.
    pub mc_samples: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            norm: serde_json::Value::String("euclidean".into()),
            n: 3,
            p: 2.0,
            q: None,
            radius: 1.0,
            families: Family::ALL.to_vec(),
            tolerances: Tolerances::default(),
            seed: 2024,
            mc_samples: 1_000_000,
            out: None,
            format: Format::Json,
        }
    }
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl RunConfig {
    /// Parses a JSON document; the first violation is reported with its path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(if path.is_empty() { ".".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The file named by `FINSLER_CONFIG`, or the defaults when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) => Self::load(Path::new(&p)),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_error("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        let t = &self.tolerances;
        for (name, v) in [("smooth", t.smooth), ("singular", t.singular), ("two_d", t.two_d), ("rel_floor", t.rel_floor), ("identity", t.identity)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(config_error(format!("tolerances.{name}"), format!("must lie in (0, 1), got {v}")));
            }
        }
        if self.mc_samples < 2 {
            return Err(config_error("mc_samples", "at least two samples are needed"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(config_error("R", format!("must be positive, got {}", self.radius)));
        }
        self.norm_for(self.n.max(1)).map_err(|e| config_error("norm", e.to_string()))?;
        Ok(())
    }

    /// The configured norm on R^dim.
    pub fn norm_for(&self, dim: usize) -> Result<NormSpec> {
        match &self.norm {
            serde_json::Value::String(s) => parse_norm(s, dim),
            serde_json::Value::Object(_) => parse_norm(&self.norm.to_string(), dim),
            other => Err(Error::Input(format!("norm must be a string or an object, got {other}"))),
        }
    }

    /// The exponent of `family`: q for gn when given, p otherwise.
    pub fn exponent(&self, family: Family) -> f64 {
        match (family, self.q) {
            (Family::Gn, Some(q)) => q,
            _ => self.p,
        }
    }
}
