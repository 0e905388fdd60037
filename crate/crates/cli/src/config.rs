//! Resolved run configuration: what gets hashed, persisted and replayed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stemcast_core::datasets::{generate_synthetic, SyntheticConfig, TimeSeriesFrame};
use stemcast_core::training::PipelineConfig;

use crate::csvio::load_csv;
use crate::error::{CliError, Result};

pub const CONFIG_FILE: &str = "config.toml";

/// Exactly one source of hourly data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic(SyntheticConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticConfig::default())
    }
}

impl DataSource {
    pub fn load(&self) -> Result<TimeSeriesFrame> {
        match self {
            DataSource::Csv(path) => load_csv(path),
            DataSource::Synthetic(cfg) => Ok(generate_synthetic(cfg)?),
        }
    }
}

/// Parses `key=value[,key=value...]` into a generator config. Unknown keys
/// are rejected; an empty spec or `default` gives the defaults.
pub fn parse_synthetic_spec(spec: &str) -> Result<SyntheticConfig> {
    let spec = spec.trim();
    if spec.is_empty() || spec == "default" {
        return Ok(SyntheticConfig::default());
    }
    let mut lines = Vec::new();
    for pair in spec.split(',') {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("synthetic spec entry {pair:?} is not key=value")))?;
        lines.push(format!("{} = {}", key.trim().replace('-', "_"), value.trim()));
    }
    toml::from_str(&lines.join("\n")).map_err(|e| CliError::usage(format!("synthetic spec {spec:?}: {}", e.message())))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let DataSource::Synthetic(cfg) = &self.data {
            cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        }
        self.pipeline.validate().map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::from_toml(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// Hex SHA-256 of the persisted TOML text.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }

    /// `<model>-<first 12 hash digits>`.
    pub fn run_name(&self) -> Result<String> {
        Ok(format!("{}-{}", self.pipeline.model.kind, &self.hash()?[..12]))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use stemcast_core::models::ModelKind;

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.pipeline.train.learning_rate = 0.1 + 0.2;
        cfg.pipeline.epsilon = 1e-300;
        cfg.pipeline.model.kind = ModelKind::Gru;
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);

        cfg.data = DataSource::Csv("data/plant.csv".into());
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.pipeline.train.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
        assert!(a.run_name().unwrap().starts_with("wt-ed-lstm-am-"));
    }

    #[test]
    fn partial_files_take_defaults() {
        let cfg = RunConfig::from_toml("[pipeline.train]\nepochs = 3\n").unwrap();
        assert_eq!(cfg.pipeline.train.epochs, 3);
        assert_eq!(cfg.data, DataSource::default());
        assert!(RunConfig::from_toml("[pipeline]\nbogus = 1\n").is_err());
    }

    #[test]
    fn synthetic_specs() {
        let cfg = parse_synthetic_spec("n_hours=500, noise-sigma=0,seed=9").unwrap();
        assert_eq!((cfg.n_hours, cfg.noise_sigma, cfg.seed), (500, 0.0, 9));
        assert_eq!(parse_synthetic_spec("default").unwrap(), SyntheticConfig::default());
        assert!(parse_synthetic_spec("colour=red").is_err());
        assert!(parse_synthetic_spec("n_hours").is_err());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
