//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Condition, SeedGrid};
use crate::training::{Stage1Config, Stage2Config};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub world_seed: u64,
    pub probe_seed: u64,
    /// `S1xS2`, e.g. `5x6`.
    pub seed_grid: SeedGrid,
    pub conditions: Vec<Condition>,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub stage1: Stage1Config,
    pub stage2: Stage2Config,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            world_seed: 0,
            probe_seed: 0,
            seed_grid: SeedGrid::default(),
            conditions: Condition::ALL.to_vec(),
            out_dir: PathBuf::from("out"),
            jobs: 1,
            stage1: Stage1Config::default(),
            stage2: Stage2Config::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        self.stage1.validate()?;
        self.stage2.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.seed_grid = SeedGrid::new(2, 3);
        cfg.conditions = vec![Condition::Mixed, Condition::AblationOpen];
        cfg.stage2.learning_rate = 1.5e-4;
        let text = cfg.to_toml();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        assert!(text.contains("seed_grid = \"2x3\""), "{text}");
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let text = RunConfig::default().to_toml();
        let err = RunConfig::from_toml(&text.replacen("jobs", "jbos", 1)).unwrap_err();
        assert!(err.to_string().contains("jbos"), "{err}");
        let err = RunConfig::from_toml(&text.replacen("schema_version = 1", "schema_version = 7", 1)).unwrap_err();
        assert!(err.to_string().contains("schema_version"), "{err}");
        let bad_nested = text.replacen("fixed_alpha", "fixed_alfa", 1);
        assert!(RunConfig::from_toml(&bad_nested).unwrap_err().to_string().contains("fixed_alfa"));
    }
}
