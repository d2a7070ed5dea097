//! Service configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use urnmap_core::products::{EnvironmentPaths, ModelPaths, ProductConfig};

use crate::tiers::TierTable;

/// Comma-separated API keys granted the registered tier.
pub const API_KEYS_ENV: &str = "URNMAP_API_KEYS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// GeoJSON with the supported regions and their inland exclusions.
    pub regions: Option<PathBuf>,
    /// Append-only record file; records are kept in memory when absent.
    pub store: Option<PathBuf>,
    /// Record CSVs imported into the store at startup.
    pub replay: Vec<PathBuf>,
    pub poll_interval_s: u64,
    pub cache_ttl_s: i64,
    /// A vessel appears in a historical snapshot at `t` if its latest report
    /// is in `(t - history_validity_s, t]`.
    pub history_validity_s: f64,
    pub workers: usize,
    pub max_vessels: usize,
    pub max_grid_cells: usize,
    pub registered_keys: Vec<String>,
    pub tiers: TierTable,
    pub environment: Option<EnvironmentPaths>,
    pub products: ProductConfig,
    pub models: ModelPaths,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            regions: None,
            store: None,
            replay: Vec::new(),
            poll_interval_s: 60,
            cache_ttl_s: urnmap_ais::DEFAULT_TTL_S,
            history_validity_s: 600.0,
            workers: 2,
            max_vessels: 5000,
            max_grid_cells: 1_000_000,
            registered_keys: Vec::new(),
            tiers: TierTable::default(),
            environment: None,
            products: ProductConfig::default(),
            models: ModelPaths::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.regions.as_mut().map(fix);
        self.store.as_mut().map(fix);
        self.replay.iter_mut().for_each(fix);
        if let Some(env) = &mut self.environment {
            fix(&mut env.bathymetry);
            env.sound_speed.as_mut().map(fix);
            env.mpas.as_mut().map(fix);
        }
        self.models.aquo.as_mut().map(fix);
        self.models.srv.as_mut().map(fix);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.poll_interval_s == 0 {
            return bad("poll_interval_s must be positive");
        }
        if self.cache_ttl_s <= 0 {
            return bad("cache_ttl_s must be positive");
        }
        if self.history_validity_s.is_nan() || self.history_validity_s <= 0.0 {
            return bad("history_validity_s must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        self.tiers.validate().map_err(ConfigError::Invalid)?;
        self.products.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Registered keys from the config plus [`API_KEYS_ENV`].
    pub fn api_keys(&self) -> Vec<String> {
        let mut keys = self.registered_keys.clone();
        if let Ok(v) = std::env::var(API_KEYS_ENV) {
            keys.extend(v.split(',').map(str::trim).filter(|k| !k.is_empty()).map(String::from));
        }
        keys
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ServiceConfig::from_toml(
            r#"
            workers = 4
            [tiers.guest]
            max_sel_days = 2
            [products]
            cell_deg = 0.05
            [products.propagation]
            max_bounces = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.workers, 4);
        assert_eq!(cfg.tiers.guest.max_sel_days, 2.0);
        assert_eq!(cfg.tiers.registered.max_sel_days, 30.0);
        assert_eq!(cfg.products.propagation.max_bounces, 4);
        assert_eq!(cfg.cache_ttl_s, 180);
        assert!(ServiceConfig::from_toml("bogus = 1").is_err());
        assert!(ServiceConfig::from_toml("workers = 0").is_err());
    }
}
