//! Shared service state: environment, vessel cache, record store and jobs.

use std::collections::HashSet;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;
use urnmap_ais::{import_csv, load_regions, Clock, FileStore, MemoryStore, PollOutcome, RecordStore, RegionDefinition, SystemClock, VesselCache};
use urnmap_core::products::{sel_product, Environment, SelProduct, SelRequest};
use urnmap_core::SourceModels;

use crate::config::ServiceConfig;
use crate::jobs::JobRegistry;
use crate::tiers::Tier;

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("{0}")]
    Config(String),
    #[error("environment: {0}")]
    Environment(String),
    #[error("regions: {0}")]
    Regions(String),
    #[error("store: {0}")]
    Store(String),
}

/// Ingest health, reported by `/api/status`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Health {
    /// Store writes are failing; the cache is still updated.
    pub degraded: bool,
    pub feed_ok: Option<bool>,
    pub last_poll: Option<DateTime<Utc>>,
    pub last_error: Option<String>,
    pub polls: u64,
    pub skipped_records: u64,
}

pub struct AppState {
    pub config: ServiceConfig,
    pub env: Environment<f64>,
    pub models: SourceModels<f64>,
    pub regions: Vec<RegionDefinition>,
    pub cache: VesselCache,
    pub store: Arc<dyn RecordStore>,
    pub jobs: JobRegistry,
    health: Mutex<Health>,
    keys: HashSet<String>,
}

impl AppState {
    pub fn new(
        config: ServiceConfig,
        env: Environment<f64>,
        regions: Vec<RegionDefinition>,
        store: Arc<dyn RecordStore>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let keys = config.api_keys().into_iter().collect();
        Self {
            cache: VesselCache::new(config.cache_ttl_s, clock),
            jobs: JobRegistry::new(config.workers),
            models: if config.models.placeholders {
                SourceModels::with_placeholders()
            } else {
                SourceModels::builtin()
            },
            health: Mutex::new(Health::default()),
            config,
            env,
            regions,
            store,
            keys,
        }
    }

    /// Loads every file named by the config and replays its CSVs into the store.
    pub fn from_config(config: ServiceConfig) -> Result<Self, StartupError> {
        let env_paths = config
            .environment
            .clone()
            .ok_or_else(|| StartupError::Config("an [environment] table with a bathymetry file is required".into()))?;
        let env = env_paths
            .load::<f64>(None)
            .map_err(|e| StartupError::Environment(e.to_string()))?;
        let regions = match &config.regions {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| StartupError::Regions(format!("{}: {e}", p.display())))?;
                load_regions(&text).map_err(|e| StartupError::Regions(e.to_string()))?
            }
            None => Vec::new(),
        };
        let store: Arc<dyn RecordStore> = match &config.store {
            Some(p) => Arc::new(FileStore::open(p).map_err(|e| StartupError::Store(e.to_string()))?),
            None => Arc::new(MemoryStore::new()),
        };
        for path in &config.replay {
            let file = std::fs::File::open(path).map_err(|e| StartupError::Store(format!("{}: {e}", path.display())))?;
            let imported = import_csv(file).map_err(|e| StartupError::Store(format!("{}: {e}", path.display())))?;
            let n = store
                .insert(&imported.records)
                .map_err(|e| StartupError::Store(e.to_string()))?;
            log::info!(
                "replayed {}: {n} records stored, {} rows rejected",
                path.display(),
                imported.rejected.len()
            );
        }
        let models = config
            .models
            .load::<f64>(None)
            .map_err(|e| StartupError::Config(format!("models: {e}")))?;
        let mut state = Self::new(config, env, regions, store, Arc::new(SystemClock));
        state.models = models;
        Ok(state)
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.cache.now()
    }

    /// Tier for an `x-api-key` value; `None` for a key that is not known.
    pub fn tier(&self, key: Option<&str>) -> Option<Tier> {
        match key {
            None => Some(Tier::Guest),
            Some(k) if self.keys.contains(k) => Some(Tier::Registered),
            Some(_) => None,
        }
    }

    pub fn health(&self) -> Health {
        self.health.lock().expect("health lock").clone()
    }

    /// Installs one poll: cache first, then the store. A store failure sets
    /// the degraded flag and leaves the cache updated.
    pub fn ingest_poll(&self, outcome: &PollOutcome) {
        self.cache.ingest(&outcome.records);
        let stored = self.store.insert(&outcome.records);
        let mut h = self.health.lock().expect("health lock");
        h.polls += 1;
        h.feed_ok = Some(true);
        h.last_poll = self.cache.last_update();
        h.skipped_records += outcome.skipped as u64;
        match stored {
            Ok(_) => {
                h.degraded = false;
                h.last_error = None;
            }
            Err(e) => {
                log::error!("record store write failed, continuing cache-only: {e}");
                h.degraded = true;
                h.last_error = Some(e.to_string());
            }
        }
    }

    /// A failed poll leaves the cache alone; entries expire at their deadline.
    pub fn record_feed_error(&self, message: String) {
        log::warn!("feed poll failed: {message}");
        let mut h = self.health.lock().expect("health lock");
        h.feed_ok = Some(false);
        h.last_error = Some(message);
    }

    pub fn mark_store_failure(&self, message: String) {
        let mut h = self.health.lock().expect("health lock");
        h.degraded = true;
        h.last_error = Some(message);
    }

    /// Runs an exposure request over stored reports. Reports up to one gap
    /// threshold either side of the window are read so segments straddling
    /// its edges are formed exactly as from the full record set.
    pub fn compute_sel(&self, req: &SelRequest) -> Result<SelProduct<f64>, String> {
        let gap = Duration::milliseconds((self.config.products.gap_threshold_s * 1000.0).ceil() as i64);
        let records = self
            .store
            .query(None, req.start - gap, req.end + gap)
            .map_err(|e| e.to_string())?;
        sel_product(&self.env.field, &self.models, &self.config.products, &records, req).map_err(|e| e.to_string())
    }
}
