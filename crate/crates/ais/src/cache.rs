//! In-memory cache of the latest state of each vessel.
//!
//! The poller is the only writer. Each poll builds a new map and swaps it in
//! whole, so readers see either the previous or the new batch, never a mix.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;
use urnmap_core::VesselRecord;

pub const DEFAULT_TTL_S: i64 = 180;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock moved by hand, for tests and replays.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(t: DateTime<Utc>) -> Self {
        Self(Mutex::new(t))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock().expect("clock lock") = t;
    }

    pub fn advance(&self, d: Duration) {
        let mut t = self.0.lock().expect("clock lock");
        *t += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock lock")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheEntry {
    pub record: VesselRecord,
    pub received_at: DateTime<Utc>,
    pub deadline: DateTime<Utc>,
}

impl CacheEntry {
    pub fn live_at(&self, t: DateTime<Utc>) -> bool {
        t <= self.deadline
    }
}

#[derive(Debug, Default)]
struct Snapshot {
    entries: HashMap<u32, CacheEntry>,
    updated: Option<DateTime<Utc>>,
}

pub struct VesselCache {
    ttl: Duration,
    clock: Arc<dyn Clock>,
    inner: RwLock<Arc<Snapshot>>,
}

impl std::fmt::Debug for VesselCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VesselCache").field("ttl", &self.ttl).finish_non_exhaustive()
    }
}

impl VesselCache {
    pub fn new(ttl_s: i64, clock: Arc<dyn Clock>) -> Self {
        Self {
            ttl: Duration::seconds(ttl_s.max(0)),
            clock,
            inner: RwLock::new(Arc::new(Snapshot::default())),
        }
    }

    pub fn with_system_clock(ttl_s: i64) -> Self {
        Self::new(ttl_s, Arc::new(SystemClock))
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    fn current(&self) -> Arc<Snapshot> {
        self.inner.read().expect("cache lock").clone()
    }

    /// Installs one poll's worth of records. A later record for the same MMSI
    /// replaces an earlier one, whatever its report time; expired entries are
    /// dropped.
    pub fn ingest(&self, batch: &[VesselRecord]) {
        let now = self.clock.now();
        let deadline = now + self.ttl;
        let prev = self.current();
        let mut entries: HashMap<u32, CacheEntry> = prev
            .entries
            .iter()
            .filter(|(_, e)| e.live_at(now))
            .map(|(k, e)| (*k, e.clone()))
            .collect();
        for r in batch {
            entries.insert(
                r.mmsi,
                CacheEntry {
                    record: r.clone(),
                    received_at: now,
                    deadline,
                },
            );
        }
        let next = Arc::new(Snapshot {
            entries,
            updated: Some(now),
        });
        *self.inner.write().expect("cache lock") = next;
    }

    /// Time of the last completed ingest.
    pub fn last_update(&self) -> Option<DateTime<Utc>> {
        self.current().updated
    }

    pub fn get(&self, mmsi: u32) -> Option<CacheEntry> {
        let now = self.clock.now();
        self.current().entries.get(&mmsi).filter(|e| e.live_at(now)).cloned()
    }

    /// Live entries sorted by MMSI.
    pub fn entries(&self) -> Vec<CacheEntry> {
        let now = self.clock.now();
        let snap = self.current();
        let mut out: Vec<CacheEntry> = snap.entries.values().filter(|e| e.live_at(now)).cloned().collect();
        out.sort_by_key(|e| e.record.mmsi);
        out
    }

    pub fn records(&self) -> Vec<VesselRecord> {
        self.entries().into_iter().map(|e| e.record).collect()
    }

    pub fn len(&self) -> usize {
        self.entries().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
