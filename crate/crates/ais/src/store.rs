//! Persistent record store for historical and exposure queries.
//!
//! Records are keyed by (mmsi, timestamp). Re-inserting an identical record
//! is a no-op; a different record under an existing key replaces it (the last
//! one received wins, as in exposure segmentation). The file store only ever
//! appends; on reopen, later lines override earlier ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;
use urnmap_core::{BoundingBox, LatLon, VesselRecord};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store unavailable: {0}")]
    Unavailable(String),
    #[error("corrupt store line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

type Key = (DateTime<Utc>, u32);

pub trait RecordStore: Send + Sync {
    /// Returns the number of records that were new or replaced an entry.
    fn insert(&self, records: &[VesselRecord]) -> Result<usize, StoreError>;

    /// Records with `start <= timestamp <= end` inside `bbox` (if given),
    /// ordered by time then MMSI.
    fn query(
        &self,
        bbox: Option<&BoundingBox>,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Vec<VesselRecord>, StoreError>;

    /// UTC dates that hold at least one record.
    fn dates(&self) -> Result<Vec<NaiveDate>, StoreError>;

    /// Most recent record of one vessel.
    fn latest(&self, mmsi: u32) -> Result<Option<VesselRecord>, StoreError>;
}

#[derive(Debug, Default)]
struct Index {
    by_time: BTreeMap<Key, VesselRecord>,
    by_vessel: BTreeMap<u32, BTreeSet<DateTime<Utc>>>,
}

impl Index {
    fn changes(&self, r: &VesselRecord) -> bool {
        self.by_time.get(&(r.timestamp, r.mmsi)) != Some(r)
    }

    fn insert(&mut self, r: &VesselRecord) -> bool {
        if !self.changes(r) {
            return false;
        }
        self.by_time.insert((r.timestamp, r.mmsi), r.clone());
        self.by_vessel.entry(r.mmsi).or_default().insert(r.timestamp);
        true
    }

    fn query(&self, bbox: Option<&BoundingBox>, start: DateTime<Utc>, end: DateTime<Utc>) -> Vec<VesselRecord> {
        if end < start {
            return Vec::new();
        }
        self.by_time
            .range((start, 0)..=(end, u32::MAX))
            .map(|(_, r)| r)
            .filter(|r| bbox.is_none_or(|b| b.contains(LatLon::new(r.lat, r.lon))))
            .cloned()
            .collect()
    }

    fn dates(&self) -> Vec<NaiveDate> {
        let set: BTreeSet<NaiveDate> = self.by_time.keys().map(|(t, _)| t.date_naive()).collect();
        set.into_iter().collect()
    }

    fn latest(&self, mmsi: u32) -> Option<VesselRecord> {
        let t = *self.by_vessel.get(&mmsi)?.last()?;
        self.by_time.get(&(t, mmsi)).cloned()
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    index: RwLock<Index>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl RecordStore for MemoryStore {
    fn insert(&self, records: &[VesselRecord]) -> Result<usize, StoreError> {
        let mut idx = self.index.write().expect("store lock");
        Ok(records.iter().filter(|r| idx.insert(r)).count())
    }

    fn query(
        &self,
        bbox: Option<&BoundingBox>,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Vec<VesselRecord>, StoreError> {
        Ok(self.index.read().expect("store lock").query(bbox, start, end))
    }

    fn dates(&self) -> Result<Vec<NaiveDate>, StoreError> {
        Ok(self.index.read().expect("store lock").dates())
    }

    fn latest(&self, mmsi: u32) -> Result<Option<VesselRecord>, StoreError> {
        Ok(self.index.read().expect("store lock").latest(mmsi))
    }
}

/// An append-only JSON-lines file with an in-memory index.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    index: RwLock<Index>,
    writer: Mutex<()>,
}

impl FileStore {
    /// Opens (or creates) the store file and loads its records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let unavailable = |e: std::io::Error| StoreError::Unavailable(format!("{}: {e}", path.display()));
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .read(true)
            .open(&path)
            .map_err(unavailable)?;
        let mut index = Index::default();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(unavailable)?;
            if line.trim().is_empty() {
                continue;
            }
            let r: VesselRecord = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                line: n + 1,
                message: e.to_string(),
            })?;
            index.insert(&r);
        }
        Ok(Self {
            path,
            index: RwLock::new(index),
            writer: Mutex::new(()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl RecordStore for FileStore {
    fn insert(&self, records: &[VesselRecord]) -> Result<usize, StoreError> {
        let _guard = self.writer.lock().expect("store writer lock");
        let fresh: Vec<&VesselRecord> = {
            let idx = self.index.read().expect("store lock");
            let mut batch: BTreeMap<Key, &VesselRecord> = BTreeMap::new();
            for r in records {
                batch.insert((r.timestamp, r.mmsi), r);
            }
            batch.into_values().filter(|r| idx.changes(r)).collect()
        };
        if fresh.is_empty() {
            return Ok(0);
        }
        let unavailable = |e: std::io::Error| StoreError::Unavailable(format!("{}: {e}", self.path.display()));
        let file = OpenOptions::new().append(true).open(&self.path).map_err(unavailable)?;
        let mut w = BufWriter::new(file);
        for r in &fresh {
            let line = serde_json::to_string(r).expect("record serializes");
            writeln!(w, "{line}").map_err(unavailable)?;
        }
        w.into_inner()
            .map_err(|e| unavailable(e.into_error()))
            .and_then(|f: File| f.sync_data().map_err(unavailable))?;
        let mut idx = self.index.write().expect("store lock");
        Ok(fresh.iter().filter(|r| idx.insert(r)).count())
    }

    fn query(
        &self,
        bbox: Option<&BoundingBox>,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<Vec<VesselRecord>, StoreError> {
        Ok(self.index.read().expect("store lock").query(bbox, start, end))
    }

    fn dates(&self) -> Result<Vec<NaiveDate>, StoreError> {
        Ok(self.index.read().expect("store lock").dates())
    }

    fn latest(&self, mmsi: u32) -> Result<Option<VesselRecord>, StoreError> {
        Ok(self.index.read().expect("store lock").latest(mmsi))
    }
}
