//! Registry of asynchronous SEL jobs.
//!
//! Admission is decided under one lock, so two identical requests can never
//! both create a job. Completed results are immutable and reused for
//! identical later requests; failed jobs may be resubmitted.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use urnmap_core::products::SelProduct;
use urnmap_core::BoundingBox;

/// Reference to a zone: an MPA id from the loaded layer, or inline GeoJSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZoneRef {
    Id(String),
    GeoJson(serde_json::Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub cap_kn: f64,
    pub zone: ZoneRef,
    #[serde(default)]
    pub buffer_km: f64,
}

/// A resolved SEL request; its JSON form is the deduplication key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelJobSpec {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub extent: BoundingBox,
    pub scenario: Option<ScenarioSpec>,
    pub summary_zone: Option<ZoneRef>,
}

impl SelJobSpec {
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("job spec serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone)]
pub struct Job {
    pub id: String,
    pub spec: SelJobSpec,
    pub status: JobStatus,
    pub submitted_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub error: Option<String>,
    pub result: Option<Arc<SelProduct<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Admission {
    Created(String),
    /// An identical job is queued or running.
    InFlight(String),
    /// An identical job already completed.
    Completed(String),
}

#[derive(Debug, Default)]
struct Inner {
    jobs: BTreeMap<String, Job>,
    by_key: HashMap<String, String>,
    next: u64,
}

#[derive(Debug)]
pub struct JobRegistry {
    inner: Mutex<Inner>,
    slots: Arc<Semaphore>,
}

impl JobRegistry {
    pub fn new(workers: usize) -> Self {
        Self {
            inner: Mutex::new(Inner::default()),
            slots: Arc::new(Semaphore::new(workers.max(1))),
        }
    }

    pub fn slots(&self) -> Arc<Semaphore> {
        self.slots.clone()
    }

    pub fn admit(&self, spec: SelJobSpec, now: DateTime<Utc>) -> Admission {
        let key = spec.key();
        let mut inner = self.inner.lock().expect("job registry lock");
        if let Some(id) = inner.by_key.get(&key).cloned() {
            match inner.jobs[&id].status {
                JobStatus::Queued | JobStatus::Running => return Admission::InFlight(id),
                JobStatus::Done => return Admission::Completed(id),
                JobStatus::Failed => {}
            }
        }
        inner.next += 1;
        let id = format!("sel-{:06}", inner.next);
        inner.jobs.insert(
            id.clone(),
            Job {
                id: id.clone(),
                spec,
                status: JobStatus::Queued,
                submitted_at: now,
                started_at: None,
                finished_at: None,
                error: None,
                result: None,
            },
        );
        inner.by_key.insert(key, id.clone());
        Admission::Created(id)
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.inner.lock().expect("job registry lock").jobs.get(id).cloned()
    }

    pub fn mark_running(&self, id: &str, now: DateTime<Utc>) {
        if let Some(j) = self.inner.lock().expect("job registry lock").jobs.get_mut(id) {
            j.status = JobStatus::Running;
            j.started_at = Some(now);
        }
    }

    pub fn finish(&self, id: &str, outcome: Result<SelProduct<f64>, String>, now: DateTime<Utc>) {
        if let Some(j) = self.inner.lock().expect("job registry lock").jobs.get_mut(id) {
            j.finished_at = Some(now);
            match outcome {
                Ok(p) => {
                    j.status = JobStatus::Done;
                    j.result = Some(Arc::new(p));
                }
                Err(e) => {
                    j.status = JobStatus::Failed;
                    j.error = Some(e);
                }
            }
        }
    }

    /// Count of jobs per status.
    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        let inner = self.inner.lock().expect("job registry lock");
        let mut out = BTreeMap::new();
        for j in inner.jobs.values() {
            let k = match j.status {
                JobStatus::Queued => "queued",
                JobStatus::Running => "running",
                JobStatus::Done => "done",
                JobStatus::Failed => "failed",
            };
            *out.entry(k).or_insert(0) += 1;
        }
        out
    }
}
