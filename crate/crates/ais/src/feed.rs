//! AISHub-style JSON feed: payload decoding and a polling client.
//!
//! A payload is `[header, [record, ...]]`, where the header carries `ERROR`
//! and the records use the exchange's upper-case field names. Values the
//! exchange uses as "not available" markers are mapped to absent fields.

use std::time::Duration;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde_json::Value;
use thiserror::Error;
use urnmap_core::geo::BoundingBox;
use urnmap_core::VesselRecord;

use crate::region::{filter_records, FilterStats, RegionDefinition};

/// Environment variable holding the feed endpoint URL.
pub const FEED_URL_ENV: &str = "URNMAP_FEED_URL";
/// Environment variable holding the feed account key.
pub const FEED_KEY_ENV: &str = "URNMAP_FEED_KEY";

#[derive(Debug, Error)]
pub enum FeedError {
    #[error("feed payload is malformed: {0}")]
    Malformed(String),
    #[error("feed reported an error: {0}")]
    Api(String),
    #[error("feed request failed after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("feed is not configured: {0}")]
    Config(String),
}

/// Records decoded from one payload and the number that could not be decoded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Decoded {
    pub records: Vec<VesselRecord>,
    pub skipped: usize,
    pub diagnostics: Vec<String>,
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(*k)).filter(|v| !v.is_null())
}

fn number(v: Option<&Value>) -> Option<f64> {
    match v? {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn parse_time(v: &Value) -> Option<DateTime<Utc>> {
    match v {
        Value::Number(n) => Utc.timestamp_opt(n.as_i64()?, 0).single(),
        Value::String(s) => {
            let s = s.trim();
            if let Ok(t) = DateTime::parse_from_rfc3339(s) {
                return Some(t.with_timezone(&Utc));
            }
            let bare = s.trim_end_matches("GMT").trim_end_matches("UTC").trim();
            NaiveDateTime::parse_from_str(bare, "%Y-%m-%d %H:%M:%S")
                .ok()
                .map(|t| t.and_utc())
                .or_else(|| bare.parse::<i64>().ok().and_then(|e| Utc.timestamp_opt(e, 0).single()))
        }
        _ => None,
    }
}

/// Decodes one record object.
pub fn decode_record(v: &Value) -> Result<VesselRecord, String> {
    let obj = v.as_object().ok_or("record is not an object")?;
    let mmsi = number(field(obj, &["MMSI"]))
        .filter(|m| m.fract() == 0.0 && *m > 0.0 && *m <= u32::MAX as f64)
        .ok_or("missing or invalid MMSI")? as u32;
    let lat = number(field(obj, &["LATITUDE", "LAT"])).ok_or("missing latitude")?;
    let lon = number(field(obj, &["LONGITUDE", "LON"])).ok_or("missing longitude")?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(format!("position {lat},{lon} not available"));
    }
    let timestamp = field(obj, &["TIME"]).and_then(parse_time).ok_or("missing or invalid TIME")?;
    let sog_kn = number(field(obj, &["SOG"]))
        .filter(|s| (0.0..102.3).contains(s))
        .ok_or("speed not available")?;
    let cog_deg = number(field(obj, &["COG"])).filter(|c| (0.0..360.0).contains(c));
    let ais_type = number(field(obj, &["TYPE"]))
        .filter(|t| (0.0..=255.0).contains(t))
        .unwrap_or(0.0) as u8;
    let dim = |k: &str| number(field(obj, &[k])).filter(|d| *d > 0.0);
    let pair = |a: &str, b: &str| match (dim(a), dim(b)) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    };
    let length_m = dim("LENGTH").or_else(|| pair("A", "B"));
    let beam_m = dim("BEAM").or_else(|| pair("C", "D"));
    let draft_m = number(field(obj, &["DRAUGHT", "DRAFT"])).filter(|d| *d > 0.0);
    let nav_status = number(field(obj, &["NAVSTAT"]))
        .filter(|s| (0.0..=15.0).contains(s))
        .unwrap_or(15.0) as u8;
    let name = field(obj, &["NAME"])
        .and_then(|n| n.as_str())
        .map(|n| n.trim().trim_end_matches('@').trim().to_string())
        .filter(|n| !n.is_empty());
    Ok(VesselRecord {
        mmsi,
        name,
        timestamp,
        lat,
        lon,
        sog_kn,
        cog_deg,
        ais_type,
        length_m,
        beam_m,
        draft_m,
        nav_status,
        je_class: None,
    })
}

/// Decodes a whole payload. Records that fail to decode are counted and skipped.
pub fn decode_payload(bytes: &[u8]) -> Result<Decoded, FeedError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| FeedError::Malformed(e.to_string()))?;
    let (header, list) = match &root {
        Value::Array(items) if !items.is_empty() => (Some(&items[0]), items.get(1)),
        Value::Object(_) => (Some(&root), None),
        _ => return Err(FeedError::Malformed("expected [header, records]".into())),
    };
    if let Some(h) = header.and_then(|h| h.as_object()) {
        if h.get("ERROR").and_then(|e| e.as_bool()) == Some(true) {
            let msg = h
                .get("ERROR_MESSAGE")
                .and_then(|m| m.as_str())
                .unwrap_or("unspecified error");
            return Err(FeedError::Api(msg.to_string()));
        }
    }
    let mut out = Decoded::default();
    let Some(list) = list else { return Ok(out) };
    let items = list
        .as_array()
        .ok_or_else(|| FeedError::Malformed("record list is not an array".into()))?;
    for (i, item) in items.iter().enumerate() {
        match decode_record(item) {
            Ok(r) => out.records.push(r),
            Err(e) => {
                out.skipped += 1;
                out.diagnostics.push(format!("record {i}: {e}"));
            }
        }
    }
    if out.skipped > 0 {
        log::warn!("feed payload: {} of {} records skipped", out.skipped, items.len());
    }
    Ok(out)
}

/// Retry schedule for feed requests: `base · 2^k` between attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

/// Result of polling every region once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PollOutcome {
    pub records: Vec<VesselRecord>,
    pub skipped: usize,
    pub stats: FilterStats,
}

/// HTTP client for the exchange API.
#[derive(Debug, Clone)]
pub struct FeedClient {
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    http: reqwest::Client,
}

impl FeedClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, FeedError> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| FeedError::Config(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key,
            retry: RetryPolicy::default(),
            http,
        })
    }

    /// Reads the endpoint and key from [`FEED_URL_ENV`] and [`FEED_KEY_ENV`].
    pub fn from_env() -> Result<Self, FeedError> {
        let url = std::env::var(FEED_URL_ENV).map_err(|_| FeedError::Config(format!("{FEED_URL_ENV} is not set")))?;
        Self::new(url, std::env::var(FEED_KEY_ENV).ok())
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn query(&self, bbox: &BoundingBox) -> Vec<(&'static str, String)> {
        let mut q = vec![
            ("format", "1".to_string()),
            ("output", "json".to_string()),
            ("compress", "0".to_string()),
            ("latmin", bbox.south.to_string()),
            ("latmax", bbox.north.to_string()),
            ("lonmin", bbox.west.to_string()),
            ("lonmax", bbox.east.to_string()),
        ];
        if let Some(k) = &self.api_key {
            q.insert(0, ("username", k.clone()));
        }
        q
    }

    /// Fetches and decodes the records inside `bbox`, retrying transport
    /// failures and server errors with exponential backoff.
    pub async fn fetch(&self, bbox: &BoundingBox) -> Result<Decoded, FeedError> {
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts.max(1) {
            if attempt > 0 {
                tokio::time::sleep(self.retry.delay(attempt - 1)).await;
            }
            let resp = self.http.get(&self.endpoint).query(&self.query(bbox)).send().await;
            match resp {
                Ok(r) if r.status().is_success() => match r.bytes().await {
                    Ok(body) => return decode_payload(&body),
                    Err(e) => last = e.to_string(),
                },
                Ok(r) if r.status().is_client_error() => {
                    return Err(FeedError::Api(format!("HTTP {}", r.status())));
                }
                Ok(r) => last = format!("HTTP {}", r.status()),
                Err(e) => last = e.to_string(),
            }
            log::warn!("feed attempt {} failed: {last}", attempt + 1);
        }
        Err(FeedError::Network {
            attempts: self.retry.max_attempts.max(1),
            message: last,
        })
    }

    /// One poll: fetch each region's bounding box, then keep records inside
    /// the region polygons (exclusions applied). A vessel seen in several
    /// regions is reported once, latest report first received.
    pub async fn poll(&self, regions: &[RegionDefinition]) -> Result<PollOutcome, FeedError> {
        let mut all = Vec::new();
        let mut skipped = 0;
        for region in regions {
            let decoded = self.fetch(&region.bbox).await?;
            skipped += decoded.skipped;
            all.extend(decoded.records);
        }
        let (mut records, stats) = filter_records(&all, regions);
        records.sort_by_key(|r| (r.mmsi, r.timestamp));
        records.dedup_by(|b, a| a.mmsi == b.mmsi && a.timestamp == b.timestamp);
        Ok(PollOutcome {
            records,
            skipped,
            stats,
        })
    }
}
