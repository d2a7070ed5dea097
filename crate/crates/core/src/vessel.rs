//! Decoded AIS vessel state and the attribute view used by source models.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Speed below which a vessel is treated as not radiating (knots).
pub const MIN_RADIATING_SPEED_KN: f64 = 0.5;

/// One decoded AIS state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselRecord {
    pub mmsi: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub timestamp: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
    pub sog_kn: f64,
    #[serde(default)]
    pub cog_deg: Option<f64>,
    pub ais_type: u8,
    #[serde(default)]
    pub length_m: Option<f64>,
    #[serde(default)]
    pub beam_m: Option<f64>,
    #[serde(default)]
    pub draft_m: Option<f64>,
    pub nav_status: u8,
    /// Explicit JOMOPANS-ECHO class (1–13), e.g. 10 for vehicle carriers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub je_class: Option<u8>,
}

/// Navigation statuses that are ever displayed or propagated: underway using
/// engine (0) and at anchor (1).
pub const DISPLAYED_STATUSES: [u8; 2] = [0, 1];

/// Records whose navigation status is in `statuses`; statuses outside
/// [`DISPLAYED_STATUSES`] are dropped regardless of the request.
pub fn status_filter(records: &[VesselRecord], statuses: &[u8]) -> Vec<VesselRecord> {
    records
        .iter()
        .filter(|r| DISPLAYED_STATUSES.contains(&r.nav_status) && statuses.contains(&r.nav_status))
        .cloned()
        .collect()
}

/// Coarse grouping used for summaries and dimension fallbacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VesselCategory {
    Cargo,
    Tanker,
    Passenger,
    Fishing,
    Sailing,
    Pleasure,
    Tug,
    Other,
}

impl VesselCategory {
    pub fn from_ais_type(ais_type: u8) -> Self {
        match ais_type {
            70..=79 => Self::Cargo,
            80..=89 => Self::Tanker,
            60..=69 => Self::Passenger,
            30 => Self::Fishing,
            36 => Self::Sailing,
            37 => Self::Pleasure,
            31 | 32 | 52 => Self::Tug,
            _ => Self::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cargo => "cargo",
            Self::Tanker => "tanker",
            Self::Passenger => "passenger",
            Self::Fishing => "fishing",
            Self::Sailing => "sailing",
            Self::Pleasure => "pleasure",
            Self::Tug => "tug",
            Self::Other => "other",
        }
    }

    /// Class-median (length, beam, draft) in metres used when AIS omits them.
    pub fn default_dimensions(self) -> (f64, f64, f64) {
        match self {
            Self::Cargo => (180.0, 28.0, 10.0),
            Self::Tanker => (180.0, 30.0, 11.0),
            Self::Passenger => (120.0, 20.0, 5.0),
            Self::Fishing => (25.0, 7.0, 3.0),
            Self::Sailing => (11.0, 3.5, 1.8),
            Self::Pleasure => (12.0, 4.0, 1.2),
            Self::Tug => (30.0, 10.0, 4.0),
            Self::Other => (50.0, 12.0, 4.0),
        }
    }
}

/// Which dimensions were filled from class defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatedDimensions {
    pub length: bool,
    pub beam: bool,
    pub draft: bool,
}

impl EstimatedDimensions {
    pub fn any(&self) -> bool {
        self.length || self.beam || self.draft
    }
}

/// The subset of a vessel state the source-level models consume.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselAttributes<T> {
    pub mmsi: u32,
    pub ais_type: u8,
    pub length_m: Option<T>,
    pub beam_m: Option<T>,
    pub draft_m: Option<T>,
    pub speed_kn: T,
    pub je_class: Option<u8>,
    pub estimated: EstimatedDimensions,
}

impl<T: Scalar> VesselAttributes<T> {
    pub fn new(ais_type: u8, length_m: T, speed_kn: T) -> Self {
        Self {
            mmsi: 0,
            ais_type,
            length_m: Some(length_m),
            beam_m: None,
            draft_m: None,
            speed_kn,
            je_class: None,
            estimated: EstimatedDimensions::default(),
        }
    }

    pub fn with_beam_draft(mut self, beam_m: T, draft_m: T) -> Self {
        self.beam_m = Some(beam_m);
        self.draft_m = Some(draft_m);
        self
    }

    /// Attributes exactly as reported, without any fallback.
    pub fn from_record(rec: &VesselRecord) -> Self {
        let dim = |d: Option<f64>| d.filter(|v| *v > 0.0 && v.is_finite()).map(T::lit);
        Self {
            mmsi: rec.mmsi,
            ais_type: rec.ais_type,
            length_m: dim(rec.length_m),
            beam_m: dim(rec.beam_m),
            draft_m: dim(rec.draft_m),
            speed_kn: T::lit(rec.sog_kn.max(0.0)),
            je_class: rec.je_class,
            estimated: EstimatedDimensions::default(),
        }
    }

    /// Fills missing dimensions with class medians and flags them.
    pub fn with_defaults(mut self) -> Self {
        let (l, b, d) = VesselCategory::from_ais_type(self.ais_type).default_dimensions();
        if self.length_m.is_none() {
            self.length_m = Some(T::lit(l));
            self.estimated.length = true;
        }
        if self.beam_m.is_none() {
            self.beam_m = Some(T::lit(b));
            self.estimated.beam = true;
        }
        if self.draft_m.is_none() {
            self.draft_m = Some(T::lit(d));
            self.estimated.draft = true;
        }
        self
    }

    pub fn category(&self) -> VesselCategory {
        VesselCategory::from_ais_type(self.ais_type)
    }

    pub fn is_radiating(&self) -> bool {
        self.speed_kn >= T::lit(MIN_RADIATING_SPEED_KN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> VesselRecord {
        VesselRecord {
            mmsi: 247_000_001,
            name: None,
            timestamp: "2025-07-01T00:00:00Z".parse().unwrap(),
            lat: 43.0,
            lon: 15.5,
            sog_kn: 14.0,
            cog_deg: Some(120.0),
            ais_type: 70,
            length_m: Some(190.0),
            beam_m: Some(30.0),
            draft_m: None,
            nav_status: 0,
            je_class: None,
        }
    }

    #[test]
    fn missing_draft_is_estimated() {
        let attrs = VesselAttributes::<f64>::from_record(&record());
        assert_eq!(attrs.draft_m, None);
        let filled = attrs.with_defaults();
        assert_eq!(filled.draft_m, Some(10.0));
        assert_eq!(filled.length_m, Some(190.0));
        assert!(filled.estimated.draft && !filled.estimated.length && filled.estimated.any());
    }

    #[test]
    fn zero_dimensions_count_as_missing() {
        let mut rec = record();
        rec.length_m = Some(0.0);
        assert_eq!(VesselAttributes::<f64>::from_record(&rec).length_m, None);
    }

    #[test]
    fn status_filtering() {
        let mut moored = record();
        moored.nav_status = 5;
        let mut anchored = record();
        anchored.nav_status = 1;
        let all = [record(), moored, anchored];
        assert_eq!(status_filter(&all, &[0]).len(), 1);
        assert_eq!(status_filter(&all, &[0, 1]).len(), 2);
        assert!(status_filter(&all, &[5]).is_empty());
    }

    #[test]
    fn categories() {
        assert_eq!(VesselCategory::from_ais_type(74), VesselCategory::Cargo);
        assert_eq!(VesselCategory::from_ais_type(89), VesselCategory::Tanker);
        assert_eq!(VesselCategory::from_ais_type(37), VesselCategory::Pleasure);
        assert_eq!(VesselCategory::from_ais_type(99), VesselCategory::Other);
    }
}
