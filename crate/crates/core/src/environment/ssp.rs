//! Seasonal sound-speed profiles built from temperature/salinity casts.

use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{mackenzie_speed, EnvError};
use crate::scalar::Scalar;

/// Meteorological season (Northern Hemisphere months).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    pub fn from_month(month: u32) -> Self {
        match month {
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            9..=11 => Season::Autumn,
            _ => Season::Winter,
        }
    }

    pub fn for_date(date: NaiveDate) -> Self {
        Self::from_month(date.month())
    }
}

impl FromStr for Season {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "winter" | "djf" => Ok(Season::Winter),
            "spring" | "mam" => Ok(Season::Spring),
            "summer" | "jja" => Ok(Season::Summer),
            "autumn" | "fall" | "son" => Ok(Season::Autumn),
            other => Err(EnvError::Format(format!("unknown season '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundSpeedProfile<T> {
    pub season: Season,
    pub depth_m: Vec<T>,
    pub temp_c: Vec<T>,
    pub sal_ppt: Vec<T>,
    pub speed_m_s: Vec<T>,
}

impl<T: Scalar> SoundSpeedProfile<T> {
    pub fn new(season: Season, samples: Vec<(T, T, T)>) -> Result<Self, EnvError> {
        if samples.is_empty() {
            return Err(EnvError::Format(format!("{season:?} profile has no samples")));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(EnvError::Format(format!(
                "{season:?} profile depths must be strictly increasing"
            )));
        }
        let mut p = Self {
            season,
            depth_m: Vec::with_capacity(samples.len()),
            temp_c: Vec::with_capacity(samples.len()),
            sal_ppt: Vec::with_capacity(samples.len()),
            speed_m_s: Vec::with_capacity(samples.len()),
        };
        for (d, t, s) in samples {
            p.speed_m_s.push(mackenzie_speed(t, s, d)?);
            p.depth_m.push(d);
            p.temp_c.push(t);
            p.sal_ppt.push(s);
        }
        Ok(p)
    }

    /// Sound speed at `depth_m`, linear between samples and constant beyond them.
    pub fn speed_at(&self, depth_m: T) -> T {
        let n = self.depth_m.len();
        if depth_m <= self.depth_m[0] {
            return self.speed_m_s[0];
        }
        if depth_m >= self.depth_m[n - 1] {
            return self.speed_m_s[n - 1];
        }
        let i = self.depth_m.partition_point(|&d| d <= depth_m) - 1;
        let t = (depth_m - self.depth_m[i]) / (self.depth_m[i + 1] - self.depth_m[i]);
        self.speed_m_s[i] + t * (self.speed_m_s[i + 1] - self.speed_m_s[i])
    }
}

#[derive(Debug, Deserialize)]
struct SspRow {
    season: String,
    depth_m: f64,
    temp_c: f64,
    sal_ppt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundSpeedProfiles<T> {
    profiles: BTreeMap<Season, SoundSpeedProfile<T>>,
}

impl<T: Scalar> SoundSpeedProfiles<T> {
    /// Reads `season,depth_m,temp_c,sal_ppt` rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, EnvError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut by_season: BTreeMap<Season, Vec<(T, T, T)>> = BTreeMap::new();
        for (i, row) in rdr.deserialize::<SspRow>().enumerate() {
            let row = row.map_err(|e| EnvError::Format(format!("SSP row {}: {e}", i + 2)))?;
            let season: Season = row.season.parse()?;
            by_season
                .entry(season)
                .or_default()
                .push((T::lit(row.depth_m), T::lit(row.temp_c), T::lit(row.sal_ppt)));
        }
        if by_season.is_empty() {
            return Err(EnvError::Format("SSP file has no rows".into()));
        }
        let profiles = by_season
            .into_iter()
            .map(|(s, mut rows)| {
                rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
                SoundSpeedProfile::new(s, rows).map(|p| (s, p))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { profiles })
    }

    pub fn get(&self, season: Season) -> Option<&SoundSpeedProfile<T>> {
        self.profiles.get(&season)
    }

    /// Profile for the season of `date`, or the first available one if that season is absent.
    pub fn for_date(&self, date: NaiveDate) -> &SoundSpeedProfile<T> {
        self.get(Season::for_date(date))
            .unwrap_or_else(|| self.profiles.values().next().expect("at least one profile"))
    }

    pub fn seasons(&self) -> Vec<Season> {
        self.profiles.keys().copied().collect()
    }
}
