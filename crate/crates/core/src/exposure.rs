//! Sound exposure from AIS track segments, speed-cap scenarios, region
//! summaries and model-minus-measurement differencing.
//!
//! A segment's exposure at a cell is `Δt·10^(RL/10)` (µPa²·s); the SEL of a
//! window is `10·log10` of the per-cell sum over segments.

use std::fmt::Write as _;
use std::io::Read;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::IndicatorBand;
use crate::environment::MpaPolygon;
use crate::geo::{local_distance_m, GeoError, LatLon};
use crate::propagation::{
    accumulate_sources, GridSpec, NoiseGrid, PropagationContext, PropagationError, SourceTask,
};
use crate::scalar::{db, Scalar};
use crate::sl::{SlModelId, SourceLevels, SourceModels};
use crate::vessel::{VesselAttributes, VesselRecord};

/// Reports further apart than this (s) do not form a segment.
pub const DEFAULT_GAP_THRESHOLD_S: f64 = 1800.0;

#[derive(Debug, Error)]
pub enum ExposureError {
    #[error("invalid exposure window: {0}")]
    InvalidWindow(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no grid cell centre lies inside the region")]
    EmptyRegion,
    #[error("point {lat},{lon} is outside the grid")]
    OutOfDomain { lat: f64, lon: f64 },
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Time between two reports of one vessel, represented at the midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSegment<T> {
    pub mmsi: u32,
    pub position: LatLon,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    /// Attributes as reported, speed averaged over the two reports.
    pub attributes: VesselAttributes<T>,
}

fn seconds_between(a: DateTime<Utc>, b: DateTime<Utc>) -> f64 {
    (b - a).num_milliseconds() as f64 / 1000.0
}

impl<T: Scalar> TrackSegment<T> {
    pub fn duration_s(&self) -> f64 {
        seconds_between(self.start, self.end)
    }

    /// Part of the segment inside `[start, end)`, in seconds.
    pub fn overlap_s(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> f64 {
        let (a, b) = (self.start.max(start), self.end.min(end));
        if b > a {
            seconds_between(a, b)
        } else {
            0.0
        }
    }
}

fn midpoint(a: LatLon, b: LatLon) -> LatLon {
    let mut dlon = b.lon - a.lon;
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let mut lon = a.lon + 0.5 * dlon;
    if lon > 180.0 {
        lon -= 360.0;
    } else if lon < -180.0 {
        lon += 360.0;
    }
    LatLon::new(0.5 * (a.lat + b.lat), lon)
}

/// Builds segments from consecutive reports of each vessel.
///
/// Records are sorted by `(mmsi, timestamp)` first. Of several reports with
/// the same key the last one in input order is kept. Pairs further apart than
/// `gap_threshold_s` yield nothing.
pub fn segmentize<T: Scalar>(records: &[VesselRecord], gap_threshold_s: f64) -> Vec<TrackSegment<T>> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| (records[i].mmsi, records[i].timestamp));
    let mut kept: Vec<&VesselRecord> = Vec::with_capacity(order.len());
    let mut duplicates = 0usize;
    for i in order {
        let r = &records[i];
        match kept.last_mut() {
            Some(last) if last.mmsi == r.mmsi && last.timestamp == r.timestamp => {
                *last = r;
                duplicates += 1;
            }
            _ => kept.push(r),
        }
    }
    if duplicates > 0 {
        log::info!("segmentize: {duplicates} duplicate (mmsi, timestamp) reports dropped");
    }

    let mut out = Vec::new();
    for w in kept.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.mmsi != b.mmsi {
            continue;
        }
        let dt = seconds_between(a.timestamp, b.timestamp);
        if !(dt > 0.0 && dt <= gap_threshold_s) {
            continue;
        }
        let mut attributes = VesselAttributes::<T>::from_record(a);
        let later = VesselAttributes::<T>::from_record(b);
        attributes.speed_kn = (attributes.speed_kn + later.speed_kn) * T::lit(0.5);
        attributes.length_m = attributes.length_m.or(later.length_m);
        attributes.beam_m = attributes.beam_m.or(later.beam_m);
        attributes.draft_m = attributes.draft_m.or(later.draft_m);
        attributes.je_class = attributes.je_class.or(later.je_class);
        out.push(TrackSegment {
            mmsi: a.mmsi,
            position: midpoint(LatLon::new(a.lat, a.lon), LatLon::new(b.lat, b.lon)),
            start: a.timestamp,
            end: b.timestamp,
            attributes,
        });
    }
    out
}

/// Time span and grid of an exposure computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub spec: GridSpec,
}

impl ExposureWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>, spec: GridSpec) -> Result<Self, ExposureError> {
        if end <= start {
            return Err(ExposureError::InvalidWindow(format!("end {end} is not after start {start}")));
        }
        Ok(Self { start, end, spec })
    }

    pub fn duration_s(&self) -> f64 {
        seconds_between(self.start, self.end)
    }
}

/// Speed limit applied inside a zone and a buffer around it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedCap {
    pub cap_kn: f64,
    pub zone: MpaPolygon,
    pub buffer_km: f64,
}

impl SpeedCap {
    pub fn new(cap_kn: f64, zone: MpaPolygon, buffer_km: f64) -> Result<Self, ExposureError> {
        if !(cap_kn > 0.0 && cap_kn.is_finite()) {
            return Err(ExposureError::InvalidScenario(format!("speed cap {cap_kn} kn must be positive")));
        }
        if !(buffer_km >= 0.0 && buffer_km.is_finite()) {
            return Err(ExposureError::InvalidScenario(format!("buffer {buffer_km} km must be non-negative")));
        }
        if zone.parts.is_empty() {
            return Err(GeoError::InvalidGeometry("scenario zone has no polygon".into()).into());
        }
        Ok(Self { cap_kn, zone, buffer_km })
    }

    pub fn applies_at(&self, p: LatLon) -> bool {
        self.zone.within_buffer(p, self.buffer_km * 1000.0)
    }

    /// Attributes with the speed capped where the cap applies; `None` if unchanged.
    pub fn capped<T: Scalar>(&self, seg: &TrackSegment<T>) -> Option<VesselAttributes<T>> {
        let cap = T::lit(self.cap_kn);
        (seg.attributes.speed_kn > cap && self.applies_at(seg.position)).then(|| VesselAttributes {
            speed_kn: cap,
            ..seg.attributes.clone()
        })
    }
}

/// Caps the speed of segments inside the scenario zone; durations and
/// positions are untouched.
pub fn apply_speed_cap<T: Scalar>(segments: &[TrackSegment<T>], cap: &SpeedCap) -> Vec<TrackSegment<T>> {
    segments
        .iter()
        .map(|s| match cap.capped(s) {
            Some(attributes) => TrackSegment {
                attributes,
                ..s.clone()
            },
            None => s.clone(),
        })
        .collect()
}

/// A segment left out of an exposure run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedSegment {
    pub index: usize,
    pub mmsi: u32,
    pub reason: String,
}

/// Exposure grids (µPa²·s) of one window.
#[derive(Debug, Clone)]
pub struct SelRun<T> {
    pub baseline: NoiseGrid<T>,
    pub scenario: Option<NoiseGrid<T>>,
    /// Segments that contributed.
    pub used: usize,
    pub skipped: Vec<SkippedSegment>,
}

/// Accumulates segment exposure over `window` with source levels from
/// `model` (Combined in production). Segments are clipped to the window.
/// With a scenario, a second grid is filled from the capped speeds using the
/// same propagation footprints.
pub fn sel_grid<T: Scalar>(
    ctx: &PropagationContext<'_, T>,
    models: &SourceModels<T>,
    model: SlModelId,
    segments: &[TrackSegment<T>],
    window: &ExposureWindow,
    scenario: Option<&SpeedCap>,
) -> Result<SelRun<T>, ExposureError> {
    if ctx.spec != window.spec {
        return Err(ExposureError::InvalidWindow("window grid differs from the propagation grid".into()));
    }
    let centers = ctx.band_centers().to_vec();
    let mut tasks = Vec::new();
    let mut task_segment = Vec::new();
    let mut skipped = Vec::new();
    let mut skip = |index: usize, seg: &TrackSegment<T>, reason: String| {
        skipped.push(SkippedSegment {
            index,
            mmsi: seg.mmsi,
            reason,
        })
    };

    for (index, seg) in segments.iter().enumerate() {
        let dt = seg.overlap_s(window.start, window.end);
        if dt <= 0.0 {
            continue;
        }
        let attrs = seg.attributes.clone().with_defaults();
        let base = match models.band_levels(&attrs, model, &centers) {
            Ok(l) => l,
            Err(e) => {
                skip(index, seg, e.to_string());
                continue;
            }
        };
        let mut variants: Vec<(SourceLevels<T>, T)> = vec![(base.clone(), T::lit(dt))];
        if let Some(cap) = scenario {
            let levels = match cap.capped(seg) {
                Some(capped) => match models.band_levels(&capped.with_defaults(), model, &centers) {
                    Ok(l) => l,
                    Err(e) => {
                        skip(index, seg, format!("capped speed: {e}"));
                        continue;
                    }
                },
                None => base,
            };
            variants.push((levels, T::lit(dt)));
        }
        let depth = match ctx.source_depth(seg.position, attrs.draft_m.map(|d| d.to_f64_lossy())) {
            Ok(d) => d,
            Err(e) => {
                skip(index, seg, e.to_string());
                continue;
            }
        };
        tasks.push(SourceTask {
            position: seg.position,
            depth_m: depth,
            variants,
        });
        task_segment.push(index);
    }

    let mut grids = vec![NoiseGrid::new(window.spec); if scenario.is_some() { 2 } else { 1 }];
    let failed = accumulate_sources(ctx, &tasks, &mut grids)?;
    for f in &failed {
        let index = task_segment[f.index];
        skip(index, &segments[index], f.reason.clone());
    }
    skipped.sort_by_key(|s| s.index);
    let scenario_grid = if scenario.is_some() { grids.pop() } else { None };
    Ok(SelRun {
        baseline: grids.pop().expect("baseline grid"),
        scenario: scenario_grid,
        used: tasks.len() - failed.len(),
        skipped,
    })
}

/// `10·log10` of the mean cell energy over cells whose centre lies in `zone`.
/// `Ok(None)` when no energy reached the region.
pub fn region_energetic_mean<T: Scalar>(
    grid: &NoiseGrid<T>,
    band: IndicatorBand,
    zone: &MpaPolygon,
) -> Result<Option<T>, ExposureError> {
    let energy = grid.energy(band);
    let mut sum = T::zero();
    let mut n = 0usize;
    for (i, &e) in energy.iter().enumerate() {
        if zone.contains(grid.spec.cell_center(i)) {
            sum += e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(ExposureError::EmptyRegion);
    }
    let mean = sum / T::from_usize(n).expect("cell count");
    Ok((mean > T::zero()).then(|| db(mean)))
}

/// Column-name prefix of a level table (`spl` or `sel`).
fn band_columns(prefix: &str) -> [String; 3] {
    IndicatorBand::ALL.map(|b| format!("{prefix}_{}_db", b.tag()))
}

/// One row of a level table: a cell centre and its three indicator levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub lat: f64,
    pub lon: f64,
    pub levels: [Option<f64>; 3],
}

/// Grid levels in the exported CSV shape `lat,lon,{p}_63_db,{p}_125_db,{p}_bb_db`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    pub prefix: String,
    pub rows: Vec<LevelRow>,
}

impl LevelTable {
    pub fn from_grid<T: Scalar>(grid: &NoiseGrid<T>, prefix: &str) -> Self {
        let levels: Vec<Vec<Option<T>>> = IndicatorBand::ALL.iter().map(|&b| grid.levels_db(b)).collect();
        let rows = (0..grid.spec.len())
            .map(|i| {
                let c = grid.spec.cell_center(i);
                LevelRow {
                    lat: c.lat,
                    lon: c.lon,
                    levels: [0, 1, 2].map(|k| levels[k][i].map(|v| v.to_f64_lossy())),
                }
            })
            .collect();
        Self {
            prefix: prefix.to_string(),
            rows,
        }
    }

    /// Reads a table written by [`LevelTable::to_csv`] or [`NoiseGrid::to_csv`].
    pub fn read_csv<R: Read>(reader: R, prefix: &str) -> Result<Self, ExposureError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| ExposureError::Schema(format!("unreadable header: {e}")))?
            .clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| ExposureError::Schema(format!("missing column '{name}'")))
        };
        let (lat_i, lon_i) = (find("lat")?, find("lon")?);
        let cols = band_columns(prefix);
        let band_i = [find(&cols[0])?, find(&cols[1])?, find(&cols[2])?];
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n + 2;
            let rec = rec.map_err(|e| ExposureError::Schema(format!("line {line}: {e}")))?;
            let num = |i: usize, what: &str| -> Result<Option<f64>, ExposureError> {
                let s = rec.get(i).unwrap_or("");
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| ExposureError::Schema(format!("line {line}: bad {what} '{s}'")))
            };
            let lat = num(lat_i, "lat")?.ok_or_else(|| ExposureError::Schema(format!("line {line}: empty lat")))?;
            let lon = num(lon_i, "lon")?.ok_or_else(|| ExposureError::Schema(format!("line {line}: empty lon")))?;
            rows.push(LevelRow {
                lat,
                lon,
                levels: [num(band_i[0], &cols[0])?, num(band_i[1], &cols[1])?, num(band_i[2], &cols[2])?],
            });
        }
        Ok(Self {
            prefix: prefix.to_string(),
            rows,
        })
    }

    /// Same formatting as [`NoiseGrid::to_csv`]: 6 decimals for coordinates,
    /// 3 for levels, empty fields for absent levels.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 48);
        out.push_str("lat,lon");
        for c in band_columns(&self.prefix) {
            out.push(',');
            out.push_str(&c);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:.6},{:.6}", r.lat, r.lon);
            for l in r.levels {
                match l {
                    Some(v) => {
                        let _ = write!(out, ",{v:.3}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Row whose cell contains `(lat, lon)`: the nearest centre, provided the
    /// point lies within half a cell of the table's outer centres.
    pub fn nearest(&self, lat: f64, lon: f64) -> Result<&LevelRow, ExposureError> {
        let out = || ExposureError::OutOfDomain { lat, lon };
        if self.rows.is_empty() {
            return Err(out());
        }
        let spacing = |vals: Vec<f64>| {
            let mut v = vals;
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let step = v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            (v[0], v[v.len() - 1], step)
        };
        let (lat_lo, lat_hi, dlat) = spacing(self.rows.iter().map(|r| r.lat).collect());
        let (lon_lo, lon_hi, dlon) = spacing(self.rows.iter().map(|r| r.lon).collect());
        let cell = match (dlat.is_finite(), dlon.is_finite()) {
            (true, true) => dlat.max(dlon),
            (true, false) => dlat,
            (false, true) => dlon,
            (false, false) => 2e-6,
        };
        let half = 0.5 * cell + 1e-9;
        if lat < lat_lo - half || lat > lat_hi + half || lon < lon_lo - half || lon > lon_hi + half {
            return Err(out());
        }
        let p = LatLon::new(lat, lon);
        self.rows
            .iter()
            .min_by(|a, b| {
                local_distance_m(p, LatLon::new(a.lat, a.lon)).total_cmp(&local_distance_m(p, LatLon::new(b.lat, b.lon)))
            })
            .ok_or_else(out)
    }
}

/// Measured levels at a recorder, labelled (e.g. by date).
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub label: String,
    pub lat: f64,
    pub lon: f64,
    pub levels: [Option<f64>; 3],
}

/// Reads `date,lat,lon,sel_63_db,sel_125_db,sel_bb_db`.
pub fn read_measurements<R: Read>(reader: R) -> Result<Vec<Measurement>, ExposureError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| ExposureError::Schema(format!("unreadable header: {e}")))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ExposureError::Schema(format!("missing column '{name}'")))
    };
    let cols = band_columns("sel");
    let idx = [find("date")?, find("lat")?, find("lon")?, find(&cols[0])?, find(&cols[1])?, find(&cols[2])?];
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| ExposureError::Schema(format!("line {line}: {e}")))?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let num = |i: usize| -> Result<Option<f64>, ExposureError> {
            let s = field(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| ExposureError::Schema(format!("line {line}: bad number '{s}'")))
        };
        let coord = |i: usize| num(i)?.ok_or_else(|| ExposureError::Schema(format!("line {line}: empty coordinate")));
        out.push(Measurement {
            label: field(0).to_string(),
            lat: coord(1)?,
            lon: coord(2)?,
            levels: [num(3)?, num(4)?, num(5)?],
        });
    }
    Ok(out)
}

/// Modeled, measured and modeled-minus-measured levels at one recorder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub label: String,
    pub modeled: [Option<f64>; 3],
    pub measured: [Option<f64>; 3],
    pub difference: [Option<f64>; 3],
}

/// Differences the modeled level at the cell nearest the recorder against the
/// measurement, per band.
pub fn validate_against_measurement(
    modeled: &LevelTable,
    measured: &Measurement,
) -> Result<ValidationRow, ExposureError> {
    let row = modeled.nearest(measured.lat, measured.lon)?;
    let difference = [0, 1, 2].map(|k| match (row.levels[k], measured.levels[k]) {
        (Some(m), Some(x)) => Some(m - x),
        _ => None,
    });
    Ok(ValidationRow {
        label: measured.label.clone(),
        modeled: row.levels,
        measured: measured.levels,
        difference,
    })
}

/// Difference table: for each label a measured, a modeled and a difference
/// row, levels to two decimals.
pub fn validation_csv(rows: &[ValidationRow]) -> String {
    let fmt = |v: Option<f64>| match v {
        // Avoid printing "-0.00".
        Some(x) if x.abs() < 0.005 => "0.00".to_string(),
        Some(x) => format!("{x:.2}"),
        None => String::new(),
    };
    let mut out = String::from("date,source,sel_63_db,sel_125_db,sel_bb_db\n");
    for r in rows {
        for (source, vals) in [("measured", r.measured), ("modeled", r.modeled), ("difference", r.difference)] {
            let _ = writeln!(out, "{},{source},{},{},{}", r.label, fmt(vals[0]), fmt(vals[1]), fmt(vals[2]));
        }
    }
    out
}

/// Energetic mean of each band over a zone, baseline against scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub zone: String,
    pub baseline_db: [Option<f64>; 3],
    pub scenario_db: Option<[Option<f64>; 3]>,
}

impl RegionSummary {
    pub fn delta_db(&self) -> Option<[Option<f64>; 3]> {
        let s = self.scenario_db?;
        Some([0, 1, 2].map(|k| match (self.baseline_db[k], s[k]) {
            (Some(b), Some(s)) => Some(s - b),
            _ => None,
        }))
    }
}

pub fn summarize_region<T: Scalar>(run: &SelRun<T>, zone: &MpaPolygon) -> Result<RegionSummary, ExposureError> {
    let means = |g: &NoiseGrid<T>| -> Result<[Option<f64>; 3], ExposureError> {
        let mut out = [None; 3];
        for b in IndicatorBand::ALL {
            out[b.index()] = region_energetic_mean(g, b, zone)?.map(|v| v.to_f64_lossy());
        }
        Ok(out)
    };
    Ok(RegionSummary {
        zone: if zone.name.is_empty() { zone.id.clone() } else { zone.name.clone() },
        baseline_db: means(&run.baseline)?,
        scenario_db: run.scenario.as_ref().map(means).transpose()?,
    })
}
