//! SPL map and SEL products, shared by the command line and the HTTP service
//! so that both produce identical grids from identical inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::IndicatorBand;
use crate::environment::{load_mpas, BathymetryGrid, EnvError, EnvironmentField, MpaPolygon, SoundSpeedProfiles, ValueConvention};
use crate::exposure::{
    segmentize, sel_grid, summarize_region, ExposureError, ExposureWindow, RegionSummary, SelRun, SpeedCap,
    DEFAULT_GAP_THRESHOLD_S,
};
use crate::geo::{BoundingBox, LatLon};
use crate::propagation::{accumulate, GridSpec, NoiseGrid, PointSource, PropagationContext, PropagationError, RayFanConfig};
use crate::scalar::Scalar;
use crate::sl::srv::SrvCoefficients;
use crate::sl::{SlError, SlModelId, SourceLevels, SourceModels};
use crate::vessel::{status_filter, EstimatedDimensions, VesselAttributes, VesselRecord, DISPLAYED_STATUSES};

#[derive(Debug, Error)]
pub enum ProductError {
    #[error(transparent)]
    Environment(#[from] EnvError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Exposure(#[from] ExposureError),
    #[error("configuration error: {0}")]
    Config(String),
}

/// Grid, propagation and exposure settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProductConfig {
    pub cell_deg: f64,
    pub gap_threshold_s: f64,
    /// Source model for exposure; Combined unless pinned for testing.
    pub sel_model: SlModelId,
    pub propagation: RayFanConfig,
}

impl Default for ProductConfig {
    fn default() -> Self {
        Self {
            cell_deg: 0.01,
            gap_threshold_s: DEFAULT_GAP_THRESHOLD_S,
            sel_model: SlModelId::Combined,
            propagation: RayFanConfig::default(),
        }
    }
}

impl ProductConfig {
    pub fn validate(&self) -> Result<(), ProductError> {
        if !(self.cell_deg > 0.0 && self.cell_deg <= 1.0) {
            return Err(ProductError::Config(format!("cell_deg {} must be in (0, 1]", self.cell_deg)));
        }
        if !(self.gap_threshold_s > 0.0) {
            return Err(ProductError::Config("gap_threshold_s must be positive".into()));
        }
        self.propagation.validate()?;
        Ok(())
    }

    pub fn grid(&self, extent: BoundingBox) -> Result<GridSpec, ProductError> {
        Ok(GridSpec::new(extent, self.cell_deg)?)
    }
}

/// Input files describing the medium. Relative paths resolve against the
/// directory given to [`EnvironmentPaths::load`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentPaths {
    pub bathymetry: PathBuf,
    #[serde(default)]
    pub bathymetry_convention: Option<ValueConvention>,
    #[serde(default)]
    pub sound_speed: Option<PathBuf>,
    #[serde(default)]
    pub mpas: Option<PathBuf>,
}

/// Loaded environment plus the MPA layer.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    pub field: EnvironmentField<T>,
    pub mpas: Vec<MpaPolygon>,
}

impl EnvironmentPaths {
    pub fn load<T: Scalar>(&self, base: Option<&Path>) -> Result<Environment<T>, EnvError> {
        let resolve = |p: &Path| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };
        let bathy = BathymetryGrid::load(&resolve(&self.bathymetry), self.bathymetry_convention)?;
        let mut field = EnvironmentField::new(bathy);
        if let Some(p) = &self.sound_speed {
            let file = std::fs::File::open(resolve(p))?;
            field = field.with_sound_speed(SoundSpeedProfiles::read_csv(file)?);
        }
        let mpas = match &self.mpas {
            Some(p) => load_mpas(&std::fs::read_to_string(resolve(p))?)?,
            None => Vec::new(),
        };
        Ok(Environment { field, mpas })
    }
}

/// Coefficient files for the table-driven models. Files add classes to the
/// built-in tables and replace classes of the same name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelPaths {
    /// Start from the bundled synthetic AQUO and SRV placeholder tables.
    pub placeholders: bool,
    /// AQUO coefficients, `class,freq_hz,term,value`.
    pub aquo: Option<PathBuf>,
    /// Raw SRV regression coefficients; smoothed on load.
    pub srv: Option<PathBuf>,
}

impl Default for ModelPaths {
    fn default() -> Self {
        Self {
            placeholders: true,
            aquo: None,
            srv: None,
        }
    }
}

impl ModelPaths {
    pub fn load<T: Scalar>(&self, base: Option<&Path>) -> Result<SourceModels<T>, SlError> {
        let resolve = |p: &Path| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };
        let open = |p: &Path| {
            std::fs::File::open(resolve(p)).map_err(|e| SlError::Config(format!("{}: {e}", p.display())))
        };
        let mut models = if self.placeholders {
            SourceModels::with_placeholders()
        } else {
            SourceModels::builtin()
        };
        if let Some(p) = &self.aquo {
            models.aquo.load_csv(open(p)?)?;
        }
        if let Some(p) = &self.srv {
            models.srv = Some(SrvCoefficients::from_raw_csv(open(p)?)?);
        }
        Ok(models)
    }
}

/// Level per indicator band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandTriple {
    #[serde(rename = "63")]
    pub tob63: f64,
    #[serde(rename = "125")]
    pub tob125: f64,
    pub bb: f64,
}

impl BandTriple {
    pub fn get(&self, band: IndicatorBand) -> f64 {
        match band {
            IndicatorBand::Tob63 => self.tob63,
            IndicatorBand::Tob125 => self.tob125,
            IndicatorBand::Bb20To2000 => self.bb,
        }
    }

    /// Indicator levels from levels on the broadband centres.
    pub fn from_levels<T: Scalar>(levels: &SourceLevels<T>) -> Self {
        let at = |f: f64| {
            levels
                .centers_hz
                .iter()
                .position(|c| (c.to_f64_lossy() - f).abs() < 1e-9)
                .map(|i| levels.levels_db[i].to_f64_lossy())
                .unwrap_or(f64::NAN)
        };
        Self {
            tob63: at(63.0),
            tob125: at(125.0),
            bb: levels.total_db().to_f64_lossy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlStatus {
    Ok,
    Unsupported,
    NonRadiating,
    Error,
}

/// A vessel with its estimated source level under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselEstimate {
    pub mmsi: u32,
    pub name: Option<String>,
    pub timestamp: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
    pub sog_kn: f64,
    pub cog_deg: Option<f64>,
    pub ais_type: u8,
    pub nav_status: u8,
    pub category: String,
    pub length_m: Option<f64>,
    pub beam_m: Option<f64>,
    pub draft_m: Option<f64>,
    pub estimated: EstimatedDimensions,
    pub model: SlModelId,
    pub sl_status: SlStatus,
    /// Source level (dB re 1 µPa² at 1 m); absent unless `sl_status` is `ok`.
    pub sl_db: Option<BandTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sl_note: Option<String>,
}

/// Source levels of `rec` on the broadband centres under `model`, with the
/// panel payload describing it.
pub fn estimate_vessel<T: Scalar>(
    models: &SourceModels<T>,
    model: SlModelId,
    rec: &VesselRecord,
) -> (VesselEstimate, Option<SourceLevels<T>>) {
    let attrs = VesselAttributes::<T>::from_record(rec).with_defaults();
    let result = models.band_levels(&attrs, model, &crate::bands::broadband_centers());
    let (sl_status, note) = match &result {
        Ok(_) => (SlStatus::Ok, None),
        Err(e @ SlError::Unsupported { .. }) => (SlStatus::Unsupported, Some(e.to_string())),
        Err(e @ SlError::NonRadiating(_)) => (SlStatus::NonRadiating, Some(e.to_string())),
        Err(e) => (SlStatus::Error, Some(e.to_string())),
    };
    let levels = result.ok();
    let dim = |d: Option<T>| d.map(|v| v.to_f64_lossy());
    let estimate = VesselEstimate {
        mmsi: rec.mmsi,
        name: rec.name.clone(),
        timestamp: rec.timestamp,
        lat: rec.lat,
        lon: rec.lon,
        sog_kn: rec.sog_kn,
        cog_deg: rec.cog_deg,
        ais_type: rec.ais_type,
        nav_status: rec.nav_status,
        category: attrs.category().as_str().to_string(),
        length_m: dim(attrs.length_m),
        beam_m: dim(attrs.beam_m),
        draft_m: dim(attrs.draft_m),
        estimated: attrs.estimated,
        model,
        sl_status,
        sl_db: levels.as_ref().map(BandTriple::from_levels),
        sl_note: note,
    };
    (estimate, levels)
}

/// Latest report of each vessel at or before `at` (all reports when `None`),
/// optionally no older than `max_age_s`; sorted by MMSI.
pub fn latest_per_vessel(records: &[VesselRecord], at: Option<DateTime<Utc>>, max_age_s: Option<f64>) -> Vec<VesselRecord> {
    let mut latest: BTreeMap<u32, &VesselRecord> = BTreeMap::new();
    for r in records {
        if at.is_some_and(|t| r.timestamp > t) {
            continue;
        }
        match latest.get(&r.mmsi) {
            Some(prev) if prev.timestamp > r.timestamp => {}
            _ => {
                latest.insert(r.mmsi, r);
            }
        }
    }
    let reference = at.or_else(|| latest.values().map(|r| r.timestamp).max());
    latest
        .into_values()
        .filter(|r| match (max_age_s, reference) {
            (Some(age), Some(t)) => ((t - r.timestamp).num_milliseconds() as f64) / 1000.0 < age,
            _ => true,
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedVessel {
    pub mmsi: u32,
    pub reason: String,
}

/// Instantaneous SPL grid with the vessels that produced it.
#[derive(Debug, Clone)]
pub struct MapProduct<T> {
    pub grid: NoiseGrid<T>,
    pub vessels: Vec<VesselEstimate>,
    pub skipped: Vec<SkippedVessel>,
    /// Vessel count per category.
    pub counts: BTreeMap<String, usize>,
}

/// SPL map of a snapshot: one point source per record at its reported position.
///
/// The caller reduces reports to one per vessel. Records with navigation
/// status outside `{0, 1}` are dropped.
pub fn spl_map<T: Scalar>(
    env: &EnvironmentField<T>,
    models: &SourceModels<T>,
    cfg: &ProductConfig,
    model: SlModelId,
    extent: BoundingBox,
    records: &[VesselRecord],
) -> Result<MapProduct<T>, ProductError> {
    cfg.validate()?;
    let ctx = PropagationContext::new(env, &cfg.propagation, cfg.grid(extent)?)?;
    let records = status_filter(records, &DISPLAYED_STATUSES);
    let mut vessels = Vec::with_capacity(records.len());
    let mut sources = Vec::new();
    let mut source_mmsi = Vec::new();
    let mut skipped = Vec::new();
    let mut counts = BTreeMap::new();
    for rec in &records {
        let (est, levels) = estimate_vessel(models, model, rec);
        *counts.entry(est.category.clone()).or_insert(0) += 1;
        match levels {
            Some(levels) => match ctx.source_depth(LatLon::new(rec.lat, rec.lon), est.draft_m) {
                Ok(depth_m) => {
                    sources.push(PointSource {
                        position: LatLon::new(rec.lat, rec.lon),
                        depth_m,
                        levels,
                    });
                    source_mmsi.push(rec.mmsi);
                }
                Err(e) => skipped.push(SkippedVessel {
                    mmsi: rec.mmsi,
                    reason: e.to_string(),
                }),
            },
            None => skipped.push(SkippedVessel {
                mmsi: rec.mmsi,
                reason: est.sl_note.clone().unwrap_or_default(),
            }),
        }
        vessels.push(est);
    }
    let mut grid = NoiseGrid::new(ctx.spec);
    for s in accumulate(&ctx, &sources, &mut grid)? {
        skipped.push(SkippedVessel {
            mmsi: source_mmsi[s.index],
            reason: s.reason,
        });
    }
    Ok(MapProduct {
        grid,
        vessels,
        skipped,
        counts,
    })
}

/// An exposure request over a window and extent.
#[derive(Debug, Clone)]
pub struct SelRequest {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub extent: BoundingBox,
    pub scenario: Option<SpeedCap>,
    /// Zone for the energetic-mean summary; defaults to the scenario zone.
    pub summary_zone: Option<MpaPolygon>,
}

#[derive(Debug, Clone)]
pub struct SelProduct<T> {
    pub run: SelRun<T>,
    pub segments: usize,
    pub summary: Option<RegionSummary>,
}

impl<T: Scalar> SelProduct<T> {
    pub fn baseline_csv(&self) -> String {
        self.run.baseline.to_csv("sel")
    }

    pub fn scenario_csv(&self) -> Option<String> {
        self.run.scenario.as_ref().map(|g| g.to_csv("sel"))
    }
}

/// SEL grids for a window from raw reports (status filter, segmentation,
/// exposure accumulation and optional zone summary).
pub fn sel_product<T: Scalar>(
    env: &EnvironmentField<T>,
    models: &SourceModels<T>,
    cfg: &ProductConfig,
    records: &[VesselRecord],
    req: &SelRequest,
) -> Result<SelProduct<T>, ProductError> {
    cfg.validate()?;
    let spec = cfg.grid(req.extent)?;
    let window = ExposureWindow::new(req.start, req.end, spec)?;
    let ctx = PropagationContext::new(env, &cfg.propagation, spec)?;
    let records = status_filter(records, &DISPLAYED_STATUSES);
    let segments = segmentize::<T>(&records, cfg.gap_threshold_s);
    let run = sel_grid(&ctx, models, cfg.sel_model, &segments, &window, req.scenario.as_ref())?;
    let zone = req.summary_zone.as_ref().or(req.scenario.as_ref().map(|s| &s.zone));
    let summary = zone.map(|z| summarize_region(&run, z)).transpose()?;
    Ok(SelProduct {
        run,
        segments: segments.len(),
        summary,
    })
}
