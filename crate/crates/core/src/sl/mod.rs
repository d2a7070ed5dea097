//! Vessel source-level models and the energetic-mean Combined model.
//!
//! | model | cargo 70–79 | tanker 80–89 | passenger 60–69 | fishing 30 | pleasure 37 | sailing 36 |
//! |-------|:-:|:-:|:-:|:-:|:-:|:-:|
//! | RANDI | ✓ | ✓ | ✓ |   |   |   |
//! | JE    | ✓ | ✓ | ✓ | ✓ |   |   |
//! | LBDS  | ✓ | ✓ | ✓ |   |   |   |
//! | AQUO  | ✓ | ✓ | ✓ | ✓ | ✓ | ✓ |
//! | SRV   |   |   |   |   | ✓ | ✓ |
//!
//! AIS types outside those six columns are served only by JE, through its
//! own class table (tug, dredger, naval, government, other).

pub mod aquo;
pub mod je;
pub mod lbds;
pub mod randi;
pub mod srv;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::{band_edges, integrate_band, BandError, IndicatorBand};
use crate::scalar::{db, from_db, Scalar};
use crate::vessel::{VesselAttributes, VesselCategory};

pub use aquo::{AquoClass, AquoClassParams, AquoTables};
pub use je::{JeClass, JeClassParams};
pub use srv::{SrvClass, SrvCoefficients};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlError {
    #[error("vessel attribute '{0}' is missing")]
    MissingAttribute(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{model} does not cover AIS type {ais_type}")]
    Unsupported { model: &'static str, ais_type: u8 },
    #[error("vessel speed {0} kn is below the radiating threshold")]
    NonRadiating(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Band(#[from] BandError),
}

impl SlError {
    pub fn is_unsupported(&self) -> bool {
        matches!(self, SlError::Unsupported { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlModelId {
    Randi,
    Je,
    Lbds,
    Aquo,
    Srv,
    Combined,
}

impl SlModelId {
    /// The five individual models, in display order.
    pub const INDIVIDUAL: [SlModelId; 5] = [Self::Randi, Self::Je, Self::Lbds, Self::Aquo, Self::Srv];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Randi => "RANDI",
            Self::Je => "JE",
            Self::Lbds => "LBDS",
            Self::Aquo => "AQUO",
            Self::Srv => "SRV",
            Self::Combined => "Combined",
        }
    }
}

impl fmt::Display for SlModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlModelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "randi" => Ok(Self::Randi),
            "je" | "jomopans" | "jomopans-echo" => Ok(Self::Je),
            "lbds" => Ok(Self::Lbds),
            "aquo" => Ok(Self::Aquo),
            "srv" => Ok(Self::Srv),
            "combined" => Ok(Self::Combined),
            other => Err(format!("unknown source model '{other}'")),
        }
    }
}

/// Model-specific class of a vessel.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Randi(VesselCategory),
    Je(JeClass),
    Lbds(VesselCategory),
    Aquo(AquoClass),
    Srv(SrvClass),
    Combined(Vec<SlModelId>),
    Unsupported,
}

impl Classification {
    pub fn is_supported(&self) -> bool {
        !matches!(self, Classification::Unsupported)
    }
}

fn is_large_commercial(ais_type: u8) -> bool {
    (60..=89).contains(&ais_type)
}

/// Class of `v` under `model`, or `Unsupported` where the model has no coverage.
pub fn classify<T: Scalar>(v: &VesselAttributes<T>, model: SlModelId) -> Classification {
    let length = v.length_m.map(|l| l.to_f64_lossy());
    let ty = v.ais_type;
    match model {
        SlModelId::Randi if is_large_commercial(ty) => Classification::Randi(v.category()),
        SlModelId::Lbds if is_large_commercial(ty) => Classification::Lbds(v.category()),
        SlModelId::Je if ty != 36 && ty != 37 => {
            let class = v
                .je_class
                .and_then(JeClass::new)
                .unwrap_or_else(|| JeClass::from_ais(ty, length, v.speed_kn.to_f64_lossy()));
            Classification::Je(class)
        }
        SlModelId::Aquo => AquoClass::from_ais(ty, length)
            .map(Classification::Aquo)
            .unwrap_or(Classification::Unsupported),
        SlModelId::Srv => SrvClass::from_ais(ty)
            .map(Classification::Srv)
            .unwrap_or(Classification::Unsupported),
        SlModelId::Combined => {
            let members: Vec<SlModelId> = SlModelId::INDIVIDUAL
                .into_iter()
                .filter(|&m| classify(v, m).is_supported())
                .collect();
            if members.is_empty() {
                Classification::Unsupported
            } else {
                Classification::Combined(members)
            }
        }
        _ => Classification::Unsupported,
    }
}

/// Per-band source levels (dB re 1 µPa² at 1 m) on a set of band centres.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceLevels<T> {
    pub centers_hz: Vec<T>,
    pub levels_db: Vec<T>,
}

impl<T: Scalar> SourceLevels<T> {
    /// Energetic sum over the carried bands.
    pub fn total_db(&self) -> T {
        db(self.levels_db.iter().map(|&l| from_db(l)).sum::<T>())
    }

    pub fn shifted(&self, delta_db: T) -> Self {
        Self {
            centers_hz: self.centers_hz.clone(),
            levels_db: self.levels_db.iter().map(|&l| l + delta_db).collect(),
        }
    }
}

/// Loaded coefficient data for all models; immutable after construction.
#[derive(Debug, Clone)]
pub struct SourceModels<T> {
    pub aquo: AquoTables<T>,
    pub srv: Option<SrvCoefficients<T>>,
}

impl<T: Scalar> Default for SourceModels<T> {
    fn default() -> Self {
        Self::builtin()
    }
}

impl<T: Scalar> SourceModels<T> {
    /// Built-in tables only: AQUO Cargo, no SRV coefficients.
    pub fn builtin() -> Self {
        Self {
            aquo: AquoTables::builtin(),
            srv: None,
        }
    }

    /// Built-in tables plus the bundled synthetic AQUO and SRV placeholders.
    pub fn with_placeholders() -> Self {
        let mut aquo = AquoTables::builtin();
        aquo.load_csv(include_str!("../../data/aquo_placeholder.csv").as_bytes())
            .expect("bundled AQUO placeholder parses");
        Self {
            aquo,
            srv: Some(SrvCoefficients::placeholder()),
        }
    }

    /// Spectral density (dB re 1 µPa²/Hz at 1 m) for a PSD-type model.
    pub fn psd_db(&self, v: &VesselAttributes<T>, model: SlModelId, f: T) -> Result<T, SlError> {
        let unsupported = SlError::Unsupported {
            model: model.as_str(),
            ais_type: v.ais_type,
        };
        match classify(v, model) {
            Classification::Randi(_) => randi::randi_psd(v, f),
            Classification::Je(class) => je::je_psd_for_class(class, v, f),
            Classification::Aquo(class) => aquo::aquo_psd_for_class(&self.aquo, class, v, f),
            Classification::Srv(class) => srv::srv_psd_for_class(self.srv.as_ref(), class, v, f),
            Classification::Lbds(_) | Classification::Combined(_) => Err(SlError::Domain(format!(
                "{model} has no spectral density representation"
            ))),
            Classification::Unsupported => Err(unsupported),
        }
    }

    /// Source levels of one model on the given one-third-octave centres.
    pub fn band_levels(
        &self,
        v: &VesselAttributes<T>,
        model: SlModelId,
        centers_hz: &[f64],
    ) -> Result<SourceLevels<T>, SlError> {
        if !v.is_radiating() {
            return Err(SlError::NonRadiating(v.speed_kn.to_f64_lossy()));
        }
        if model == SlModelId::Combined {
            return self.combined_band_levels(v, centers_hz).map(|(l, _)| l);
        }
        let class = classify(v, model);
        if !class.is_supported() {
            return Err(SlError::Unsupported {
                model: model.as_str(),
                ais_type: v.ais_type,
            });
        }
        let mut levels = Vec::with_capacity(centers_hz.len());
        for &c in centers_hz {
            let band = band_edges(T::lit(c))?;
            let level = if let Classification::Lbds(_) = class {
                lbds::lbds_band(v, &band)?
            } else {
                let energy = integrate_band(&band, |f| self.psd_db(v, model, f))?;
                db(energy)
            };
            levels.push(level);
        }
        Ok(SourceLevels {
            centers_hz: centers_hz.iter().map(|&c| T::lit(c)).collect(),
            levels_db: levels,
        })
    }

    /// Combined model: per-band energetic mean over supporting models.
    ///
    /// Models that fail for this vessel (as opposed to not covering it) are
    /// dropped from the mean and reported in the log.
    pub fn combined_band_levels(
        &self,
        v: &VesselAttributes<T>,
        centers_hz: &[f64],
    ) -> Result<(SourceLevels<T>, Vec<SlModelId>), SlError> {
        let Classification::Combined(candidates) = classify(v, SlModelId::Combined) else {
            return Err(SlError::Unsupported {
                model: SlModelId::Combined.as_str(),
                ais_type: v.ais_type,
            });
        };
        let mut used = Vec::new();
        let mut acc = vec![T::zero(); centers_hz.len()];
        for model in candidates {
            match self.band_levels(v, model, centers_hz) {
                Ok(levels) => {
                    for (a, l) in acc.iter_mut().zip(&levels.levels_db) {
                        *a += from_db(*l);
                    }
                    used.push(model);
                }
                Err(e) => log::debug!("Combined: {model} skipped for MMSI {}: {e}", v.mmsi),
            }
        }
        if used.is_empty() {
            return Err(SlError::Unsupported {
                model: SlModelId::Combined.as_str(),
                ais_type: v.ais_type,
            });
        }
        let m = T::from_usize(used.len()).expect("small count");
        Ok((
            SourceLevels {
                centers_hz: centers_hz.iter().map(|&c| T::lit(c)).collect(),
                levels_db: acc.into_iter().map(|e| db(e / m)).collect(),
            },
            used,
        ))
    }

    /// Source level in an indicator band (dB re 1 µPa² at 1 m).
    pub fn source_band_level(
        &self,
        v: &VesselAttributes<T>,
        model: SlModelId,
        band: IndicatorBand,
    ) -> Result<T, SlError> {
        Ok(self.band_levels(v, model, &band.centers())?.total_db())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vessel(ais_type: u8) -> VesselAttributes<f64> {
        VesselAttributes::new(ais_type, 180.0, 14.0).with_beam_draft(28.0, 10.0)
    }

    #[test]
    fn table_coverage_spot_checks() {
        assert!(classify(&vessel(70), SlModelId::Randi).is_supported());
        assert_eq!(classify(&vessel(37), SlModelId::Randi), Classification::Unsupported);
        let mut cruise = vessel(62);
        cruise.length_m = Some(150.0);
        assert_eq!(classify(&cruise, SlModelId::Je), Classification::Je(JeClass::CRUISE));
    }

    #[test]
    fn cargo_combined_uses_four_models() {
        let models = SourceModels::<f64>::with_placeholders();
        let (_, used) = models
            .combined_band_levels(&vessel(70), &IndicatorBand::Tob63.centers())
            .unwrap();
        assert_eq!(
            used,
            vec![SlModelId::Randi, SlModelId::Je, SlModelId::Lbds, SlModelId::Aquo]
        );
    }

    #[test]
    fn combined_is_mean_of_members() {
        let models = SourceModels::<f64>::builtin();
        let v = vessel(80);
        let mut members = Vec::new();
        for m in [SlModelId::Randi, SlModelId::Je, SlModelId::Lbds, SlModelId::Aquo] {
            members.push(models.source_band_level(&v, m, IndicatorBand::Tob125).unwrap());
        }
        let combined = models
            .source_band_level(&v, SlModelId::Combined, IndicatorBand::Tob125)
            .unwrap();
        let expected = crate::scalar::energetic_mean(&members).unwrap();
        assert!((combined - expected).abs() < 1e-9);
        let lo = members.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = members.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(combined >= lo && combined <= hi);
    }

    #[test]
    fn unsupported_and_non_radiating() {
        let models = SourceModels::<f64>::builtin();
        let err = models
            .source_band_level(&vessel(37), SlModelId::Randi, IndicatorBand::Tob63)
            .unwrap_err();
        assert!(err.is_unsupported());
        let mut slow = vessel(70);
        slow.speed_kn = 0.2;
        assert!(matches!(
            models.source_band_level(&slow, SlModelId::Randi, IndicatorBand::Tob63),
            Err(SlError::NonRadiating(_))
        ));
        // A pleasure craft without SRV/leisure tables has no working model.
        let err = models
            .source_band_level(&vessel(37), SlModelId::Combined, IndicatorBand::Tob63)
            .unwrap_err();
        assert!(err.is_unsupported());
    }

    #[test]
    fn broadband_is_energetic_sum_of_bands() {
        let models = SourceModels::<f64>::builtin();
        let v = vessel(70);
        let levels = models
            .band_levels(&v, SlModelId::Randi, &IndicatorBand::Bb20To2000.centers())
            .unwrap();
        assert_eq!(levels.levels_db.len(), 19);
        let bb = models
            .source_band_level(&v, SlModelId::Randi, IndicatorBand::Bb20To2000)
            .unwrap();
        assert!((bb - levels.total_db()).abs() < 1e-12);
        assert!(bb > levels.levels_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn model_ids_parse() {
        assert_eq!("Combined".parse::<SlModelId>().unwrap(), SlModelId::Combined);
        assert_eq!("je".parse::<SlModelId>().unwrap(), SlModelId::Je);
        assert!("ross".parse::<SlModelId>().is_err());
    }
}
