//! Environmental inputs: bathymetry, sound speed, absorption and protected areas.

mod bathymetry;
mod mpa;
mod ssp;

use thiserror::Error;

use crate::geo::GeoError;
use crate::scalar::Scalar;

pub use bathymetry::{BathymetryGrid, DepthSample, ValueConvention};
pub use mpa::{load_mpas, MpaPolygon};
pub use ssp::{Season, SoundSpeedProfile, SoundSpeedProfiles};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point {lat},{lon} is outside the grid extent")]
    OutOfExtent { lat: f64, lon: f64 },
    #[error("no valid water depth near {lat},{lon}")]
    NoData { lat: f64, lon: f64 },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sound speed (m/s) from temperature (°C), salinity (ppt) and depth (m).
///
/// Inputs outside T ∈ [−2, 40], S ∈ [0, 45], D ∈ [0, 12000] still evaluate but
/// are logged.
pub fn mackenzie_speed<T: Scalar>(temp_c: T, sal_ppt: T, depth_m: T) -> Result<T, EnvError> {
    if !(temp_c.is_finite() && sal_ppt.is_finite() && depth_m.is_finite()) {
        return Err(EnvError::Domain(format!(
            "non-finite input T={temp_c} S={sal_ppt} D={depth_m}"
        )));
    }
    let in_range = |v: T, lo: f64, hi: f64| v >= T::lit(lo) && v <= T::lit(hi);
    if !(in_range(temp_c, -2.0, 40.0) && in_range(sal_ppt, 0.0, 45.0) && in_range(depth_m, 0.0, 12000.0)) {
        log::warn!("sound speed evaluated outside its validity range: T={temp_c} S={sal_ppt} D={depth_m}");
    }
    let c = T::lit;
    let (t, d) = (temp_c, depth_m);
    let ds = sal_ppt - c(35.0);
    Ok(c(1448.96) + c(4.591) * t - c(5.304e-2) * t * t + c(2.374e-4) * t * t * t
        + c(1.340) * ds
        + c(1.630e-2) * d
        + c(1.675e-7) * d * d
        - c(1.025e-2) * t * ds
        - c(7.139e-13) * t * d * d * d)
}

/// Seawater absorption (dB/km) at frequency `f_khz`.
pub fn thorp_alpha<T: Scalar>(f_khz: T) -> T {
    let c = T::lit;
    let f2 = f_khz * f_khz;
    c(0.11) * f2 / (T::one() + f2) + c(44.0) * f2 / (c(4100.0) + f2) + c(2.75e-4) * f2 + c(0.003)
}

/// Everything propagation needs about the medium, loaded once and shared read-only.
#[derive(Debug, Clone)]
pub struct EnvironmentField<T> {
    pub bathymetry: BathymetryGrid<T>,
    /// Retained for reporting; rays are straight segments and are not bent by it.
    pub sound_speed: Option<SoundSpeedProfiles<T>>,
}

impl<T: Scalar> EnvironmentField<T> {
    pub fn new(bathymetry: BathymetryGrid<T>) -> Self {
        Self {
            bathymetry,
            sound_speed: None,
        }
    }

    pub fn with_sound_speed(mut self, ssp: SoundSpeedProfiles<T>) -> Self {
        self.sound_speed = Some(ssp);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mackenzie_examples() {
        assert!((mackenzie_speed(0.0f64, 35.0, 0.0).unwrap() - 1448.96).abs() < 1e-12);
        assert!((mackenzie_speed(0.0f64, 36.0, 0.0).unwrap() - 1450.30).abs() < 1e-9);
        let c = mackenzie_speed(10.0f64, 35.0, 100.0).unwrap();
        assert!((c - 1491.435_067_861).abs() < 1e-6, "{c}");
        assert!(mackenzie_speed(f64::NAN, 35.0, 0.0).is_err());
    }

    #[test]
    fn thorp_examples() {
        assert!((thorp_alpha(1.0f64) - 0.069_004_09).abs() < 1e-7);
        assert!((thorp_alpha(0.063f64) - 0.003_478_549_6).abs() < 1e-9);
        assert!((thorp_alpha(1e-9f64) - 0.003).abs() < 1e-12);
        assert!((thorp_alpha(1.0f32) - 0.069_004_09).abs() < 1e-6);
    }
}
