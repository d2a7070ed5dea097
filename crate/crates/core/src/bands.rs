//! One-third-octave band arithmetic: band edges, five-point Boole quadrature
//! of source spectral densities, and the 20–2000 Hz broadband summation.
//!
//! Band centres follow the base-2 preferred series. The broadband indicator
//! keeps only bands whose *edges* lie inside [20, 2000] Hz, which selects the
//! 25 Hz through 1600 Hz bands (19 bands); the indicator is still labelled
//! "20–2000 Hz" in reports.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{db, from_db, Scalar};

/// Nominal one-third-octave centre frequencies (Hz) covered by the models.
pub const STANDARD_CENTERS_HZ: [f64; 25] = [
    10.0, 12.5, 16.0, 20.0, 25.0, 31.5, 40.0, 50.0, 63.0, 80.0, 100.0, 125.0, 160.0, 200.0, 250.0,
    315.0, 400.0, 500.0, 630.0, 800.0, 1000.0, 1250.0, 1600.0, 2000.0, 2500.0,
];

/// Lower edge of the broadband indicator range (Hz).
pub const BROADBAND_MIN_HZ: f64 = 20.0;
/// Upper edge of the broadband indicator range (Hz).
pub const BROADBAND_MAX_HZ: f64 = 2000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("band centre must be positive and finite, got {0}")]
    InvalidCenter(f64),
    #[error("band energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("spectrum is missing a level for the {0} Hz band")]
    IncompleteSpectrum(f64),
    #[error("band edges must satisfy 0 < lower < upper, got [{0}, {1}]")]
    InvalidEdges(f64, f64),
}

/// A frequency band `[lower_hz, upper_hz]` with its nominal centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand<T> {
    pub center_hz: T,
    pub lower_hz: T,
    pub upper_hz: T,
    pub width_hz: T,
}

impl<T: Scalar> FrequencyBand<T> {
    /// An arbitrary integration interval; the centre is the geometric mean.
    pub fn from_edges(lower_hz: T, upper_hz: T) -> Result<Self, BandError> {
        if !(lower_hz > T::zero() && upper_hz > lower_hz && upper_hz.is_finite()) {
            return Err(BandError::InvalidEdges(
                lower_hz.to_f64_lossy(),
                upper_hz.to_f64_lossy(),
            ));
        }
        Ok(Self {
            center_hz: (lower_hz * upper_hz).sqrt(),
            lower_hz,
            upper_hz,
            width_hz: upper_hz - lower_hz,
        })
    }
}

/// One-third-octave band around `center_hz`: edges at `center · 2^(∓1/6)`.
pub fn band_edges<T: Scalar>(center_hz: T) -> Result<FrequencyBand<T>, BandError> {
    if !(center_hz > T::zero() && center_hz.is_finite()) {
        return Err(BandError::InvalidCenter(center_hz.to_f64_lossy()));
    }
    let sixth = T::lit(2.0).powf(T::one() / T::lit(6.0));
    let lower_hz = center_hz / sixth;
    let upper_hz = center_hz * sixth;
    Ok(FrequencyBand {
        center_hz,
        lower_hz,
        upper_hz,
        width_hz: upper_hz - lower_hz,
    })
}

/// Five-point Boole quadrature of a linear-domain integrand over `band`.
///
/// `(Δf/90)·[7S₀ + 32S₁ + 12S₂ + 32S₃ + 7S₄]` at the equally spaced
/// abscissae `lower + k·Δf/4`; the last point is the upper edge itself.
pub fn boole<T, E, F>(band: &FrequencyBand<T>, mut integrand: F) -> Result<T, E>
where
    T: Scalar,
    F: FnMut(T) -> Result<T, E>,
{
    let h = band.width_hz / T::lit(4.0);
    let s0 = integrand(band.lower_hz)?;
    let s1 = integrand(band.lower_hz + h)?;
    let s2 = integrand(band.lower_hz + T::lit(2.0) * h)?;
    let s3 = integrand(band.lower_hz + T::lit(3.0) * h)?;
    let s4 = integrand(band.upper_hz)?;
    let weighted = T::lit(7.0) * (s0 + s4) + T::lit(32.0) * (s1 + s3) + T::lit(12.0) * s2;
    Ok(band.width_hz / T::lit(90.0) * weighted)
}

/// Band mean-square pressure (µPa²) of a PSD given in dB re 1 µPa²/Hz.
pub fn integrate_band<T, E, F>(band: &FrequencyBand<T>, mut psd_db: F) -> Result<T, E>
where
    T: Scalar,
    F: FnMut(T) -> Result<T, E>,
{
    boole(band, |f| psd_db(f).map(from_db))
}

/// Band level in dB re 1 µPa² for a band energy in µPa².
pub fn band_level<T: Scalar>(energy: T) -> Result<T, BandError> {
    if !(energy > T::zero()) {
        return Err(BandError::NonPositiveEnergy(energy.to_f64_lossy()));
    }
    Ok(db(energy))
}

/// Standard bands whose edges lie within [20, 2000] Hz, in ascending order.
pub fn broadband_bands<T: Scalar>() -> Vec<FrequencyBand<T>> {
    let lo = T::lit(BROADBAND_MIN_HZ);
    let hi = T::lit(BROADBAND_MAX_HZ);
    STANDARD_CENTERS_HZ
        .iter()
        .filter_map(|&c| band_edges(T::lit(c)).ok())
        .filter(|b| b.lower_hz >= lo && b.upper_hz <= hi)
        .collect()
}

/// Centres of the broadband bands, as `f64` (25 … 1600 Hz).
pub fn broadband_centers() -> Vec<f64> {
    broadband_bands::<f64>()
        .into_iter()
        .map(|b| b.center_hz)
        .collect()
}

/// Reporting band used for maps and exposure products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndicatorBand {
    #[serde(rename = "63")]
    Tob63,
    #[serde(rename = "125")]
    Tob125,
    #[serde(rename = "bb")]
    Bb20To2000,
}

impl IndicatorBand {
    pub const ALL: [IndicatorBand; 3] = [Self::Tob63, Self::Tob125, Self::Bb20To2000];

    /// The one-third-octave centres that make up this indicator.
    pub fn centers(self) -> Vec<f64> {
        match self {
            Self::Tob63 => vec![63.0],
            Self::Tob125 => vec![125.0],
            Self::Bb20To2000 => broadband_centers(),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::Tob63 => 0,
            Self::Tob125 => 1,
            Self::Bb20To2000 => 2,
        }
    }

    /// Short tag used in CSV headers and query strings.
    pub fn tag(self) -> &'static str {
        match self {
            Self::Tob63 => "63",
            Self::Tob125 => "125",
            Self::Bb20To2000 => "bb",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Tob63 => "63 Hz",
            Self::Tob125 => "125 Hz",
            Self::Bb20To2000 => "20-2000 Hz",
        }
    }
}

impl fmt::Display for IndicatorBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for IndicatorBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "63" | "tob63" | "63hz" => Ok(Self::Tob63),
            "125" | "tob125" | "125hz" => Ok(Self::Tob125),
            "bb" | "broadband" | "20-2000" | "bb20_2000" => Ok(Self::Bb20To2000),
            other => Err(format!("unknown band '{other}' (expected 63, 125 or bb)")),
        }
    }
}

/// A source spectrum, either as a continuous PSD model or as band levels.
pub enum SourceSpectrum<'a, T> {
    /// dB re 1 µPa²/Hz at 1 m, evaluable at any frequency.
    Psd(Box<dyn Fn(T) -> Result<T, BandError> + 'a>),
    /// `(centre_hz, dB re 1 µPa² at 1 m)` pairs on standard centres.
    ThirdOctave(Vec<(T, T)>),
}

impl<T: Scalar> SourceSpectrum<'_, T> {
    /// Energy (µPa²) in one band.
    pub fn band_energy(&self, band: &FrequencyBand<T>) -> Result<T, BandError> {
        match self {
            Self::Psd(psd) => integrate_band(band, psd),
            Self::ThirdOctave(levels) => levels
                .iter()
                .find(|(c, _)| same_center(*c, band.center_hz))
                .filter(|(_, l)| l.is_finite())
                .map(|&(_, l)| from_db(l))
                .ok_or(BandError::IncompleteSpectrum(band.center_hz.to_f64_lossy())),
        }
    }
}

pub(crate) fn same_center<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-6) * b.abs()
}

/// Broadband (20–2000 Hz indicator) level of a spectrum.
pub fn broadband_level<T: Scalar>(spectrum: &SourceSpectrum<'_, T>) -> Result<T, BandError> {
    let mut total = T::zero();
    for band in broadband_bands::<T>() {
        total += spectrum.band_energy(&band)?;
    }
    band_level(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn edges_of_indicator_bands() {
        let b = band_edges(63.0_f64).unwrap();
        assert!(close(b.lower_hz, 56.13, 0.005) && close(b.upper_hz, 70.72, 0.005));
        assert!(close(b.width_hz, 14.59, 0.005));
        let b = band_edges(125.0_f64).unwrap();
        assert!(close(b.lower_hz, 111.36, 0.005) && close(b.upper_hz, 140.31, 0.005));
        let unit = band_edges(1.0_f64).unwrap();
        assert!(close(unit.lower_hz, 2f64.powf(-1.0 / 6.0), 1e-15));
        assert!(close(unit.upper_hz, 2f64.powf(1.0 / 6.0), 1e-15));
    }

    #[test]
    fn band_edges_rejects_bad_centres() {
        assert!(band_edges(0.0_f64).is_err());
        assert!(band_edges(-3.0_f64).is_err());
        assert!(band_edges(f64::NAN).is_err());
        assert!(band_edges(f64::INFINITY).is_err());
    }

    #[test]
    fn boole_exact_for_constant_and_quartic() {
        let band = band_edges(63.0_f64).unwrap();
        let e = boole(&band, |_| Ok::<_, ()>(3.5)).unwrap();
        assert!(close(e, 3.5 * band.width_hz, 1e-12));
        let quartic = FrequencyBand::from_edges(1.0_f64, 5.0).unwrap();
        let e = boole(&quartic, |f| Ok::<_, ()>(f.powi(4))).unwrap();
        assert!(close(e, 624.8, 1e-10), "{e}");
    }

    #[test]
    fn band_level_values() {
        assert_eq!(band_level(1.0_f64).unwrap(), 0.0);
        assert!(close(band_level(1e12_f64).unwrap(), 120.0, 1e-12));
        assert!(band_level(0.0_f64).is_err());
        assert!(band_level(-1.0_f64).is_err());
        let band = band_edges(63.0_f64).unwrap();
        let e = integrate_band(&band, |_| Ok::<_, ()>(100.0)).unwrap();
        let expected = 10.0 * (1e10 * band.width_hz).log10();
        assert!(close(band_level(e).unwrap(), expected, 1e-10));
        assert!(close(expected, 111.64, 0.005));
    }

    #[test]
    fn broadband_band_set() {
        let bands = broadband_bands::<f64>();
        assert_eq!(bands.len(), 19);
        assert_eq!(bands[0].center_hz, 25.0);
        assert!(close(bands[0].lower_hz, 22.27, 0.005));
        assert_eq!(bands[18].center_hz, 1600.0);
        assert!(close(bands[18].upper_hz, 1795.9, 0.05));
        // Neighbouring bands fail the edge rule.
        assert!(band_edges(20.0_f64).unwrap().lower_hz < 20.0);
        assert!(band_edges(2000.0_f64).unwrap().upper_hz > 2000.0);
    }

    #[test]
    fn broadband_from_third_octaves() {
        let levels: Vec<(f64, f64)> = broadband_centers().into_iter().map(|c| (c, 100.0)).collect();
        let bb = broadband_level(&SourceSpectrum::ThirdOctave(levels)).unwrap();
        assert!(close(bb, 100.0 + 10.0 * 19f64.log10(), 1e-9));
        assert!(close(bb, 112.79, 0.005));

        let mut partial = vec![(25.0, 100.0)];
        partial.extend(broadband_centers().into_iter().skip(1).map(|c| (c, f64::NEG_INFINITY)));
        assert!(matches!(
            broadband_level(&SourceSpectrum::ThirdOctave(partial)),
            Err(BandError::IncompleteSpectrum(_))
        ));
    }

    #[test]
    fn indicator_parsing() {
        assert_eq!("63".parse::<IndicatorBand>().unwrap(), IndicatorBand::Tob63);
        assert_eq!("BB".parse::<IndicatorBand>().unwrap(), IndicatorBand::Bb20To2000);
        assert!("250".parse::<IndicatorBand>().is_err());
        assert_eq!(IndicatorBand::Bb20To2000.centers().len(), 19);
    }

    #[test]
    fn works_in_single_precision() {
        let b = band_edges(125.0_f32).unwrap();
        assert!((b.lower_hz - 111.36).abs() < 0.01);
        let e = boole(&b, |_| Ok::<_, ()>(2.0_f32)).unwrap();
        assert!((e - 2.0 * b.width_hz).abs() < 1e-4);
    }
}
