//! Small recreational vessel log-linear model with log-frequency smoothing.
//!
//! Coefficients are runtime data (`class,freq_hz,beta0,betaL,betaV`). Raw
//! per-bin coefficients are smoothed with a Gaussian kernel in `log2(f)`
//! whose full width at half maximum is one third of an octave, then
//! interpolated linearly in `log2(f)` between grid nodes (held constant
//! beyond the ends of the grid).

use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use crate::scalar::Scalar;
use crate::vessel::VesselAttributes;

use super::SlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SrvClass {
    Sail,
    Yacht,
}

impl SrvClass {
    pub fn from_ais(ais_type: u8) -> Option<Self> {
        match ais_type {
            36 => Some(Self::Sail),
            37 => Some(Self::Yacht),
            _ => None,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sail" | "sailing" => Some(Self::Sail),
            "yacht" | "pleasure" => Some(Self::Yacht),
            _ => None,
        }
    }
}

/// Kernel width (octaves) giving a one-third-octave FWHM.
pub fn third_octave_sigma<T: Scalar>() -> T {
    T::one() / T::lit(3.0) / (T::lit(2.0) * (T::lit(2.0) * T::LN_2()).sqrt())
}

/// Unnormalised Gaussian kernel weight at a log2-frequency offset.
pub fn kernel_weight<T: Scalar>(offset_octaves: T, sigma: T) -> T {
    (-(offset_octaves * offset_octaves) / (T::lit(2.0) * sigma * sigma)).exp()
}

/// Gaussian smoothing of `values` sampled at `log2_f`.
pub fn smooth<T: Scalar>(log2_f: &[T], values: &[T], sigma: T) -> Vec<T> {
    log2_f
        .iter()
        .map(|&xi| {
            let mut num = T::zero();
            let mut den = T::zero();
            for (&xk, &v) in log2_f.iter().zip(values) {
                let w = kernel_weight(xk - xi, sigma);
                num += w * v;
                den += w;
            }
            num / den
        })
        .collect()
}

/// Smoothed coefficient curves for one class on a common frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SrvTable<T> {
    pub log2_f: Vec<T>,
    pub beta0: Vec<T>,
    pub beta_l: Vec<T>,
    pub beta_v: Vec<T>,
}

impl<T: Scalar> SrvTable<T> {
    fn interp(&self, curve: &[T], f: T) -> T {
        let x = f.log2();
        let n = self.log2_f.len();
        if x <= self.log2_f[0] {
            return curve[0];
        }
        if x >= self.log2_f[n - 1] {
            return curve[n - 1];
        }
        let i = self.log2_f.partition_point(|&g| g <= x) - 1;
        let t = (x - self.log2_f[i]) / (self.log2_f[i + 1] - self.log2_f[i]);
        curve[i] + t * (curve[i + 1] - curve[i])
    }

    /// Coefficients `(β̃0, β̃L, β̃V)` at `f`.
    pub fn coefficients(&self, f: T) -> (T, T, T) {
        (
            self.interp(&self.beta0, f),
            self.interp(&self.beta_l, f),
            self.interp(&self.beta_v, f),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrvCoefficients<T> {
    pub sigma: T,
    tables: BTreeMap<SrvClass, SrvTable<T>>,
}

#[derive(Debug, Deserialize)]
struct SrvRow {
    class: String,
    freq_hz: f64,
    beta0: f64,
    #[serde(rename = "betaL")]
    beta_l: f64,
    #[serde(rename = "betaV")]
    beta_v: f64,
}

impl<T: Scalar> SrvCoefficients<T> {
    /// Loads raw regression coefficients and smooths them.
    pub fn from_raw_csv<R: Read>(reader: R) -> Result<Self, SlError> {
        Self::from_csv(reader, true)
    }

    /// Loads coefficients that are already smoothed.
    pub fn from_smoothed_csv<R: Read>(reader: R) -> Result<Self, SlError> {
        Self::from_csv(reader, false)
    }

    fn from_csv<R: Read>(reader: R, apply_smoothing: bool) -> Result<Self, SlError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: BTreeMap<SrvClass, Vec<SrvRow>> = BTreeMap::new();
        for (i, row) in rdr.deserialize::<SrvRow>().enumerate() {
            let row = row.map_err(|e| SlError::Config(format!("SRV row {}: {e}", i + 2)))?;
            let class = SrvClass::parse(&row.class)
                .ok_or_else(|| SlError::Config(format!("SRV row {}: unknown class '{}'", i + 2, row.class)))?;
            if !(row.freq_hz > 0.0) {
                return Err(SlError::Config(format!("SRV row {}: non-positive frequency", i + 2)));
            }
            rows.entry(class).or_default().push(row);
        }
        if rows.is_empty() {
            return Err(SlError::Config("SRV coefficient file has no rows".into()));
        }
        let sigma = third_octave_sigma::<T>();
        let mut tables = BTreeMap::new();
        for (class, mut rs) in rows {
            rs.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
            let log2_f: Vec<T> = rs.iter().map(|r| T::lit(r.freq_hz).log2()).collect();
            let col = |get: fn(&SrvRow) -> f64| -> Vec<T> {
                let raw: Vec<T> = rs.iter().map(|r| T::lit(get(r))).collect();
                if apply_smoothing {
                    smooth(&log2_f, &raw, sigma)
                } else {
                    raw
                }
            };
            let table = SrvTable {
                beta0: col(|r| r.beta0),
                beta_l: col(|r| r.beta_l),
                beta_v: col(|r| r.beta_v),
                log2_f,
            };
            tables.insert(class, table);
        }
        Ok(Self { sigma, tables })
    }

    /// Coefficient file shipped with the crate for tests and demos. Values are synthetic.
    pub fn placeholder() -> Self {
        Self::from_raw_csv(include_str!("../../data/srv_placeholder.csv").as_bytes())
            .expect("bundled SRV placeholder parses")
    }

    pub fn table(&self, class: SrvClass) -> Option<&SrvTable<T>> {
        self.tables.get(&class)
    }
}

/// Source PSD in dB re 1 µPa²/Hz at 1 m.
pub fn srv_psd_for_class<T: Scalar>(
    coefficients: Option<&SrvCoefficients<T>>,
    class: SrvClass,
    v: &VesselAttributes<T>,
    f: T,
) -> Result<T, SlError> {
    let coefficients =
        coefficients.ok_or_else(|| SlError::Config("SRV coefficient file not loaded".into()))?;
    let table = coefficients
        .table(class)
        .ok_or_else(|| SlError::Config(format!("SRV coefficients lack class {class:?}")))?;
    let length = v.length_m.ok_or(SlError::MissingAttribute("length_m"))?;
    if !(v.speed_kn > T::zero()) {
        return Err(SlError::Domain(format!("speed must be positive, got {}", v.speed_kn)));
    }
    let (b0, bl, bv) = table.coefficients(f);
    Ok(b0 + bl * length.log10() + bv * v.speed_kn.log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficients_give_unit_log_sum() {
        let csv = "class,freq_hz,beta0,betaL,betaV\nyacht,50,100,20,50\nyacht,500,100,20,50\nyacht,2000,100,20,50\n";
        let c = SrvCoefficients::<f64>::from_raw_csv(csv.as_bytes()).unwrap();
        let v = VesselAttributes::new(37, 10.0, 10.0);
        for f in [10.0, 63.0, 700.0, 2500.0] {
            let l = srv_psd_for_class(Some(&c), SrvClass::Yacht, &v, f).unwrap();
            assert!((l - 170.0).abs() < 1e-9, "{l}");
        }
    }

    #[test]
    fn smoothing_preserves_constants() {
        let xs: Vec<f64> = (0..30).map(|k| 3.0 + k as f64 / 6.0).collect();
        let out = smooth(&xs, &vec![42.0; 30], third_octave_sigma());
        assert!(out.iter().all(|v| (v - 42.0).abs() < 1e-12));
    }

    #[test]
    fn kernel_half_maximum_at_half_fwhm() {
        let sigma: f64 = third_octave_sigma();
        let half_width = sigma * (2.0 * 2f64.ln()).sqrt();
        assert!((kernel_weight(half_width, sigma) - 0.5).abs() < 1e-12);
        assert!((kernel_weight(-half_width, sigma) - 0.5).abs() < 1e-12);
        assert!((2.0 * half_width - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn missing_file_is_a_configuration_error() {
        let v = VesselAttributes::new(36, 10.0, 6.0);
        assert!(matches!(
            srv_psd_for_class::<f64>(None, SrvClass::Sail, &v, 100.0),
            Err(SlError::Config(_))
        ));
    }

    #[test]
    fn placeholder_has_both_classes() {
        let c = SrvCoefficients::<f64>::placeholder();
        assert!(c.table(SrvClass::Sail).is_some() && c.table(SrvClass::Yacht).is_some());
    }
}
