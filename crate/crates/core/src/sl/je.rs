//! JOMOPANS-ECHO source spectral density with class-specific reference speeds.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::vessel::VesselAttributes;

use super::randi::REFERENCE_LENGTH_M;
use super::SlError;

/// One of the thirteen JOMOPANS-ECHO vessel classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JeClass(u8);

/// Per-class constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JeClassParams {
    pub class_id: u8,
    pub reference_speed_kn: f64,
    pub d: f64,
    pub d_lf: Option<f64>,
}

impl JeClass {
    pub const FISHING: JeClass = JeClass(1);
    pub const TUG: JeClass = JeClass(2);
    pub const NAVAL: JeClass = JeClass(3);
    pub const RECREATIONAL: JeClass = JeClass(4);
    pub const GOVERNMENT: JeClass = JeClass(5);
    pub const CRUISE: JeClass = JeClass(6);
    pub const PASSENGER: JeClass = JeClass(7);
    pub const BULK: JeClass = JeClass(8);
    pub const CONTAINER: JeClass = JeClass(9);
    pub const VEHICLE_CARRIER: JeClass = JeClass(10);
    pub const TANKER: JeClass = JeClass(11);
    pub const OTHER: JeClass = JeClass(12);
    pub const DREDGER: JeClass = JeClass(13);

    pub fn new(id: u8) -> Option<Self> {
        (1..=13).contains(&id).then_some(JeClass(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "Fishing",
            2 => "Tug",
            3 => "Naval",
            4 => "Recreational",
            5 => "Government/Research",
            6 => "Cruise",
            7 => "Passenger",
            8 => "Bulk",
            9 => "Container",
            10 => "Vehicle Carrier",
            11 => "Tanker",
            12 => "Other",
            _ => "Dredger",
        }
    }

    pub fn params(self) -> JeClassParams {
        let vc = match self.0 {
            1 => 6.4,
            2 => 3.7,
            3 => 11.1,
            4 => 10.6,
            5 => 8.0,
            6 => 17.1,
            7 => 9.7,
            8 => 13.9,
            9 => 18.0,
            10 => 15.8,
            11 => 12.4,
            12 => 7.4,
            _ => 9.5,
        };
        JeClassParams {
            class_id: self.0,
            reference_speed_kn: vc,
            d: if self.0 == 6 { 4.0 } else { 3.0 },
            d_lf: match self.0 {
                8 | 9 => Some(0.8),
                10 | 11 => Some(1.0),
                _ => None,
            },
        }
    }

    /// Class for an AIS type code; passenger and cargo rows split on length and speed.
    pub fn from_ais(ais_type: u8, length_m: Option<f64>, speed_kn: f64) -> Self {
        match ais_type {
            30 => Self::FISHING,
            31 | 32 | 52 => Self::TUG,
            33 => Self::DREDGER,
            35 => Self::NAVAL,
            36 | 37 => Self::RECREATIONAL,
            51 | 53 | 55 => Self::GOVERNMENT,
            60..=69 => {
                if length_m.is_some_and(|l| l > 100.0) {
                    Self::CRUISE
                } else {
                    Self::PASSENGER
                }
            }
            71..=74 => Self::CONTAINER,
            70 | 75..=79 => {
                if speed_kn > 16.0 {
                    Self::CONTAINER
                } else {
                    Self::BULK
                }
            }
            80..=89 => Self::TANKER,
            _ => Self::OTHER,
        }
    }
}

/// Baseline spectrum for a class at speed ratio `v/V_c`.
pub fn reference_spectrum<T: Scalar>(class: JeClass, speed_ratio: T, f: T) -> T {
    let p = class.params();
    let ten = T::lit(10.0);
    match p.d_lf {
        Some(d_lf) if f < T::lit(100.0) => {
            let f2 = T::lit(600.0) * speed_ratio;
            let x = f / f2;
            let shape = (T::one() - x * x).powi(2) + T::lit(d_lf * d_lf);
            T::lit(208.0) - T::lit(40.0) * f2.log10() + ten * f.log10() - ten * shape.log10()
        }
        _ => {
            let f1 = T::lit(480.0) * speed_ratio;
            let shape = (T::one() - f / f1).powi(2) + T::lit(p.d * p.d);
            T::lit(191.0) - T::lit(20.0) * f1.log10() - ten * shape.log10()
        }
    }
}

/// Source PSD in dB re 1 µPa²/Hz at 1 m for a resolved class.
pub fn je_psd_for_class<T: Scalar>(
    class: JeClass,
    v: &VesselAttributes<T>,
    f: T,
) -> Result<T, SlError> {
    let length = v.length_m.ok_or(SlError::MissingAttribute("length_m"))?;
    if !(v.speed_kn > T::zero()) {
        return Err(SlError::Domain(format!("speed must be positive, got {}", v.speed_kn)));
    }
    if !(f > T::zero()) {
        return Err(SlError::Domain(format!("frequency must be positive, got {f}")));
    }
    let ratio = v.speed_kn / T::lit(class.params().reference_speed_kn);
    Ok(reference_spectrum(class, ratio, f)
        + T::lit(60.0) * ratio.log10()
        + T::lit(20.0) * (length / T::lit(REFERENCE_LENGTH_M)).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_reference(class: JeClass, f: f64) -> f64 {
        let vc = class.params().reference_speed_kn;
        let mut v = VesselAttributes::new(70, REFERENCE_LENGTH_M, vc);
        v.je_class = Some(class.id());
        je_psd_for_class(class, &v, f).unwrap()
    }

    #[test]
    fn peak_level_for_standard_class() {
        let expected = 191.0 - 20.0 * 480f64.log10() - 10.0 * 9f64.log10();
        assert!((at_reference(JeClass::FISHING, 480.0) - expected).abs() < 1e-9);
        assert!((expected - 127.83).abs() < 0.005);
    }

    #[test]
    fn bulk_low_frequency_branch() {
        let l = at_reference(JeClass::BULK, 60.0);
        assert!((l - 112.560_044_268_324_69).abs() < 1e-9, "{l}");
    }

    #[test]
    fn cruise_peak_is_lower_by_d_ratio() {
        let diff = at_reference(JeClass::OTHER, 480.0) - at_reference(JeClass::CRUISE, 480.0);
        assert!((diff - 10.0 * (16.0f64 / 9.0).log10()).abs() < 1e-9);
        assert!((diff - 2.50).abs() < 0.005);
    }

    #[test]
    fn ais_mapping_splits() {
        assert_eq!(JeClass::from_ais(62, Some(150.0), 15.0), JeClass::CRUISE);
        assert_eq!(JeClass::from_ais(62, Some(100.0), 15.0), JeClass::PASSENGER);
        assert_eq!(JeClass::from_ais(70, Some(200.0), 16.0), JeClass::BULK);
        assert_eq!(JeClass::from_ais(70, Some(200.0), 16.5), JeClass::CONTAINER);
        assert_eq!(JeClass::from_ais(73, Some(200.0), 5.0), JeClass::CONTAINER);
        assert_eq!(JeClass::from_ais(84, None, 5.0), JeClass::TANKER);
        assert_eq!(JeClass::from_ais(33, None, 5.0), JeClass::DREDGER);
        assert_eq!(JeClass::from_ais(99, None, 5.0), JeClass::OTHER);
        assert!(JeClass::new(0).is_none() && JeClass::new(14).is_none());
    }

    #[test]
    fn finite_over_model_range() {
        for id in 1..=13 {
            let class = JeClass::new(id).unwrap();
            for k in 0..=400 {
                let f = 10.0 * 250f64.powf(k as f64 / 400.0);
                assert!(at_reference(class, f).is_finite());
            }
        }
    }
}
