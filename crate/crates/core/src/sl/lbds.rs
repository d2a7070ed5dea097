//! Length–breadth–draft–speed polynomial model, evaluated per one-third-octave band.

use crate::bands::FrequencyBand;
use crate::scalar::Scalar;
use crate::vessel::VesselAttributes;

use super::SlError;

const LOG_F_CENTER: f64 = 2.70016;
const LOG_V_CENTER: f64 = 1.12024;
const BEAM_CENTER: f64 = 26.8854;

/// The polynomial at band centre `f` (dB re 1 µPa² at 1 m).
pub fn lbds_level<T: Scalar>(f: T, length_m: T, beam_m: T, draft_m: T, speed_kn: T) -> T {
    let c = T::lit;
    let lf = f.log10() - c(LOG_F_CENTER);
    let lv = speed_kn.log10() - c(LOG_V_CENTER);
    let spectral = c(285.40) + c(0.0496) * f - c(4.8e-7) * (f - c(2108.26)).powi(2)
        - c(69.33) * f.log10()
        - c(49.29) * lf.powi(2)
        - c(58.50) * lf.powi(3)
        - c(41.54) * lf.powi(4)
        - c(7.62) * lf.powi(5);
    let hull = c(13.47) * length_m.log10() - c(0.55) * beam_m
        + c(0.0008) * (beam_m - c(BEAM_CENTER)).powi(3)
        + c(0.706) * draft_m;
    let speed = c(20.164) * speed_kn.log10() - c(505.1) * lv.powi(3) + c(2891.9) * lv.powi(5);
    spectral + hull + speed
}

/// Band level for `band`, using its centre frequency.
pub fn lbds_band<T: Scalar>(v: &VesselAttributes<T>, band: &FrequencyBand<T>) -> Result<T, SlError> {
    let length = v.length_m.ok_or(SlError::MissingAttribute("length_m"))?;
    let beam = v.beam_m.ok_or(SlError::MissingAttribute("beam_m"))?;
    let draft = v.draft_m.ok_or(SlError::MissingAttribute("draft_m"))?;
    if !(v.speed_kn > T::zero()) {
        return Err(SlError::Domain(format!("speed must be positive, got {}", v.speed_kn)));
    }
    Ok(lbds_level(band.center_hz, length, beam, draft, v.speed_kn))
}
