//! RANDI 3.1 source spectral density.

use crate::scalar::Scalar;
use crate::vessel::VesselAttributes;

use super::SlError;

/// Reference speed (kn) of the "average vessel".
pub const REFERENCE_SPEED_KN: f64 = 12.0;
/// Reference length (m), 300 ft.
pub const REFERENCE_LENGTH_M: f64 = 91.4;

/// Baseline spectrum `L_S0(f)`; the `f ≥ 500 Hz` branch is used at exactly 500 Hz.
pub fn reference_spectrum<T: Scalar>(f: T) -> T {
    let lf = f.log10();
    if f < T::lit(500.0) {
        let a = T::lit(10.0).powf(T::lit(-1.06) * lf - T::lit(14.34));
        let b = T::lit(10.0).powf(T::lit(3.32) * lf - T::lit(21.425));
        -T::lit(10.0) * (a + b).log10()
    } else {
        T::lit(173.2) - T::lit(18.0) * lf
    }
}

/// Frequency correction `d_f` (dB), closed on the lower side of each breakpoint.
pub fn frequency_correction<T: Scalar>(f: T) -> T {
    if f <= T::lit(28.4) {
        T::lit(8.1)
    } else if f <= T::lit(191.6) {
        T::lit(22.3) - T::lit(9.77) * f.log10()
    } else {
        T::zero()
    }
}

/// Length correction `d_l = l^1.15 / 995`.
pub fn length_correction<T: Scalar>(length_m: T) -> T {
    length_m.powf(T::lit(1.15)) / T::lit(995.0)
}

/// Source PSD in dB re 1 µPa²/Hz at 1 m.
pub fn randi_psd<T: Scalar>(v: &VesselAttributes<T>, f: T) -> Result<T, SlError> {
    let length = v.length_m.ok_or(SlError::MissingAttribute("length_m"))?;
    if !(v.speed_kn > T::zero()) {
        return Err(SlError::Domain(format!("speed must be positive, got {}", v.speed_kn)));
    }
    if !(f > T::zero()) {
        return Err(SlError::Domain(format!("frequency must be positive, got {f}")));
    }
    Ok(reference_spectrum(f)
        + T::lit(60.0) * (v.speed_kn / T::lit(REFERENCE_SPEED_KN)).log10()
        + T::lit(20.0) * (length / T::lit(REFERENCE_LENGTH_M)).log10()
        + frequency_correction(f) * length_correction(length)
        + T::lit(3.0))
}
