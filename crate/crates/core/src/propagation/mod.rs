//! Ray-fan transmission loss and incoherent accumulation of received energy.
//!
//! Each source launches a fixed fan of rays. A ray keeps its azimuth and is
//! traced in the vertical plane as straight segments, reflecting specularly at
//! the surface and at the local seabed slope. Every grid cell within the beam
//! neighbourhood of a ray receives `w(ψ)²·10^((SL−TL)/10)` per band.
//!
//! Geometry runs in `f64`; band energies use the crate scalar.

mod field;
mod grid;
mod ray;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::thorp_alpha;
use crate::scalar::Scalar;

pub use field::{
    accumulate, accumulate_sources, Footprint, PointSource, PropagationContext, SkippedSource, SourceTask,
};
pub use grid::{grid_to_spl, GridSpec, NoiseGrid};
pub use ray::{trace_ray, RayPath, RayPoint, Termination};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("invalid propagation configuration: {0}")]
    Config(String),
}

/// Ray fan and loss parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RayFanConfig {
    pub azimuth_step_deg: f64,
    pub elevation_step_deg: f64,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    /// Relative amplitude at one elevation step off the ray axis.
    pub beam_shape: f64,
    pub neighborhood_m: f64,
    pub surface_penalty_db: f64,
    pub bottom_penalty_db: f64,
    pub max_bounces: u32,
    pub max_range_m: f64,
    pub receiver_depth_m: f64,
    pub min_source_depth_m: f64,
}

impl Default for RayFanConfig {
    fn default() -> Self {
        Self {
            azimuth_step_deg: 10.0,
            elevation_step_deg: 5.0,
            elevation_min_deg: -30.0,
            elevation_max_deg: 30.0,
            beam_shape: 0.1,
            neighborhood_m: 500.0,
            surface_penalty_db: 1.0,
            bottom_penalty_db: 3.0,
            max_bounces: 10,
            max_range_m: 100_000.0,
            receiver_depth_m: 10.0,
            min_source_depth_m: 2.0,
        }
    }
}

impl RayFanConfig {
    pub fn validate(&self) -> Result<(), PropagationError> {
        let err = |m: &str| Err(PropagationError::Config(m.to_string()));
        if !(self.azimuth_step_deg > 0.0 && self.azimuth_step_deg <= 360.0) {
            return err("azimuth_step_deg must be in (0, 360]");
        }
        if (360.0 / self.azimuth_step_deg).fract().abs() > 1e-9 {
            return err("azimuth_step_deg must divide 360");
        }
        if !(self.elevation_step_deg > 0.0) || self.elevation_min_deg > self.elevation_max_deg {
            return err("elevation range is invalid");
        }
        if self.elevation_min_deg < -90.0 || self.elevation_max_deg > 90.0 {
            return err("elevations must lie within ±90°");
        }
        if !(self.beam_shape > 0.0 && self.beam_shape <= 1.0) {
            return err("beam_shape must be in (0, 1]");
        }
        if !(self.neighborhood_m > 0.0 && self.max_range_m > 0.0) {
            return err("neighborhood_m and max_range_m must be positive");
        }
        if self.surface_penalty_db < 0.0 || self.bottom_penalty_db < 0.0 {
            return err("boundary penalties must be non-negative");
        }
        if !(self.receiver_depth_m > 0.0 && self.min_source_depth_m > 0.0) {
            return err("receiver and source depths must be positive");
        }
        Ok(())
    }

    pub fn n_azimuth(&self) -> usize {
        (360.0 / self.azimuth_step_deg).round() as usize
    }

    pub fn n_elevation(&self) -> usize {
        ((self.elevation_max_deg - self.elevation_min_deg) / self.elevation_step_deg).round() as usize + 1
    }

    pub fn n_rays(&self) -> usize {
        self.n_azimuth() * self.n_elevation()
    }

    /// Launch angles `(φ, θ)` in radians, azimuth-major. φ is clockwise from
    /// north, θ positive upward.
    pub fn launch_angles(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_rays());
        for i in 0..self.n_azimuth() {
            let phi = (i as f64 * self.azimuth_step_deg).to_radians();
            for j in 0..self.n_elevation() {
                let theta = (self.elevation_min_deg + j as f64 * self.elevation_step_deg).to_radians();
                out.push((phi, theta));
            }
        }
        out
    }

    /// Gaussian taper exponent `a = −ln β / Δθ²`.
    pub fn taper_exponent(&self) -> f64 {
        -self.beam_shape.ln() / self.elevation_step_deg.to_radians().powi(2)
    }

    /// Isotropic amplitude normalisation `1/√(4π)`.
    pub fn normalization(&self) -> f64 {
        1.0 / (4.0 * std::f64::consts::PI).sqrt()
    }
}

/// Amplitude weight `C·cos θ·exp(−a ψ²)`.
pub fn beam_weight<T: Scalar>(psi: T, theta: T, cfg: &RayFanConfig) -> T {
    T::lit(cfg.normalization()) * theta.cos() * (-T::lit(cfg.taper_exponent()) * psi * psi).exp()
}

/// Transmission loss (dB): spherical spreading, absorption and boundary penalties.
/// Path lengths under 1 m are treated as 1 m.
pub fn transmission_loss<T: Scalar>(r_p: T, f_hz: T, n_surface: u32, n_bottom: u32, cfg: &RayFanConfig) -> T {
    let r = r_p.max(T::one());
    let alpha = thorp_alpha(f_hz / T::lit(1000.0));
    T::lit(20.0) * r.log10()
        + alpha * r / T::lit(1000.0)
        + T::lit(n_surface as f64 * cfg.surface_penalty_db + n_bottom as f64 * cfg.bottom_penalty_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fan_counts() {
        let cfg = RayFanConfig::default();
        assert_eq!((cfg.n_azimuth(), cfg.n_elevation(), cfg.n_rays()), (36, 13, 468));
        assert_eq!(cfg.launch_angles().len(), 468);
        assert!((cfg.taper_exponent() - 302.357_638_588_929_4).abs() < 1e-9);
        assert!((cfg.normalization() - 0.282_094_791_773_878_1).abs() < 1e-15);
        cfg.validate().unwrap();
    }

    #[test]
    fn beam_weight_examples() {
        let cfg = RayFanConfig::default();
        let c = cfg.normalization();
        assert!((beam_weight(0.0, 0.0, &cfg) - c).abs() < 1e-15);
        let d = cfg.elevation_step_deg.to_radians();
        assert!((beam_weight(d, 0.0, &cfg) - 0.1 * c).abs() < 1e-15);
        assert_eq!(beam_weight(0.3, 0.1, &cfg), beam_weight(-0.3, 0.1, &cfg));
    }

    #[test]
    fn transmission_loss_examples() {
        let cfg = RayFanConfig::default();
        // Only the 1 m of absorption remains at the reference distance.
        let at_ref = transmission_loss(1.0f64, 1000.0, 0, 0, &cfg);
        assert!(at_ref.abs() < 1e-3 && (at_ref - thorp_alpha(1.0f64) / 1000.0).abs() < 1e-15);
        assert_eq!(transmission_loss(0.2f64, 1000.0, 0, 0, &cfg), at_ref);
        let near_zero_f = transmission_loss(1000.0f64, 1e-6, 0, 0, &cfg);
        assert!((near_zero_f - 60.003).abs() < 1e-9);
        let expected = 80.0 + thorp_alpha(0.125f64) * 10.0 + 6.0;
        assert!((transmission_loss(10_000.0f64, 125.0, 0, 2, &cfg) - expected).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = RayFanConfig::default();
        cfg.azimuth_step_deg = 7.0;
        assert!(cfg.validate().is_err());
        let cfg = RayFanConfig {
            beam_shape: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
