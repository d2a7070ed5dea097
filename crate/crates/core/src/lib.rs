//! Vessel underwater radiated noise engine.
//!
//! Source levels from AIS attributes, one-third-octave band integration,
//! ray-fan propagation over bathymetry, and SPL/SEL grids. All numeric code
//! is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases below are
//! what the service and CLI use.

// `!(x > 0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod environment;
pub mod exposure;
pub mod geo;
pub mod products;
pub mod propagation;
pub mod scalar;
pub mod sl;
pub mod vessel;

pub use bands::{FrequencyBand, IndicatorBand, SourceSpectrum};
pub use environment::{BathymetryGrid, EnvironmentField, MpaPolygon};
pub use geo::{BoundingBox, LatLon, Polygon};
pub use propagation::{GridSpec, NoiseGrid, PropagationContext, RayFanConfig};
pub use scalar::Scalar;
pub use sl::{SlError, SlModelId, SourceLevels, SourceModels};
pub use vessel::{VesselAttributes, VesselCategory, VesselRecord};

pub type BathymetryGrid64 = BathymetryGrid<f64>;
pub type EnvironmentField64 = EnvironmentField<f64>;
pub type NoiseGrid64 = NoiseGrid<f64>;
pub type FrequencyBand64 = FrequencyBand<f64>;
pub type SourceModels64 = SourceModels<f64>;
pub type VesselAttributes64 = VesselAttributes<f64>;
