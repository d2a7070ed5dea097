//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point type the acoustic engine can run on (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or coefficient into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `10·log10(x)`.
#[inline]
pub fn db<T: Scalar>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// `10^(level/10)`.
#[inline]
pub fn from_db<T: Scalar>(level: T) -> T {
    T::lit(10.0).powf(level / T::lit(10.0))
}

/// Energetic (power-domain) mean of a set of levels, `None` when empty.
pub fn energetic_mean<T: Scalar>(levels: &[T]) -> Option<T> {
    if levels.is_empty() {
        return None;
    }
    let n = T::from_usize(levels.len())?;
    let sum: T = levels.iter().map(|&l| from_db(l)).sum();
    Some(db(sum / n))
}

/// Energetic sum of levels.
pub fn energetic_sum<T: Scalar>(levels: &[T]) -> T {
    db(levels.iter().map(|&l| from_db(l)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_100_and_110() {
        let m = energetic_mean(&[100.0_f64, 110.0]).unwrap();
        assert!((m - 107.403_626_894_942_4).abs() < 1e-9, "{m}");
    }

    #[test]
    fn mean_of_equal_levels_is_identity() {
        let m = energetic_mean(&[87.5_f32; 4]).unwrap();
        assert!((m - 87.5).abs() < 1e-4);
        assert!(energetic_mean::<f64>(&[]).is_none());
    }
}
