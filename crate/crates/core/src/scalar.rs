//! Floating-point scalar abstraction used by the metrics layer.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// floating point: f32 or f64
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    fn from_u32(v: u32) -> Self {
        <Self as FromPrimitive>::from_u32(v).expect("u32 fits every float type")
    }

    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts")
    }

    fn hundred() -> Self {
        <Self as Scalar>::from_u32(100)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Rounds to `decimals` places with ties going toward zero.
///
/// Published tables print 87.5 as 87 while rounding 2.67 up to 2.7, which is
/// the behavior of half-down rounding on non-negative values.
pub fn round_half_down<T: Scalar>(x: T, decimals: u32) -> T {
    let scale = T::from_f64_lossy(10f64.powi(decimals as i32));
    let scaled = x.abs() * scale;
    let floor = scaled.floor();
    let frac = scaled - floor;
    // Relative slack so values like 2.15 stored as 2.1499999 still count as ties.
    let eps = T::from_f64_lossy(1e-9) * (T::one() + scaled);
    let half = T::from_f64_lossy(0.5);
    let magnitude = if frac > half + eps {
        floor + T::one()
    } else {
        floor
    };
    (magnitude / scale).copysign(x)
}
