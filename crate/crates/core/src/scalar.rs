//! Scalar abstraction for all simulator math.
//!
//! Everything numeric in this crate is generic over a floating-point scalar
//! so the same code runs in `f32` or `f64`. The quoted tolerances throughout
//! the crate assume `f64`; `f32` is usable for cheap previews only.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// Shorthand used everywhere a literal enters generic code.
#[inline]
pub fn fl<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must convert to scalar type")
}

/// π in the scalar type.
#[inline]
pub fn pi<T: Scalar>() -> T {
    fl(std::f64::consts::PI)
}

/// 2π in the scalar type.
#[inline]
pub fn tau<T: Scalar>() -> T {
    fl(std::f64::consts::TAU)
}

/// e^{iθ} as a complex scalar.
#[inline]
pub fn cis<T: Scalar>(theta: T) -> C<T> {
    let (s, c) = theta.sin_cos();
    C::new(c, s)
}

/// Ordinary frequency in kHz to angular frequency in rad/s.
///
/// All user-facing frequencies follow the "×2π kHz" convention; internal
/// computations are always angular (rad/s).
#[inline]
pub fn khz_to_angular<T: Scalar>(khz: T) -> T {
    khz * fl::<T>(1e3) * tau::<T>()
}

/// Angular frequency in rad/s back to ordinary kHz.
#[inline]
pub fn angular_to_khz<T: Scalar>(omega: T) -> T {
    omega / (fl::<T>(1e3) * tau::<T>())
}
