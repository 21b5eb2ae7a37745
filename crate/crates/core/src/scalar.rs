//! Real scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point field used for matrix entries and polynomial coefficients.
///
/// Implemented for `f32` and `f64`. Tolerances in this crate are written as
/// `f64` literals and converted with [`Real::lit`]; convergence thresholds are
/// additionally floored at a small multiple of `epsilon()` so that `f32`
/// instantiations terminate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + NumAssign
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(tol, factor * epsilon)`.
    fn tol_floor(tol: f64, factor: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(factor);
        let t = Self::lit(tol);
        if t > floor {
            t
        } else {
            floor
        }
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
}

/// Complex scalar over a [`Real`] field.
pub type Cx<T> = num_complex::Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Cx::new(re, im)
}

#[inline]
pub(crate) fn cis<T: Real>(angle: T) -> Cx<T> {
    Cx::new(angle.cos(), angle.sin())
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi<T: Real>(angle: T) -> T {
    let tau = T::TAU();
    let mut a = angle % tau;
    if a < T::zero() {
        a += tau;
    }
    if a >= tau {
        a -= tau;
    }
    a
}

/// Wraps an angle into `[0, π)`.
pub fn wrap_pi<T: Real>(angle: T) -> T {
    let pi = T::PI();
    let mut a = angle % pi;
    if a < T::zero() {
        a += pi;
    }
    if a >= pi {
        a -= pi;
    }
    a
}

/// Smallest absolute difference between two angles modulo `period`.
pub fn angle_distance<T: Real>(a: T, b: T, period: T) -> T {
    let mut d = (a - b) % period;
    if d < T::zero() {
        d += period;
    }
    d.min(period - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        assert!((wrap_two_pi(-0.5_f64) - (std::f64::consts::TAU - 0.5)).abs() < 1e-15);
        assert!((wrap_pi(3.0 * std::f64::consts::PI / 2.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(angle_distance(0.1_f64, std::f64::consts::TAU - 0.1, std::f64::consts::TAU) < 0.2 + 1e-15);
    }

    #[test]
    fn f32_floor_kicks_in() {
        let t: f32 = Real::tol_floor(1e-14, 10.0);
        assert!(t >= f32::EPSILON * 10.0);
        let t: f64 = Real::tol_floor(1e-14, 10.0);
        assert_eq!(t, 1e-14);
    }
}
