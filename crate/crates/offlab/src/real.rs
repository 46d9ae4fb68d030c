//! Scalar abstraction for the numeric core.
//!
//! Everything analytic in this crate is generic over [`Real`], so the same
//! formulas run in `f32` or `f64`. The concrete aliases at the crate root
//! cover the common `f64` case.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar with the special functions the analytic layer needs.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;
}

impl Real for f32 {
    fn erfc(self) -> f32 {
        libm::erfcf(self)
    }
}

impl Real for f64 {
    fn erfc(self) -> f64 {
        libm::erfc(self)
    }
}

/// Pull an `f64` constant into the working scalar type.
#[inline]
pub(crate) fn cast<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("constant must be representable in the scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_matches_known_values() {
        assert_eq!(Real::erfc(0.0f64), 1.0);
        assert!((Real::erfc(1.0f64) - 0.157_299_207_050_285_13).abs() < 1e-16);
        let x = 0.7f64;
        assert!((Real::erfc(-x) - (2.0 - Real::erfc(x))).abs() < 1e-15);
    }

    #[test]
    fn erfc_f32_is_consistent_with_f64() {
        for &x in &[0.0f32, 0.5, 1.0, 2.0, 3.5] {
            let wide = Real::erfc(f64::from(x));
            assert!((f64::from(Real::erfc(x)) - wide).abs() < 1e-6);
        }
    }
}
