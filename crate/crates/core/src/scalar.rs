use std::fmt::Debug;

use num::{BigRational, FromPrimitive, Num, ToPrimitive};

/// Number type the exact oracles are generic over.
///
/// Only field operations and ordering are required, so `f32`, `f64` and
/// [`BigRational`] all qualify. Randomized algorithms work in `f64`.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts an `f64` constant. Panics on NaN or infinity.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable")
    }

    /// Lossy view used for sampling and reporting.
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self > other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

/// Exact conversion of a finite `f64` into a rational.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| panic!("{x} has no exact rational form"))
}
