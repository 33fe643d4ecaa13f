//! Scalar abstractions.
//!
//! Model coefficients are generic over [`Coefficient`]: the default is an
//! exact 64-bit rational, but `f64` works for callers that accept float
//! comparisons. LP relaxations run over any [`LpFloat`].

use std::fmt::{Debug, Display};

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Coefficient:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Denominator of the value when it is an exact rational, `None` for floats.
    fn denominator(&self) -> Option<i64>;

    /// Numerator after scaling by `scale`, when the product is an integer.
    fn scaled_integer(&self, scale: i64) -> Option<i128>;

    fn int(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("integer coefficient")
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Coefficient for Rational64 {
    fn denominator(&self) -> Option<i64> {
        Some(*self.denom())
    }

    fn scaled_integer(&self, scale: i64) -> Option<i128> {
        let num = *self.numer() as i128 * scale as i128;
        let den = *self.denom() as i128;
        num.is_multiple_of(&den).then(|| num / den)
    }
}

impl Coefficient for f64 {
    fn denominator(&self) -> Option<i64> {
        None
    }

    fn scaled_integer(&self, scale: i64) -> Option<i128> {
        let v = self * scale as f64;
        (v.fract() == 0.0 && v.abs() < 1e30).then(|| v as i128)
    }
}

/// Floating-point type usable inside the simplex.
pub trait LpFloat: Float + Debug + Display + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from(v).expect("representable float")
    }
}

impl<T: Float + Debug + Display + Send + Sync + 'static> LpFloat for T {}

/// Least common multiple of the denominators, `None` if any value is inexact
/// or the multiple overflows.
pub fn common_denominator<'a, C: Coefficient>(values: impl IntoIterator<Item = &'a C>) -> Option<i64> {
    let mut lcm: i64 = 1;
    for v in values {
        let d = v.denominator()?;
        lcm = lcm.checked_mul(d / lcm.gcd(&d))?;
    }
    Some(lcm)
}
