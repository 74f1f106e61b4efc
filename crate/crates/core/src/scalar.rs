//! Scalar abstraction for the numeric parts of the solver.
//!
//! Game structure, feasibility and the reduced game are always exact. The
//! stage linear programs, the backward sweep and the verification passes are
//! generic over [`Scalar`], so the same code runs in `f64`, `f32` or exact
//! rationals.

use std::fmt::{Debug, Display};

use num_traits::{Num, Signed, ToPrimitive};

use crate::rational::Rational;

pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static {
    /// True when arithmetic is exact and tolerances are zero.
    const EXACT: bool;

    fn from_rational(value: &Rational) -> Self;

    /// Feasibility tolerance for LP constraints and phase-1 objectives.
    fn tolerance() -> Self;

    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tolerance() -> Self;

    fn to_f64(&self) -> f64;

    /// Exact value of `self`. Non-finite floats map to zero.
    fn to_rational(&self) -> Rational;

    fn from_i64(value: i64) -> Self {
        Self::from_rational(&crate::rational::int(value))
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(value: &Rational) -> Self {
        crate::rational::to_f64(value)
    }

    fn tolerance() -> Self {
        1e-9
    }

    fn pivot_tolerance() -> Self {
        1e-12
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_default()
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(value: &Rational) -> Self {
        crate::rational::to_f64(value) as f32
    }

    fn tolerance() -> Self {
        1e-5
    }

    fn pivot_tolerance() -> Self {
        1e-6
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_default()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn tolerance() -> Self {
        num_traits::Zero::zero()
    }

    fn pivot_tolerance() -> Self {
        num_traits::Zero::zero()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }
}
