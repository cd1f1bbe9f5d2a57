use std::ops::{Add, Mul, Neg, Sub};

use super::{Jet3, JetError, DIVISION_FLOOR};

/// Numbers the chart and immersion formulas can be evaluated over.
///
/// Implemented for plain `f64` (used by the finite-difference oracle) and
/// for [`Jet3`] (used everywhere derivatives are needed).
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// A constant living in the same space as `self`.
    fn lift(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn scale(&self, k: f64) -> Self;
    fn try_div(&self, rhs: &Self) -> Result<Self, JetError>;
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }

    fn value(&self) -> f64 {
        *self
    }

    fn scale(&self, k: f64) -> Self {
        self * k
    }

    fn try_div(&self, rhs: &Self) -> Result<Self, JetError> {
        if rhs.abs() < DIVISION_FLOOR {
            return Err(JetError::DivisionByZero(*rhs));
        }
        Ok(self / rhs)
    }
}

impl Scalar for Jet3 {
    fn lift(&self, v: f64) -> Self {
        Jet3::constant(v, self.n()).expect("jet already has a valid variable count")
    }

    fn value(&self) -> f64 {
        Jet3::value(self)
    }

    fn scale(&self, k: f64) -> Self {
        Jet3::scale(self, k)
    }

    fn try_div(&self, rhs: &Self) -> Result<Self, JetError> {
        Jet3::try_div(self, rhs)
    }
}
