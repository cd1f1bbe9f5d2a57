//! Truncated multivariate Taylor jets.
//!
//! A [`Jet3`] stores the Taylor coefficients of a scalar function of `n` real
//! variables around a base point, for every multi-index of total degree at
//! most three. Arithmetic is exact truncated-Taylor algebra, so every mixed
//! partial derivative up to third order is carried without discretisation
//! error.
//!
//! Jets also track the highest degree that is still *valid*. Differentiating
//! a jet lowers that degree by one, and products inherit the smaller of the
//! two degrees. Coefficients above the valid degree are kept at zero, which
//! keeps equality well defined.

mod basis;
pub mod fd;
mod scalar;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

pub use basis::MultiIndex;
pub use fd::fd_oracle;
pub use scalar::Scalar;

use basis::{basis, Basis};

/// Highest derivative order carried by a jet.
pub const MAX_ORDER: u8 = 3;

/// Largest supported variable count.
pub const MAX_VARS: usize = 8;

/// Constant terms smaller than this in magnitude are rejected as divisors.
pub const DIVISION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("variable index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("variable count {0} is not in 1..={MAX_VARS}")]
    BadVariableCount(usize),
    #[error("jets over {left} and {right} variables cannot be combined")]
    DimensionMismatch { left: usize, right: usize },
    #[error("division by a jet with constant term {0:e}")]
    DivisionByZero(f64),
    #[error("multi-index of degree {degree} exceeds the valid order {order}")]
    OrderExceeded { degree: u32, order: u8 },
    #[error("square root of a jet with non-positive constant term {0:e}")]
    NegativeSqrt(f64),
}

/// Truncated Taylor expansion of order at most three in `n` variables.
#[derive(Clone, PartialEq)]
pub struct Jet3 {
    n: usize,
    order: u8,
    coeffs: Vec<f64>,
}

impl Jet3 {
    fn basis(&self) -> &'static Basis {
        basis(self.n)
    }

    /// Constant jet.
    pub fn constant(value: f64, n: usize) -> Result<Self, JetError> {
        let b = checked_basis(n)?;
        let mut coeffs = vec![0.0; b.len()];
        coeffs[0] = value;
        Ok(Self {
            n,
            order: MAX_ORDER,
            coeffs,
        })
    }

    pub fn zero(n: usize) -> Result<Self, JetError> {
        Self::constant(0.0, n)
    }

    /// Jet of the coordinate function `u^i` at `u^i = value`.
    pub fn seed_variable(i: usize, value: f64, n: usize) -> Result<Self, JetError> {
        if i >= n {
            return Err(JetError::IndexOutOfRange { index: i, n });
        }
        let mut jet = Self::constant(value, n)?;
        let idx = jet.basis().unit_index(i);
        jet.coeffs[idx] = 1.0;
        Ok(jet)
    }

    /// Coordinate jets for every variable of a point.
    pub fn seed_point(point: &[f64]) -> Result<Vec<Self>, JetError> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Self::seed_variable(i, v, n))
            .collect()
    }

    /// Builds a jet from Taylor coefficients listed in graded-lex order.
    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        let b = checked_basis(n)?;
        if coeffs.len() != b.len() {
            return Err(JetError::DimensionMismatch {
                left: b.len(),
                right: coeffs.len(),
            });
        }
        Ok(Self {
            n,
            order: MAX_ORDER,
            coeffs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Highest degree whose coefficients are meaningful.
    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficients in graded-lex order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The multi-indices matching [`Jet3::coeffs`].
    pub fn monomials(&self) -> &'static [MultiIndex] {
        self.basis().monomials()
    }

    pub fn taylor_coeff(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        let degree = alpha.degree();
        if alpha.n() != self.n {
            return Err(JetError::DimensionMismatch {
                left: self.n,
                right: alpha.n(),
            });
        }
        if degree > u32::from(self.order) {
            return Err(JetError::OrderExceeded {
                degree,
                order: self.order,
            });
        }
        Ok(self.coeffs[self.basis().index_of(alpha)])
    }

    /// Mixed partial derivative `∂^α f` at the base point.
    pub fn extract(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        Ok(self.taylor_coeff(alpha)? * alpha.factorial())
    }

    /// First partial derivative value `∂f/∂u^i`.
    pub fn d1(&self, i: usize) -> f64 {
        self.coeffs[self.basis().unit_index(i)]
    }

    /// Same jet, truncated to a lower valid order.
    pub fn truncated(mut self, order: u8) -> Self {
        if order < self.order {
            self.order = order;
            let end = self.basis().degree_end(order);
            self.coeffs[end..].iter_mut().for_each(|c| *c = 0.0);
        }
        self
    }

    /// Partial derivative with respect to variable `i`, as a jet of one lower order.
    ///
    /// Panics if the jet has no first-order information left or `i` is out of range;
    /// both indicate a bug in the caller's order bookkeeping.
    pub fn partial(&self, i: usize) -> Self {
        assert!(i < self.n, "variable {i} out of range for {} variables", self.n);
        assert!(self.order > 0, "differentiating a jet of order 0");
        let b = self.basis();
        let order = self.order - 1;
        let mut coeffs = vec![0.0; b.len()];
        for &(src, dst, factor) in b.partial_table(i) {
            if b.degree(dst) <= order {
                coeffs[dst] = factor * self.coeffs[src];
            }
        }
        Self {
            n: self.n,
            order,
            coeffs,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            n: self.n,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add_const(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += k;
        out
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, JetError> {
        self.check_dim(rhs)?;
        Ok(self.zip(rhs, |a, b| a + b))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, JetError> {
        self.check_dim(rhs)?;
        Ok(self.zip(rhs, |a, b| a - b))
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, JetError> {
        self.check_dim(rhs)?;
        let order = self.order.min(rhs.order);
        let b = self.basis();
        let mut coeffs = vec![0.0; b.len()];
        for &(i, j, k) in b.products(order) {
            coeffs[k as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Ok(Self {
            n: self.n,
            order,
            coeffs,
        })
    }

    pub fn try_div(&self, rhs: &Self) -> Result<Self, JetError> {
        self.check_dim(rhs)?;
        self.try_mul(&rhs.recip()?)
    }

    /// Truncated reciprocal series.
    pub fn recip(&self) -> Result<Self, JetError> {
        let a = self.value();
        if a.abs() < DIVISION_FLOOR {
            return Err(JetError::DivisionByZero(a));
        }
        let r = 1.0 / a;
        Ok(self.compose_univariate([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    /// Truncated square-root series.
    pub fn sqrt(&self) -> Result<Self, JetError> {
        let a = self.value();
        if a <= 0.0 {
            return Err(JetError::NegativeSqrt(a));
        }
        let s = a.sqrt();
        Ok(self.compose_univariate([
            s,
            0.5 / s,
            -0.25 / (s * a),
            0.375 / (s * a * a),
        ]))
    }

    /// `f ∘ self` for a univariate `f` given by its derivatives at the constant term.
    pub fn compose_univariate(&self, derivs: [f64; 4]) -> Self {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let d2 = &delta * &delta;
        let d3 = &d2 * &delta;
        let mut out = delta.scale(derivs[1]) + d2.scale(derivs[2] / 2.0) + d3.scale(derivs[3] / 6.0);
        out.coeffs[0] = derivs[0];
        out
    }

    fn zip(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let order = self.order.min(rhs.order);
        let end = self.basis().degree_end(order);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for k in 0..end {
            coeffs[k] = f(self.coeffs[k], rhs.coeffs[k]);
        }
        Self {
            n: self.n,
            order,
            coeffs,
        }
    }

    fn check_dim(&self, rhs: &Self) -> Result<(), JetError> {
        if self.n != rhs.n {
            return Err(JetError::DimensionMismatch {
                left: self.n,
                right: rhs.n,
            });
        }
        Ok(())
    }

    /// Largest coefficient difference, for approximate comparisons.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn checked_basis(n: usize) -> Result<&'static Basis, JetError> {
    if n == 0 || n > MAX_VARS {
        return Err(JetError::BadVariableCount(n));
    }
    Ok(basis(n))
}

impl fmt::Debug for Jet3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (mono, c) in self.monomials().iter().zip(&self.coeffs) {
            if *c != 0.0 {
                map.entry(mono, c);
            }
        }
        map.finish()
    }
}

/// Substitutes inner jets into outer jets expanded around the inner constant terms.
///
/// The inner jets are in `n` variables and the outer jets in `inner.len()`
/// variables. Monomials of the inner displacements are built once, so
/// composing many outer jets against the same inner map is cheap.
pub struct Composer {
    monomials: Vec<Jet3>,
    order: u8,
}

impl Composer {
    pub fn new(inner: &[Jet3]) -> Result<Self, JetError> {
        let outer_n = inner.len();
        let outer = checked_basis(outer_n)?;
        let n = inner.first().map(Jet3::n).unwrap_or(0);
        let one = Jet3::constant(1.0, n)?;
        let deltas: Vec<Jet3> = inner
            .iter()
            .map(|j| {
                if j.n() != n {
                    return Err(JetError::DimensionMismatch { left: n, right: j.n() });
                }
                Ok(j.add_const(-j.value()))
            })
            .collect::<Result<_, _>>()?;
        let order = inner.iter().map(Jet3::order).min().unwrap_or(MAX_ORDER);
        let mut monomials: Vec<Jet3> = Vec::with_capacity(outer.len());
        for mono in outer.monomials() {
            match mono.first_nonzero() {
                None => monomials.push(one.clone()),
                Some(var) => {
                    let prev = outer.index_of(&mono.lowered(var));
                    let next = monomials[prev].try_mul(&deltas[var])?;
                    monomials.push(next);
                }
            }
        }
        Ok(Self { monomials, order })
    }

    pub fn compose(&self, outer: &Jet3) -> Result<Jet3, JetError> {
        if outer.coeffs.len() != self.monomials.len() {
            return Err(JetError::DimensionMismatch {
                left: self.monomials.len(),
                right: outer.coeffs.len(),
            });
        }
        let mut acc = self.monomials[0].scale(outer.coeffs[0]);
        let end = outer.basis().degree_end(outer.order);
        for k in 1..end {
            let c = outer.coeffs[k];
            if c != 0.0 {
                for (a, m) in acc.coeffs.iter_mut().zip(&self.monomials[k].coeffs) {
                    *a += c * m;
                }
            }
        }
        let order = outer.order.min(self.order);
        Ok(acc.truncated(order))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl $trait<&Jet3> for &Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                self.$inner(rhs).expect("jet dimension mismatch")
            }
        }
        impl $trait<Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: Jet3) -> Jet3 {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet3> for &Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: Jet3) -> Jet3 {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Neg for &Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet3> for Jet3 {
    fn add_assign(&mut self, rhs: &Jet3) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Jet3> for Jet3 {
    fn sub_assign(&mut self, rhs: &Jet3) {
        *self = &*self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn seed_variable_sets_value_and_unit_slope() {
        let x = Jet3::seed_variable(0, 2.0, 2).unwrap();
        assert_eq!(x.value(), 2.0);
        assert_eq!(x.taylor_coeff(&mi(&[1, 0])).unwrap(), 1.0);
        assert_eq!(x.coeffs().iter().filter(|c| **c != 0.0).count(), 2);

        let y = Jet3::seed_variable(1, -1.5, 2).unwrap();
        assert_eq!(y.value(), -1.5);
        assert_eq!(y.taylor_coeff(&mi(&[0, 1])).unwrap(), 1.0);
        assert_eq!(y.taylor_coeff(&mi(&[1, 0])).unwrap(), 0.0);
    }

    #[test]
    fn seed_variable_rejects_bad_index() {
        assert_eq!(
            Jet3::seed_variable(3, 0.0, 2),
            Err(JetError::IndexOutOfRange { index: 3, n: 2 })
        );
        assert!(Jet3::seed_variable(0, 0.0, 0).is_err());
        assert!(Jet3::seed_variable(0, 0.0, MAX_VARS + 1).is_err());
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet3::seed_variable(0, 1.0, 1).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.extract(&mi(&[0])).unwrap(), 1.0);
        assert_eq!(sq.extract(&mi(&[1])).unwrap(), 2.0);
        assert_eq!(sq.extract(&mi(&[2])).unwrap(), 2.0);
        assert_eq!(sq.extract(&mi(&[3])).unwrap(), 0.0);
    }

    #[test]
    fn reciprocal_is_geometric_series() {
        let x = Jet3::seed_variable(0, 0.0, 1).unwrap();
        let one = Jet3::constant(1.0, 1).unwrap();
        let q = one.try_div(&x.add_const(1.0)).unwrap();
        let d: Vec<f64> = (0..4).map(|k| q.extract(&mi(&[k])).unwrap()).collect();
        assert_eq!(d, vec![1.0, -1.0, 2.0, -6.0]);
    }

    #[test]
    fn additive_inverse_is_zero() {
        let x = Jet3::seed_variable(1, 0.7, 3).unwrap();
        let y = &x * &x.add_const(2.0);
        let z = &y + &(-&y);
        assert_eq!(z, Jet3::zero(3).unwrap());
    }

    #[test]
    fn division_floor() {
        let x = Jet3::seed_variable(0, 1e-13, 1).unwrap();
        let one = Jet3::constant(1.0, 1).unwrap();
        assert!(matches!(one.try_div(&x), Err(JetError::DivisionByZero(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let a = Jet3::constant(1.0, 1).unwrap();
        let b = Jet3::constant(1.0, 2).unwrap();
        assert_eq!(
            a.try_mul(&b),
            Err(JetError::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn extract_cubic_and_mixed() {
        let x = Jet3::seed_variable(0, 1.0, 1).unwrap();
        let cube = &(&x * &x) * &x;
        assert_eq!(cube.extract(&mi(&[3])).unwrap(), 6.0);

        let u = Jet3::seed_variable(0, 1.0, 2).unwrap();
        let v = Jet3::seed_variable(1, 1.0, 2).unwrap();
        assert_eq!((&u * &v).extract(&mi(&[1, 1])).unwrap(), 1.0);
    }

    #[test]
    fn extract_rejects_degree_four() {
        let x = Jet3::seed_variable(0, 1.0, 2).unwrap();
        assert!(matches!(
            x.extract(&mi(&[2, 2])),
            Err(JetError::OrderExceeded { degree: 4, .. })
        ));
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet3::seed_variable(0, 2.0, 2).unwrap();
        let y = Jet3::seed_variable(1, -1.0, 2).unwrap();
        // f = x^2 y
        let f = &(&x * &x) * &y;
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 2.0 * 2.0 * -1.0);
        assert_eq!(fx.extract(&mi(&[1, 1])).unwrap(), 2.0);
        assert!(fx.extract(&mi(&[1, 2])).is_err());
        let fxy = fx.partial(1);
        assert_eq!(fxy.value(), 4.0);
    }

    #[test]
    fn sqrt_series() {
        let x = Jet3::seed_variable(0, 4.0, 1).unwrap();
        let s = x.sqrt().unwrap();
        let ss = &s * &s;
        assert!(ss.max_abs_diff(&x) < 1e-15);
        assert!(Jet3::constant(-1.0, 1).unwrap().sqrt().is_err());
    }

    #[test]
    fn composition_matches_direct_evaluation() {
        // outer h(x, y) = x*y + 1/(1 + x^2), inner x = u + v^2, y = u v
        let h = |x: &Jet3, y: &Jet3| {
            let one = Jet3::constant(1.0, x.n()).unwrap();
            x * y + one.try_div(&(x * x).add_const(1.0)).unwrap()
        };
        let us = Jet3::seed_point(&[0.2, 0.7]).unwrap();
        let inner_x = &us[0] + &(&us[1] * &us[1]);
        let inner_y = &us[0] * &us[1];
        let direct = h(&inner_x, &inner_y);

        let xs = Jet3::seed_point(&[inner_x.value(), inner_y.value()]).unwrap();
        let outer = h(&xs[0], &xs[1]);
        let composer = Composer::new(&[inner_x, inner_y]).unwrap();
        let composed = composer.compose(&outer).unwrap();
        assert!(composed.max_abs_diff(&direct) < 1e-12);
    }

    fn small_jet(n: usize) -> impl Strategy<Value = Jet3> {
        let len = basis(n).len();
        proptest::collection::vec(-4i32..=4, len)
            .prop_map(move |c| Jet3::from_coeffs(n, c.into_iter().map(f64::from).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn ring_axioms_hold_exactly(a in small_jet(3), b in small_jet(3), c in small_jet(3)) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn reciprocal_inverts(a in small_jet(2), shift in 1.0f64..5.0) {
            let d = a.add_const(shift - a.value());
            let one = Jet3::constant(1.0, 2).unwrap();
            let q = d.recip().unwrap();
            prop_assert!((&q * &d).max_abs_diff(&one) < 1e-9 * (1.0 + a.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max)).powi(3));
        }
    }
}
