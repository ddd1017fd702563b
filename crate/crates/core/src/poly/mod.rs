//! Exact multivariate polynomials over chart coordinates.
//!
//! Coefficients are arbitrary-precision rationals, so every algebraic law in
//! the crate is checked by coefficient equality with no tolerance. Terms are
//! kept in a `BTreeMap` keyed by a graded-lexicographic monomial order, which
//! fixes both the printed form and the floating-point evaluation order.

mod horner;
pub mod parse;
pub mod random;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{GeoError, Result};

pub use horner::CompiledPoly;
pub use parse::parse;

pub type Rational = BigRational;

/// Guard for iterated symbolic products; see [`Poly::checked_mul_with_limit`].
pub const DEFAULT_MAX_DEGREE: u32 = 24;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Exponent vector, one entry per chart coordinate.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    // graded lex: total degree first, then the larger leading exponent wins
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.insert(Monomial::one(nvars), c);
        p
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, int(c))
    }

    /// The coordinate function `x_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index {index} out of range {nvars}");
        let mut exps = vec![0; nvars];
        exps[index] = 1;
        Self::monomial(exps, Rational::one())
    }

    pub fn monomial(exps: Vec<u32>, coeff: Rational) -> Self {
        let mut p = Self::zero(exps.len());
        p.insert(Monomial(exps), coeff);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// repeated monomials.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut p = Self::zero(nvars);
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(GeoError::DimensionMismatch {
                    expected: nvars,
                    found: exps.len(),
                });
            }
            p.accumulate(Monomial(exps), c);
        }
        Ok(p)
    }

    fn insert(&mut self, m: Monomial, c: Rational) {
        if !c.is_zero() {
            self.terms.insert(m, c);
        }
    }

    fn accumulate(&mut self, m: Monomial, c: Rational) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    /// Value of the constant term (zero when absent).
    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one(self.nvars))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn coeff(&self, exps: &[u32]) -> Rational {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Whether any term carries a positive exponent of `index`.
    pub fn depends_on(&self, index: usize) -> bool {
        self.terms.keys().any(|m| m.0[index] > 0)
    }

    fn check_dim(&self, other: &Poly) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(GeoError::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        Ok(self.add_impl(other))
    }

    pub fn checked_sub(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        Ok(self.add_impl(&other.neg_impl()))
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly> {
        self.checked_mul_with_limit(other, DEFAULT_MAX_DEGREE)
    }

    pub fn checked_mul_with_limit(&self, other: &Poly, limit: u32) -> Result<Poly> {
        self.check_dim(other)?;
        if !self.is_zero() && !other.is_zero() {
            let degree = self.degree() + other.degree();
            if degree > limit {
                return Err(GeoError::DegreeLimit { degree, limit });
            }
        }
        Ok(self.mul_impl(other))
    }

    fn add_impl(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(m.clone(), c.clone());
        }
        out
    }

    fn neg_impl(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    fn mul_impl(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.accumulate(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn scale_int(&self, c: i64) -> Poly {
        self.scale(&int(c))
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative with respect to coordinate `index`.
    pub fn partial(&self, index: usize) -> Result<Poly> {
        if index >= self.nvars {
            return Err(GeoError::IndexOutOfRange {
                index,
                dim: self.nvars,
            });
        }
        Ok(self.d(index))
    }

    /// Unchecked partial derivative; panics on a bad index.
    pub fn d(&self, index: usize) -> Poly {
        assert!(index < self.nvars, "partial index out of range");
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[index];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[index] = e - 1;
            out.accumulate(Monomial(exps), c * int(e as i64));
        }
        out
    }

    /// Double-precision evaluation by nested Horner schemes.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(GeoError::DimensionMismatch {
                expected: self.nvars,
                found: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(GeoError::NonFinite(i));
        }
        Ok(self.compile().eval(x))
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }

    /// Canonical text using the given variable names, highest term first.
    pub fn to_string_with(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.nvars, "one name per variable");
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || m.degree() == 0 {
                factors.push(mag.to_string());
            }
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[i].clone()),
                    _ => factors.push(format!("{}^{}", names[i], e)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("x{i}")).collect();
        f.write_str(&self.to_string_with(&names))
    }
}

pub fn to_f64(c: &Rational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

// Operator forms panic on dimension mismatch or degree overflow; the
// `checked_*` methods are the fallible surface.
macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a> $tr<&'a Poly> for &'a Poly {
            type Output = Poly;
            fn $method(self, rhs: &'a Poly) -> Poly {
                let f: fn(&Poly, &Poly) -> Result<Poly> = $body;
                match f(self, rhs) {
                    Ok(p) => p,
                    Err(e) => panic!("polynomial {}: {e}", stringify!($method)),
                }
            }
        }
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: &'a Poly) -> Poly {
                (&self).$method(rhs)
            }
        }
        impl<'a> $tr<Poly> for &'a Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.checked_add(b));
binop!(Sub, sub, |a, b| a.checked_sub(b));
binop!(Mul, mul, |a, b| a.checked_mul(b));

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.neg_impl()
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.neg_impl()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // (q1, p1, z) layout for the examples below
    fn q() -> Poly {
        Poly::var(3, 0)
    }
    fn p() -> Poly {
        Poly::var(3, 1)
    }
    fn z() -> Poly {
        Poly::var(3, 2)
    }

    #[test]
    fn additive_inverse_and_like_terms() {
        assert!((q() + (-q())).is_zero());
        let p2 = p() * p();
        assert_eq!(&p2 + &p2, p2.scale_int(2));
        let t = Poly::var(4, 0);
        let lhs = Poly::var(4, 1) * Poly::var(4, 2) + Poly::var(4, 3);
        let sum = &lhs + &t;
        assert_eq!(sum.len(), 3);
    }

    #[test]
    fn products() {
        assert_eq!((q() * p()).coeff(&[1, 1, 0]), int(1));
        let dsq = (q() + p()) * (q() - p());
        assert_eq!(dsq, q() * q() - p() * p());
        let x = q() * z() + p().scale(&rat(3, 7));
        assert_eq!(Poly::one(3) * &x, x);
        assert_eq!((&x * &x).degree(), x.degree() * 2);
    }

    #[test]
    fn partials() {
        let h = (p() * p()).scale(&rat(1, 2));
        assert_eq!(h.partial(1).unwrap(), p());
        assert!((q() * p()).partial(2).unwrap().is_zero());
        // layout (t, z): t^2 z
        let tz = Poly::monomial(vec![2, 1], int(1));
        assert_eq!(tz.partial(0).unwrap(), Poly::monomial(vec![1, 1], int(2)));
        assert!(matches!(
            h.partial(3),
            Err(GeoError::IndexOutOfRange { index: 3, dim: 3 })
        ));
    }

    #[test]
    fn evaluation() {
        let h = Poly::monomial(vec![0, 2], rat(1, 2));
        assert_eq!(h.eval(&[3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(Poly::zero(2).eval(&[1.5, -4.0]).unwrap(), 0.0);
        assert_eq!((q() * p() + z()).eval(&[1.0, 2.0, 5.0]).unwrap(), 7.0);
        assert!(matches!(h.eval(&[1.0]), Err(GeoError::DimensionMismatch { .. })));
        assert!(matches!(
            h.eval(&[1.0, f64::NAN]),
            Err(GeoError::NonFinite(1))
        ));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Poly::var(2, 0);
        let b = Poly::var(3, 0);
        assert!(a.checked_add(&b).is_err());
        assert!(a.checked_mul(&b).is_err());
    }

    #[test]
    fn degree_limit_is_explicit() {
        let x = Poly::var(1, 0).pow(10);
        assert!(x.checked_mul_with_limit(&x, 24).is_ok());
        assert_eq!(
            x.checked_mul_with_limit(&x, 15),
            Err(GeoError::DegreeLimit {
                degree: 20,
                limit: 15
            })
        );
        let big = Poly::var(1, 0).pow(13);
        assert!(matches!(
            big.checked_mul(&big),
            Err(GeoError::DegreeLimit { degree: 26, .. })
        ));
    }

    #[test]
    fn graded_lex_printing() {
        let names: Vec<String> = ["q1", "p1", "z"].iter().map(|s| s.to_string()).collect();
        let h = (p() * p()).scale(&rat(1, 2)) - q().scale_int(3) + Poly::one(3);
        assert_eq!(h.to_string_with(&names), "1/2*p1^2 - 3*q1 + 1");
        assert_eq!((-z()).to_string_with(&names), "-z");
        assert_eq!(Poly::zero(3).to_string_with(&names), "0");
    }
}
