//! Extended precision: error-free transformations, double-double arithmetic
//! and exact rationals.
//!
//! Double-double values carry about 106 significand bits and back the
//! high-precision residuals. [`Rational`] is exact and serves as the oracle
//! in tests; production code only uses it to round exactly known integers
//! and hexadecimal literals.

use std::cmp::Ordering;
use std::hint::black_box;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};

/// `true` when the FMA-based product is used, `false` for Dekker splitting.
pub const FMA_TWO_PROD: bool = cfg!(target_feature = "fma");

/// s = fl(a + b) and the exact rounding error e, s + e = a + b.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Same as [`two_sum`] under the precondition |a| ≥ |b| (or a = 0).
#[inline]
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// p = fl(a·b) and the exact rounding error e, p + e = a·b.
///
/// Exact as long as the error term does not underflow (roughly |a·b| ≥ 2⁻⁹⁶⁹).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    if FMA_TWO_PROD {
        two_prod_fma(a, b)
    } else {
        two_prod_dekker(a, b)
    }
}

#[inline]
pub fn two_prod_fma(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Dekker's product with Veltkamp splitting. Needs |a|, |b| < 2⁹⁹⁶.
pub fn two_prod_dekker(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let c = SPLITTER * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// Unevaluated sum `hi + lo` with `hi = fl(hi + lo)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }

    /// Renormalizes an arbitrary pair.
    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        DoubleDouble { hi, lo }
    }

    pub fn from_product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact value as a rational; `None` for non-finite parts.
    pub fn to_rational(self) -> Option<Rational> {
        Some(Rational::from_f64(self.hi)?.add(&Rational::from_f64(self.lo)?))
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        dd_add(self, rhs)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        dd_add(self, -rhs)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        dd_mul(self, rhs)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        dd_div(self, rhs)
    }
}

/// Accurate double-double sum, relative error below 3·2⁻¹⁰⁶.
pub fn dd_add(x: DoubleDouble, y: DoubleDouble) -> DoubleDouble {
    let (sh, sl) = two_sum(x.hi, y.hi);
    let (th, tl) = two_sum(x.lo, y.lo);
    let c = sl + th;
    let (vh, vl) = fast_two_sum(sh, c);
    let w = tl + vl;
    let (hi, lo) = fast_two_sum(vh, w);
    DoubleDouble { hi, lo }
}

/// Double-double product, relative error below 4·2⁻¹⁰⁶.
pub fn dd_mul(x: DoubleDouble, y: DoubleDouble) -> DoubleDouble {
    let (ch, cl1) = two_prod(x.hi, y.hi);
    let tl0 = x.lo * y.lo;
    let tl1 = x.hi.mul_add(y.lo, tl0);
    let cl2 = x.lo.mul_add(y.hi, tl1);
    let (hi, lo) = fast_two_sum(ch, cl1 + cl2);
    DoubleDouble { hi, lo }
}

/// Double-double quotient, relative error of order 10·2⁻¹⁰⁶.
pub fn dd_div(x: DoubleDouble, y: DoubleDouble) -> DoubleDouble {
    let th = x.hi / y.hi;
    let r = dd_mul(y, DoubleDouble::from_f64(th));
    let pi_h = x.hi - r.hi;
    let delta_l = x.lo - r.lo;
    let delta = pi_h + delta_l;
    let tl = delta / y.hi;
    let (hi, lo) = fast_two_sum(th, tl);
    DoubleDouble { hi, lo }
}

/// Single rounding of a normalized double-double to binary64.
pub fn dd_round(x: DoubleDouble) -> f64 {
    x.hi + x.lo
}

/// Residual r = b − A·x with every component accumulated in double-double
/// (exact products, accurate sums) and rounded once at the end.
pub fn dd_residual(a: &Matrix, b: &Vector, x: &Vector) -> Result<Vector> {
    if a.cols() != x.len() || a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "residual of {}x{} system with rhs {} and solution {}",
            a.rows(),
            a.cols(),
            b.len(),
            x.len()
        )));
    }
    let r = (0..a.rows())
        .map(|i| {
            let acc = a
                .row(i)
                .iter()
                .zip(x.iter())
                .fold(DoubleDouble::from_f64(b[i]), |acc, (&aij, &xj)| {
                    dd_add(acc, -DoubleDouble::from_product(aij, xj))
                });
            dd_round(acc)
        })
        .collect();
    Ok(Vector::new(r))
}

/// Checks that binary64 addition rounds to nearest with ties to even.
pub fn rounding_probe() -> bool {
    let one = black_box(1.0f64);
    let half_ulp = black_box(f64::EPSILON / 2.0);
    let tie_down = one + half_ulp == 1.0;
    let tie_up = one + 3.0 * half_ulp == 1.0 + 2.0 * f64::EPSILON;
    let above = one + half_ulp * (1.0 + f64::EPSILON) == 1.0 + f64::EPSILON;
    let negative = -one - half_ulp == -1.0;
    tie_down && tie_up && above && negative
}

/// Exact rational number with arbitrary-precision numerator and denominator,
/// always in lowest terms with a positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let d = denom.into();
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), d)))
    }

    /// Exact conversion; every finite binary64 is a dyadic rational.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        let bits = v.to_bits();
        let negative = bits >> 63 == 1;
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = BigInt::from(mant);
        let q = Rational::from_integer(if negative { -m } else { m });
        Some(q.mul_pow2(e))
    }

    /// self · 2^k, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        let shift = k.unsigned_abs() as usize;
        if k >= 0 {
            Rational(BigRational::new(
                self.0.numer() << shift,
                self.0.denom().clone(),
            ))
        } else {
            Rational(BigRational::new(
                self.0.numer().clone(),
                self.0.denom() << shift,
            ))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn add(&self, other: &Rational) -> Rational {
        Rational(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Rational) -> Rational {
        Rational(&self.0 - &other.0)
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        Rational(&self.0 * &other.0)
    }

    pub fn div(&self, other: &Rational) -> Result<Rational> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &other.0))
    }

    pub fn compare(&self, other: &Rational) -> Ordering {
        self.0.cmp(&other.0)
    }

    /// Correctly rounded conversion (round to nearest, ties to even),
    /// including subnormals; overflows to ±∞.
    pub fn to_nearest_f64(&self) -> f64 {
        let (sign, n) = self.0.numer().clone().into_parts();
        if sign == Sign::NoSign {
            return 0.0;
        }
        let d = self.0.denom().magnitude().clone();
        let mut e = n.bits() as i64 - d.bits() as i64 - 53;
        if e < -1074 {
            e = -1074;
        }
        let divide = |e: i64| {
            let (num, den) = if e >= 0 {
                (n.clone(), &d << e as usize)
            } else {
                (&n << (-e) as usize, d.clone())
            };
            let q = &num / &den;
            let r = &num - &q * &den;
            (q, r, den)
        };
        let (mut q, mut r, mut den) = divide(e);
        if q.bits() > 53 {
            e += 1;
            (q, r, den) = divide(e);
        }
        let mut q = q.to_u64().expect("quotient fits in 54 bits");
        let twice_r = r << 1usize;
        if twice_r > den || (twice_r == den && q & 1 == 1) {
            q += 1;
        }
        if q == 1u64 << 53 {
            q = 1u64 << 52;
            e += 1;
        }
        let magnitude = if e > 971 {
            f64::INFINITY
        } else {
            ldexp_exact(q as f64, e)
        };
        if sign == Sign::Minus {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// x·2^e when the result is representable (no double rounding).
fn ldexp_exact(mut x: f64, mut e: i64) -> f64 {
    let pow2 = |k: i64| f64::from_bits(((k + 1023) as u64) << 52);
    while e > 1000 {
        x *= pow2(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= pow2(-1000);
        e += 1000;
    }
    x * pow2(e)
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Exact residual b − A·x in rational arithmetic.
pub fn rational_residual(a: &Matrix, b: &Vector, x: &Vector) -> Vec<Rational> {
    let xs: Vec<Rational> = x.iter().map(|&v| Rational::from_f64(v).unwrap()).collect();
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(&xs)
                .fold(Rational::from_f64(b[i]).unwrap(), |acc, (&aij, xj)| {
                    acc.sub(&Rational::from_f64(aij).unwrap().mul(xj))
                })
        })
        .collect()
}
