//! Scalar abstraction shared by the double and high-precision paths.
//!
//! Everything numeric in the crate (the chain-rule oracle, the fitter and the
//! curvature check) is generic over [`Real`], so the same code runs in `f64`
//! and in the software [`Hp`] type. `Hp` wraps an `astro-float` big float
//! whose working precision is a process-wide setting.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Environment variable that overrides the high-precision working digits.
pub const PRECISION_ENV: &str = "TAUFORGE_PRECISION";

/// Default number of significant decimal digits for [`Hp`].
pub const DEFAULT_DIGITS: usize = 100;

/// Smallest accepted working precision; fitting needs at least this much.
pub const MIN_DIGITS: usize = 50;

static PRECISION_BITS: AtomicUsize = AtomicUsize::new(digits_to_bits(DEFAULT_DIGITS));

const RM: RoundingMode = RoundingMode::ToEven;

const fn digits_to_bits(digits: usize) -> usize {
    // log2(10) ~ 3.3219; round up to whole 64-bit words plus one guard word.
    let bits = (digits * 33220).div_ceil(10000);
    (bits / 64 + 2) * 64
}

/// Set the working precision of [`Hp`] in significant decimal digits.
///
/// Values below [`MIN_DIGITS`] are raised to it.
pub fn set_precision_digits(digits: usize) {
    let digits = digits.max(MIN_DIGITS);
    PRECISION_BITS.store(digits_to_bits(digits), AtomicOrdering::SeqCst);
}

/// Current working precision in decimal digits (rounded down).
pub fn precision_digits() -> usize {
    let bits = PRECISION_BITS.load(AtomicOrdering::SeqCst) - 64;
    bits * 10000 / 33220
}

pub(crate) fn precision_bits() -> usize {
    PRECISION_BITS.load(AtomicOrdering::SeqCst)
}

/// Read [`PRECISION_ENV`] and apply it if present. Returns the digits in effect.
pub fn precision_from_env() -> usize {
    if let Some(d) = std::env::var(PRECISION_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        set_precision_digits(d);
    }
    precision_digits()
}

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Field operations plus the handful of transcendental functions the oracle
/// needs.
pub trait Real:
    Clone
    + Send
    + Sync
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(x: f64) -> Self;
    fn from_i64(x: i64) -> Self;
    fn from_rational(q: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    fn pi() -> Self;
    /// Relative unit roundoff of the type at its current precision.
    fn epsilon() -> f64;
    /// True for the software high-precision type.
    fn is_high_precision() -> bool;

    fn zero() -> Self {
        Self::from_i64(0)
    }
    fn one() -> Self {
        Self::from_i64(1)
    }
    fn is_zero(&self) -> bool {
        self.to_f64() == 0.0
    }
    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn from_rational(q: &BigRational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn is_high_precision() -> bool {
        false
    }
}

/// Software floating point at the process-wide working precision.
#[derive(Clone)]
pub struct Hp(BigFloat);

impl Hp {
    fn wrap(x: BigFloat) -> Self {
        debug_assert!(!x.is_nan(), "high-precision arithmetic produced NaN");
        Hp(x)
    }

    /// Parse a decimal string such as `"0.125"` or `"-3e-40"`.
    pub fn parse(s: &str) -> Self {
        let p = precision_bits();
        with_consts(|cc| Hp::wrap(BigFloat::parse(s, Radix::Dec, p, RM, cc)))
    }

    fn from_bigint(n: &BigInt) -> Self {
        if let Some(v) = n.to_i64() {
            return Hp::from_i64(v);
        }
        let p = precision_bits();
        let (sign, digits) = n.to_u64_digits();
        let base = BigFloat::from_u128(1u128 << 64, p);
        let mut acc = BigFloat::from_u64(0, p);
        for d in digits.iter().rev() {
            acc = acc.mul(&base, p, RM).add(&BigFloat::from_u64(*d, p), p, RM);
        }
        if sign == BigSign::Minus {
            acc = acc.neg();
        }
        Hp::wrap(acc)
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_string_digits(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        let rounded = {
            let mut x = self.0.clone();
            let bits = digits_to_bits(digits).min(precision_bits());
            x.set_precision(bits, RM).ok();
            x
        };
        with_consts(|cc| rounded.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".into())
    }
}

impl fmt::Debug for Hp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_digits(30))
    }
}

impl fmt::Display for Hp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_digits(precision_digits().min(60)))
    }
}

impl PartialEq for Hp {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Hp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! hp_binop {
    ($tr:ident, $f:ident, $m:ident, $atr:ident, $af:ident) => {
        impl $tr for Hp {
            type Output = Hp;
            fn $f(self, rhs: Hp) -> Hp {
                Hp::wrap(self.0.$m(&rhs.0, precision_bits(), RM))
            }
        }
        impl<'a> $tr<&'a Hp> for &'a Hp {
            type Output = Hp;
            fn $f(self, rhs: &'a Hp) -> Hp {
                Hp::wrap(self.0.$m(&rhs.0, precision_bits(), RM))
            }
        }
        impl $atr for Hp {
            fn $af(&mut self, rhs: Hp) {
                self.0 = self.0.$m(&rhs.0, precision_bits(), RM);
            }
        }
    };
}

hp_binop!(Add, add, add, AddAssign, add_assign);
hp_binop!(Sub, sub, sub, SubAssign, sub_assign);
hp_binop!(Mul, mul, mul, MulAssign, mul_assign);

impl Div for Hp {
    type Output = Hp;
    fn div(self, rhs: Hp) -> Hp {
        Hp::wrap(self.0.div(&rhs.0, precision_bits(), RM))
    }
}

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(self.0.neg())
    }
}

impl Real for Hp {
    fn from_f64(x: f64) -> Self {
        Hp::wrap(BigFloat::from_f64(x, precision_bits()))
    }
    fn from_i64(x: i64) -> Self {
        Hp::wrap(BigFloat::from_i64(x, precision_bits()))
    }
    fn from_rational(q: &BigRational) -> Self {
        let n = Hp::from_bigint(q.numer());
        if q.denom() == &BigInt::from(1) {
            n
        } else {
            n / Hp::from_bigint(q.denom())
        }
    }
    fn to_f64(&self) -> f64 {
        let Some((words, _bits, sign, exponent, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        if self.0.is_zero() {
            return 0.0;
        }
        // Mantissa words are little-endian with the binary point before the
        // most significant bit of the top word: value = 0.m * 2^exponent.
        let top = *words.last().unwrap_or(&0) as f64;
        let next = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
        let frac = (top + next / 18446744073709551616.0) / 18446744073709551616.0;
        let v = frac * 2f64.powi(exponent);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }
    fn abs(&self) -> Self {
        Hp(self.0.abs())
    }
    fn sqrt(&self) -> Self {
        Hp::wrap(self.0.sqrt(precision_bits(), RM))
    }
    fn sin_cos(&self) -> (Self, Self) {
        let p = precision_bits();
        with_consts(|cc| (Hp::wrap(self.0.sin(p, RM, cc)), Hp::wrap(self.0.cos(p, RM, cc))))
    }
    fn pi() -> Self {
        let p = precision_bits();
        with_consts(|cc| Hp::wrap(cc.pi(p, RM)))
    }
    fn epsilon() -> f64 {
        2f64.powi(-((precision_bits() - 64) as i32))
    }
    fn is_high_precision() -> bool {
        true
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Debug)]
pub struct CompensatedSum<S: Real> {
    sum: S,
    comp: S,
}

impl<S: Real> Default for CompensatedSum<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Real> CompensatedSum<S> {
    pub fn new() -> Self {
        CompensatedSum { sum: S::zero(), comp: S::zero() }
    }

    pub fn add(&mut self, x: S) {
        let t = self.sum.clone() + x.clone();
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum.clone() - t.clone()) + x;
        } else {
            self.comp += (x - t.clone()) + self.sum.clone();
        }
        self.sum = t;
    }

    pub fn value(&self) -> S {
        self.sum.clone() + self.comp.clone()
    }
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hp_round_trips_through_f64() {
        for x in [0.3, -1e-40, 12345.678, 1.0, -2.5e17] {
            let h = Hp::from_f64(x);
            assert_eq!(h.to_f64(), x, "{x}");
        }
        assert_eq!(Hp::zero().to_f64(), 0.0);
    }

    #[test]
    fn hp_rational_is_exact_to_working_precision() {
        let q = BigRational::new(BigInt::from(1), BigInt::from(3));
        let third = Hp::from_rational(&q);
        let err = (third * Hp::from_i64(3) - Hp::one()).abs();
        assert!(err.to_f64() < 1e-90);
        let big = BigRational::from_integer(BigInt::from(10).pow(40) + BigInt::from(7));
        let h = Hp::from_rational(&big);
        let back = h - Hp::parse("1e40");
        assert!((back.to_f64() - 7.0).abs() < 1e-20);
    }

    #[test]
    fn hp_trig_matches_double() {
        let x = Hp::from_f64(0.7);
        let (s, c) = x.sin_cos();
        assert!((s.to_f64() - 0.7f64.sin()).abs() < 1e-15);
        assert!((c.to_f64() - 0.7f64.cos()).abs() < 1e-15);
        let one = s.clone() * s + c.clone() * c;
        assert!((one - Hp::one()).abs().to_f64() < 1e-95);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 10.0);
    }

    #[test]
    fn digits_map_to_whole_words() {
        assert!(digits_to_bits(50) >= 167);
        assert_eq!(digits_to_bits(100) % 64, 0);
    }
}
