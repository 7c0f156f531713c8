//! Sparse polynomials in the invariants `tau_1..tau_r` with coefficients
//! affine in the coupling `nu`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{CompensatedSum, Real};
use crate::rootsys::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("product of two nu-dependent polynomials leaves the nu-linear class")]
    NuOverflow,
    #[error("variable index {index} out of range for rank {rank}")]
    VariableIndex { index: usize, rank: usize },
    #[error("substitution images must be nu-free (image of tau_{0} is not)")]
    NuDependentImage(usize),
    #[error("bad term record: {0}")]
    BadTerm(String),
}

/// `c0 + c1 nu`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct NuLinear {
    pub c0: Rational,
    pub c1: Rational,
}

impl NuLinear {
    pub fn new(c0: Rational, c1: Rational) -> Self {
        NuLinear { c0, c1 }
    }

    pub fn constant(c0: Rational) -> Self {
        NuLinear { c0, c1: Rational::zero() }
    }

    pub fn nu(c1: Rational) -> Self {
        NuLinear { c0: Rational::zero(), c1 }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn is_nu_free(&self) -> bool {
        self.c1.is_zero()
    }

    pub fn at(&self, nu: &Rational) -> Rational {
        &self.c0 + &self.c1 * nu
    }

    pub fn scale(&self, k: &Rational) -> NuLinear {
        NuLinear { c0: &self.c0 * k, c1: &self.c1 * k }
    }

    pub fn try_mul(&self, other: &NuLinear) -> Result<NuLinear, PolyError> {
        if !self.is_nu_free() && !other.is_nu_free() {
            return Err(PolyError::NuOverflow);
        }
        Ok(NuLinear { c0: &self.c0 * &other.c0, c1: &self.c0 * &other.c1 + &self.c1 * &other.c0 })
    }
}

impl Add<&NuLinear> for &NuLinear {
    type Output = NuLinear;
    fn add(self, o: &NuLinear) -> NuLinear {
        NuLinear { c0: &self.c0 + &o.c0, c1: &self.c1 + &o.c1 }
    }
}

impl Sub<&NuLinear> for &NuLinear {
    type Output = NuLinear;
    fn sub(self, o: &NuLinear) -> NuLinear {
        NuLinear { c0: &self.c0 - &o.c0, c1: &self.c1 - &o.c1 }
    }
}

impl fmt::Display for NuLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.c0.is_zero(), self.c1.is_zero()) {
            (_, true) => write!(f, "{}", self.c0),
            (true, false) => write!(f, "{}nu", self.c1),
            (false, false) => write!(f, "({} + {}nu)", self.c0, self.c1),
        }
    }
}

/// Exponent vector `(p_1, .., p_r)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(rank: usize) -> Self {
        Monomial(vec![0; rank])
    }

    pub fn var(rank: usize, i: usize) -> Self {
        let mut e = vec![0; rank];
        e[i] = 1;
        Monomial(e)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn weighted_degree(&self, cv: &CharVector) -> u32 {
        self.0.iter().zip(&cv.0).map(|(p, a)| p * a).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&p| p == 0)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &p) in self.0.iter().enumerate() {
            if p == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if p == 1 {
                write!(f, "t{}", i + 1)?;
            } else {
                write!(f, "t{}^{}", i + 1, p)?;
            }
        }
        Ok(())
    }
}

/// Grading weights `alpha_i` of the variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharVector(pub Vec<u32>);

impl CharVector {
    pub fn e7() -> Self {
        CharVector(vec![1, 2, 2, 2, 3, 3, 4])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn alpha(&self, i: usize) -> u32 {
        self.0[i]
    }
}

/// Serialized term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub num: String,
    pub den: String,
    pub nu_pow: u8,
    pub exp: Vec<u32>,
}

#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    rank: usize,
    terms: BTreeMap<Monomial, NuLinear>,
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

impl MultiPoly {
    pub fn zero(rank: usize) -> Self {
        MultiPoly { rank, terms: BTreeMap::new() }
    }

    pub fn constant(rank: usize, c: Rational) -> Self {
        Self::term(rank, Monomial::one(rank), NuLinear::constant(c))
    }

    pub fn var(rank: usize, i: usize) -> Self {
        Self::term(rank, Monomial::var(rank, i), NuLinear::constant(Rational::one()))
    }

    pub fn term(rank: usize, m: Monomial, c: NuLinear) -> Self {
        let mut p = Self::zero(rank);
        p.add_term(m, c);
        p
    }

    pub fn monomial(m: Monomial) -> Self {
        let rank = m.rank();
        Self::term(rank, m, NuLinear::constant(Rational::one()))
    }

    pub fn rank(&self) -> usize {
        self.rank
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

    pub fn is_nu_free(&self) -> bool {
        self.terms.values().all(NuLinear::is_nu_free)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &NuLinear)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> NuLinear {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Adds `c * m`, dropping the term if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: NuLinear) {
        assert_eq!(m.rank(), self.rank, "monomial rank");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_rank(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.rank != other.rank {
            Err(PolyError::RankMismatch(self.rank, other.rank))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_rank(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_rank(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), NuLinear { c0: -&c.c0, c1: -&c.c1 });
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_rank(other)?;
        if !self.is_nu_free() && !other.is_nu_free() {
            return Err(PolyError::NuOverflow);
        }
        let mut out = MultiPoly::zero(self.rank);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.try_mul(cb)?);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, k: &Rational) -> MultiPoly {
        let mut out = MultiPoly::zero(self.rank);
        if k.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c.scale(k));
        }
        out
    }

    /// Multiplies by `c0 + c1 nu`.
    pub fn scale_nu(&self, k: &NuLinear) -> Result<MultiPoly, PolyError> {
        let mut out = MultiPoly::zero(self.rank);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.try_mul(k)?);
        }
        Ok(out)
    }

    pub fn mul_monomial(&self, m: &Monomial) -> MultiPoly {
        MultiPoly { rank: self.rank, terms: self.terms.iter().map(|(a, c)| (a.mul(m), c.clone())).collect() }
    }

    pub fn pow(&self, k: u32) -> Result<MultiPoly, PolyError> {
        let mut out = MultiPoly::constant(self.rank, Rational::one());
        for _ in 0..k {
            out = out.try_mul(self)?;
        }
        Ok(out)
    }

    /// Formal derivative in `tau_{i+1}` (0-based `i`).
    pub fn partial_derivative(&self, i: usize) -> Result<MultiPoly, PolyError> {
        if i >= self.rank {
            return Err(PolyError::VariableIndex { index: i, rank: self.rank });
        }
        let mut out = MultiPoly::zero(self.rank);
        for (m, c) in &self.terms {
            let p = m.0[i];
            if p == 0 {
                continue;
            }
            let mut e = m.clone();
            e.0[i] -= 1;
            out.add_term(e, c.scale(&Rational::from_integer(BigInt::from(p))));
        }
        Ok(out)
    }

    /// Maximal weighted degree; `None` for the zero polynomial.
    pub fn weighted_degree(&self, cv: &CharVector) -> Option<u32> {
        self.terms.keys().map(|m| m.weighted_degree(cv)).max()
    }

    /// Terms whose weighted degree exceeds `bound`.
    pub fn terms_above(&self, cv: &CharVector, bound: u32) -> Vec<(Monomial, NuLinear)> {
        self.terms.iter().filter(|(m, _)| m.weighted_degree(cv) > bound).map(|(m, c)| (m.clone(), c.clone())).collect()
    }

    /// The polynomial at a fixed rational `nu`.
    pub fn at_nu(&self, nu: &Rational) -> MultiPoly {
        let mut out = MultiPoly::zero(self.rank);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), NuLinear::constant(c.at(nu)));
        }
        out
    }

    /// Splits into `(nu^0 part, nu^1 part)`, both nu-free.
    pub fn nu_parts(&self) -> (MultiPoly, MultiPoly) {
        let mut p0 = MultiPoly::zero(self.rank);
        let mut p1 = MultiPoly::zero(self.rank);
        for (m, c) in &self.terms {
            p0.add_term(m.clone(), NuLinear::constant(c.c0.clone()));
            p1.add_term(m.clone(), NuLinear::constant(c.c1.clone()));
        }
        (p0, p1)
    }

    pub fn evaluate_exact(&self, point: &[Rational], nu: &Rational) -> Result<Rational, PolyError> {
        if point.len() != self.rank {
            return Err(PolyError::RankMismatch(point.len(), self.rank));
        }
        let pows = power_table(point, self.max_exponents(), Rational::one(), |a, b| a * b);
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.at(nu);
            for (i, &p) in m.0.iter().enumerate() {
                if p > 0 {
                    t *= &pows[i][p as usize];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Floating evaluation of the two nu-components with compensated sums.
    pub fn evaluate_parts<S: Real>(&self, point: &[S]) -> Result<(S, S), PolyError> {
        if point.len() != self.rank {
            return Err(PolyError::RankMismatch(point.len(), self.rank));
        }
        let pows = power_table(point, self.max_exponents(), S::one(), |a, b| a.clone() * b.clone());
        let mut s0 = CompensatedSum::<S>::new();
        let mut s1 = CompensatedSum::<S>::new();
        for (m, c) in &self.terms {
            let mut mono = S::one();
            for (i, &p) in m.0.iter().enumerate() {
                if p > 0 {
                    mono *= pows[i][p as usize].clone();
                }
            }
            if !c.c0.is_zero() {
                s0.add(mono.clone() * S::from_rational(&c.c0));
            }
            if !c.c1.is_zero() {
                s1.add(mono * S::from_rational(&c.c1));
            }
        }
        Ok((s0.value(), s1.value()))
    }

    /// Both `nu` parts at a complex point, each as `(re, im)`.
    #[allow(clippy::type_complexity)]
    pub fn evaluate_parts_complex<S: Real>(&self, re: &[S], im: &[S]) -> Result<((S, S), (S, S)), PolyError> {
        if re.len() != self.rank || im.len() != self.rank {
            return Err(PolyError::RankMismatch(re.len(), self.rank));
        }
        let point: Vec<(S, S)> = re.iter().cloned().zip(im.iter().cloned()).collect();
        let cmul = |a: &(S, S), b: &(S, S)| {
            (
                a.0.clone() * b.0.clone() - a.1.clone() * b.1.clone(),
                a.0.clone() * b.1.clone() + a.1.clone() * b.0.clone(),
            )
        };
        let pows = power_table(&point, self.max_exponents(), (S::one(), S::zero()), cmul);
        let mut acc: [CompensatedSum<S>; 4] = std::array::from_fn(|_| CompensatedSum::new());
        for (m, c) in &self.terms {
            let mut mono = (S::one(), S::zero());
            for (i, &p) in m.0.iter().enumerate() {
                if p > 0 {
                    mono = cmul(&mono, &pows[i][p as usize]);
                }
            }
            for (k, q) in [&c.c0, &c.c1].into_iter().enumerate() {
                if !q.is_zero() {
                    let q = S::from_rational(q);
                    acc[2 * k].add(mono.0.clone() * q.clone());
                    acc[2 * k + 1].add(mono.1.clone() * q);
                }
            }
        }
        let [a, b, c, d] = acc;
        Ok(((a.value(), b.value()), (c.value(), d.value())))
    }

    pub fn evaluate<S: Real>(&self, point: &[S], nu: &S) -> Result<S, PolyError> {
        let (a, b) = self.evaluate_parts(point)?;
        Ok(a + b * nu.clone())
    }

    /// Sum of absolute term values; the natural scale for a relative residual.
    pub fn evaluate_abs<S: Real>(&self, point: &[S], nu: &S) -> Result<S, PolyError> {
        let abs_point: Vec<S> = point.iter().map(Real::abs).collect();
        let abs_poly = MultiPoly {
            rank: self.rank,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), NuLinear { c0: c.c0.abs(), c1: c.c1.abs() })).collect(),
        };
        abs_poly.evaluate(&abs_point, &nu.abs())
    }

    fn max_exponents(&self) -> Vec<u32> {
        let mut mx = vec![0; self.rank];
        for m in self.terms.keys() {
            for (a, &p) in mx.iter_mut().zip(&m.0) {
                *a = (*a).max(p);
            }
        }
        mx
    }

    /// Replaces `tau_i` by `images[i]` (nu-free).
    pub fn substitute(&self, images: &[MultiPoly]) -> Result<MultiPoly, PolyError> {
        if images.len() != self.rank {
            return Err(PolyError::RankMismatch(images.len(), self.rank));
        }
        let out_rank = images.first().map(|p| p.rank).unwrap_or(self.rank);
        for (i, img) in images.iter().enumerate() {
            if img.rank != out_rank {
                return Err(PolyError::RankMismatch(img.rank, out_rank));
            }
            if !img.is_nu_free() {
                return Err(PolyError::NuDependentImage(i + 1));
            }
        }
        let mx = self.max_exponents();
        let mut pows: Vec<Vec<MultiPoly>> = Vec::with_capacity(self.rank);
        for (img, &k) in images.iter().zip(&mx) {
            let mut row = vec![MultiPoly::constant(out_rank, Rational::one())];
            for j in 1..=k as usize {
                let next = row[j - 1].try_mul(img)?;
                row.push(next);
            }
            pows.push(row);
        }
        let mut out = MultiPoly::zero(out_rank);
        for (m, c) in &self.terms {
            let mut t = MultiPoly::term(out_rank, Monomial::one(out_rank), c.clone());
            for (i, &p) in m.0.iter().enumerate() {
                if p > 0 {
                    t = t.try_mul(&pows[i][p as usize])?;
                }
            }
            for (mm, cc) in t.terms {
                out.add_term(mm, cc);
            }
        }
        Ok(out)
    }

    /// Terms in canonical order: weighted degree, exponents, nu power.
    pub fn to_records(&self, cv: &CharVector) -> Vec<TermRecord> {
        let mut recs: Vec<(u32, &Monomial, u8, &Rational)> = Vec::new();
        for (m, c) in &self.terms {
            let w = m.weighted_degree(cv);
            if !c.c0.is_zero() {
                recs.push((w, m, 0, &c.c0));
            }
            if !c.c1.is_zero() {
                recs.push((w, m, 1, &c.c1));
            }
        }
        recs.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
        recs.into_iter()
            .map(|(_, m, k, q)| TermRecord {
                num: q.numer().to_string(),
                den: q.denom().to_string(),
                nu_pow: k,
                exp: m.0.clone(),
            })
            .collect()
    }

    pub fn from_records(rank: usize, recs: &[TermRecord]) -> Result<MultiPoly, PolyError> {
        let mut p = MultiPoly::zero(rank);
        for r in recs {
            if r.exp.len() != rank {
                return Err(PolyError::BadTerm(format!("exponent length {} != {rank}", r.exp.len())));
            }
            let num: BigInt = r.num.parse().map_err(|_| PolyError::BadTerm(format!("numerator `{}`", r.num)))?;
            let den: BigInt = r.den.parse().map_err(|_| PolyError::BadTerm(format!("denominator `{}`", r.den)))?;
            if den.is_zero() {
                return Err(PolyError::BadTerm("zero denominator".into()));
            }
            let q = Rational::new(num, den);
            let c = match r.nu_pow {
                0 => NuLinear::constant(q),
                1 => NuLinear::nu(q),
                k => return Err(PolyError::BadTerm(format!("nu power {k}"))),
            };
            p.add_term(Monomial(r.exp.clone()), c);
        }
        Ok(p)
    }

    /// Largest coefficient magnitude, as f64.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().flat_map(|c| [c.c0.abs(), c.c1.abs()]).filter_map(|q| q.to_f64()).fold(0.0, f64::max)
    }
}

fn power_table<S: Clone>(point: &[S], mx: Vec<u32>, one: S, mul: impl Fn(&S, &S) -> S) -> Vec<Vec<S>> {
    point
        .iter()
        .zip(mx)
        .map(|(x, k)| {
            let mut row = vec![one.clone()];
            for j in 1..=k as usize {
                let next = mul(&row[j - 1], x);
                row.push(next);
            }
            row
        })
        .collect()
}

impl Add<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_add(rhs).expect("rank mismatch in polynomial addition")
    }
}

impl Sub<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_sub(rhs).expect("rank mismatch in polynomial subtraction")
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rational::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{int, rat};

    fn t(i: usize) -> MultiPoly {
        MultiPoly::var(7, i - 1)
    }

    fn c(q: Rational) -> MultiPoly {
        MultiPoly::constant(7, q)
    }

    fn a11() -> MultiPoly {
        &(&(&c(int(168)) + &t(2).scale(&int(24))) + &t(4).scale(&int(2)))
            - &t(1).try_mul(&t(1)).unwrap().scale(&rat(3, 2))
    }

    #[test]
    fn square_of_a_variable() {
        let sq = t(2).try_mul(&t(2)).unwrap();
        assert_eq!(sq, MultiPoly::monomial(Monomial(vec![0, 2, 0, 0, 0, 0, 0])));
    }

    #[test]
    fn a11_plus_leading_term() {
        let s = &a11() + &t(1).try_mul(&t(1)).unwrap().scale(&rat(3, 2));
        let want = &(&c(int(168)) + &t(2).scale(&int(24))) + &t(4).scale(&int(2));
        assert_eq!(s, want);
    }

    #[test]
    fn self_difference_is_empty() {
        let p = a11();
        let d = &p - &p;
        assert!(d.is_zero());
        assert_eq!(d.len(), 0);
    }

    #[test]
    fn nu_overflow_is_an_error() {
        let p = MultiPoly::term(7, Monomial::one(7), NuLinear::nu(int(1)));
        assert_eq!(p.try_mul(&p), Err(PolyError::NuOverflow));
        assert!(p.try_mul(&t(1)).is_ok());
    }

    #[test]
    fn derivatives() {
        let sq = t(1).try_mul(&t(1)).unwrap();
        assert_eq!(sq.partial_derivative(0).unwrap(), t(1).scale(&int(2)));
        assert_eq!(a11().partial_derivative(1).unwrap(), c(int(24)));
        assert!(c(int(5)).partial_derivative(2).unwrap().is_zero());
        assert!(matches!(t(1).partial_derivative(7), Err(PolyError::VariableIndex { .. })));
    }

    #[test]
    fn weighted_degrees() {
        let cv = CharVector::e7();
        assert_eq!(t(2).pow(4).unwrap().weighted_degree(&cv), Some(8));
        assert_eq!(t(1).weighted_degree(&cv), Some(1));
        assert_eq!(t(3).try_mul(&t(5)).unwrap().weighted_degree(&cv), Some(5));
        assert_eq!(MultiPoly::zero(7).weighted_degree(&cv), None);
    }

    #[test]
    fn evaluation_at_the_origin_image() {
        let tau0: Vec<Rational> = [56, 126, 576, 756, 2016, 4032, 10080].iter().map(|&x| int(x)).collect();
        assert_eq!(a11().evaluate_exact(&tau0, &int(0)).unwrap(), int(0));
        let b1 = t(1).scale_nu(&NuLinear::new(rat(-3, 2), rat(27, 2))).unwrap();
        assert_eq!(b1.evaluate_exact(&tau0, &int(0)).unwrap(), int(-84));
        assert_eq!(MultiPoly::zero(7).evaluate_exact(&tau0, &int(3)).unwrap(), int(0));
        let f: Vec<f64> = tau0.iter().map(|q| q.to_f64().unwrap()).collect();
        assert_eq!(a11().evaluate(&f, &0.0).unwrap(), 0.0);
    }

    #[test]
    fn substitution() {
        let a2 = rat(5, 3);
        let mut images: Vec<MultiPoly> = (1..=7).map(t).collect();
        images[1] = &t(2) + &t(1).pow(2).unwrap().scale(&a2);
        assert_eq!(t(2).substitute(&images).unwrap(), images[1]);
        let id: Vec<MultiPoly> = (1..=7).map(t).collect();
        assert_eq!(a11().substitute(&id).unwrap(), a11());
    }

    #[test]
    fn records_round_trip() {
        let cv = CharVector::e7();
        let p = &a11() + &MultiPoly::term(7, Monomial::var(7, 6), NuLinear::new(rat(-7, 4), int(9)));
        let recs = p.to_records(&cv);
        let json = serde_json::to_string(&recs).unwrap();
        let back: Vec<TermRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(MultiPoly::from_records(7, &back).unwrap(), p);
        assert_eq!(serde_json::to_string(&MultiPoly::from_records(7, &back).unwrap().to_records(&cv)).unwrap(), json);
    }
}
