//! Exact derivation of the algebraic form for rank <= 2 systems from orbit
//! sums of formal exponentials.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactpoly::{CharVector, Monomial, MultiPoly, NuLinear, PolyError};
use crate::operator::{AlgebraicOperator, OperatorError};
use crate::rootsys::{int, RVec, Rational, RootSystem};

/// Largest rank accepted by [`derive_operator`].
pub const MAX_DERIVE_RANK: usize = 2;

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error("rank {0} exceeds the derivation limit {MAX_DERIVE_RANK}")]
    RankTooLarge(usize),
    #[error("weight {0:?} is not a non-negative integer combination of fundamental weights")]
    NotInCone(Vec<String>),
    #[error("sum is not Weyl invariant: residue at {0:?}")]
    NonDominantResidue(Vec<String>),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Finite formal sum `sum c_mu e^mu` over lattice vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpSum {
    pub terms: BTreeMap<RVec, Rational>,
}

impl ExpSum {
    pub fn new() -> Self {
        ExpSum::default()
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut s = ExpSum::new();
        s.add(RVec::zeros(dim), c);
        s
    }

    pub fn monomial(mu: RVec) -> Self {
        let mut s = ExpSum::new();
        s.add(mu, Rational::one());
        s
    }

    pub fn orbit_sum(elements: &[RVec]) -> Self {
        let mut s = ExpSum::new();
        for e in elements {
            s.add(e.clone(), Rational::one());
        }
        s
    }

    pub fn add(&mut self, mu: RVec, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mu) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &ExpSum, c: &Rational) {
        for (mu, v) in &other.terms {
            self.add(mu.clone(), v * c);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, mu: &RVec) -> Rational {
        self.terms.get(mu).cloned().unwrap_or_else(Rational::zero)
    }
}

/// Convolution on the weight lattice.
pub fn exp_product(s: &ExpSum, t: &ExpSum) -> ExpSum {
    let mut out = ExpSum::new();
    for (a, x) in &s.terms {
        for (b, y) in &t.terms {
            out.add(a + b, x * y);
        }
    }
    out
}

/// Orbit-sum to invariant-polynomial reduction with a memo table.
pub struct OrbitReducer<'a> {
    sys: &'a RootSystem,
    fundamental: Vec<ExpSum>,
    memo: HashMap<RVec, MultiPoly>,
}

impl<'a> OrbitReducer<'a> {
    pub fn new(sys: &'a RootSystem) -> Self {
        let fundamental = sys.fundamental_orbits().iter().map(|o| ExpSum::orbit_sum(&o.elements)).collect();
        OrbitReducer { sys, fundamental, memo: HashMap::new() }
    }

    fn exponents(&self, lambda: &RVec) -> Result<Vec<u32>, DeriveError> {
        let labels = self.sys.dynkin_labels(lambda);
        labels
            .iter()
            .map(|l| if l.is_integer() && !l.is_negative() { l.to_integer().to_u32() } else { None })
            .collect::<Option<Vec<u32>>>()
            .ok_or_else(|| DeriveError::NotInCone(lambda.to_strings()))
    }

    /// `prod tau_i^{p_i}` expanded as an exponential sum.
    pub fn expand_monomial(&self, p: &[u32]) -> ExpSum {
        let mut acc = ExpSum::constant(self.sys.ambient_dim, Rational::one());
        for (f, &k) in self.fundamental.iter().zip(p) {
            for _ in 0..k {
                acc = exp_product(&acc, f);
            }
        }
        acc
    }

    /// Polynomial in the fundamental invariants equal to `m_lambda`.
    pub fn orbit_sum_to_tau(&mut self, lambda: &RVec) -> Result<MultiPoly, DeriveError> {
        if let Some(p) = self.memo.get(lambda) {
            return Ok(p.clone());
        }
        let p = self.exponents(lambda)?;
        let rank = self.sys.rank();
        let mut out = MultiPoly::monomial(Monomial(p.clone()));
        let expanded = self.expand_monomial(&p);
        let lower: Vec<(RVec, Rational)> = expanded
            .terms
            .iter()
            .filter(|(mu, _)| *mu != lambda && self.sys.is_dominant(mu))
            .map(|(mu, c)| (mu.clone(), c.clone()))
            .collect();
        debug_assert_eq!(expanded.coefficient(lambda), Rational::one());
        for (mu, c) in lower {
            let sub = self.orbit_sum_to_tau(&mu)?;
            out = out.try_sub(&sub.scale(&c))?;
        }
        debug_assert_eq!(out.rank(), rank);
        self.memo.insert(lambda.clone(), out.clone());
        Ok(out)
    }

    /// Decomposes a Weyl-invariant sum into orbit sums and reduces each.
    pub fn invariant_to_tau(&mut self, s: &ExpSum) -> Result<MultiPoly, DeriveError> {
        let mut residue = s.clone();
        let mut out = MultiPoly::zero(self.sys.rank());
        let dominant: Vec<(RVec, Rational)> =
            s.terms.iter().filter(|(mu, _)| self.sys.is_dominant(mu)).map(|(mu, c)| (mu.clone(), c.clone())).collect();
        for (mu, c) in dominant {
            let orbit = self.sys.orbit_of(&mu);
            residue.add_scaled(&ExpSum::orbit_sum(&orbit.elements), &-c.clone());
            out = out.try_add(&self.orbit_sum_to_tau(&mu)?.scale(&c))?;
        }
        if let Some((mu, _)) = residue.terms.iter().next() {
            return Err(DeriveError::NonDominantResidue(mu.to_strings()));
        }
        Ok(out)
    }

    /// Evaluates a polynomial in the invariants back to an exponential sum.
    pub fn tau_to_exp(&self, p: &MultiPoly) -> ExpSum {
        let mut out = ExpSum::new();
        for (m, c) in p.terms() {
            out.add_scaled(&self.expand_monomial(&m.0), &c.c0);
        }
        out
    }
}

/// Standalone form of [`OrbitReducer::orbit_sum_to_tau`].
pub fn orbit_sum_to_tau(sys: &RootSystem, lambda: &RVec) -> Result<MultiPoly, DeriveError> {
    OrbitReducer::new(sys).orbit_sum_to_tau(lambda)
}

/// `A` and `B` of the gauge-rotated Hamiltonian in the fundamental
/// invariants, derived exactly.
pub fn derive_operator(sys: &RootSystem) -> Result<AlgebraicOperator, DeriveError> {
    let r = sys.rank();
    if r > MAX_DERIVE_RANK {
        return Err(DeriveError::RankTooLarge(r));
    }
    let mut red = OrbitReducer::new(sys);
    let orbits = sys.fundamental_orbits();
    let mut a = vec![vec![MultiPoly::zero(r); r]; r];
    for i in 0..r {
        for j in i..r {
            let mut s = ExpSum::new();
            for u in &orbits[i].elements {
                for v in &orbits[j].elements {
                    s.add(u + v, -u.dot(v));
                }
            }
            let p = red.invariant_to_tau(&s)?;
            a[i][j] = p.clone();
            a[j][i] = p;
        }
    }
    let mut b = Vec::with_capacity(r);
    for orbit in &orbits {
        let mut lap = ExpSum::new();
        for u in &orbit.elements {
            lap.add(u.clone(), -u.norm_sq());
        }
        // Pairing u with s_alpha(u) = u - k alpha, k = alpha^vee . u, turns
        // (alpha.u) i cot(alpha.y/2) (e^u - e^{s_alpha u}) into a finite sum.
        let mut cot = ExpSum::new();
        for alpha in &sys.positive_roots {
            let a2 = alpha.norm_sq();
            for u in &orbit.elements {
                let au = u.dot(alpha);
                if !au.is_positive() {
                    continue;
                }
                let k = (int(2) * &au / &a2).to_integer().to_i64().expect("small pairing");
                for j in 0..=k {
                    let c = if j == 0 || j == k { int(1) } else { int(2) };
                    cot.add(u - &alpha.scale(&int(j)), -(&au * c));
                }
            }
        }
        let b0 = red.invariant_to_tau(&lap)?;
        let b1 = red.invariant_to_tau(&cot)?;
        let mut bi = MultiPoly::zero(r);
        for (m, c) in b0.terms() {
            bi.add_term(m.clone(), NuLinear::constant(c.c0.clone()));
        }
        for (m, c) in b1.terms() {
            bi.add_term(m.clone(), NuLinear::nu(c.c0.clone()));
        }
        b.push(bi);
    }
    let cv = CharVector(sys.characteristic_vector());
    Ok(AlgebraicOperator::new(sys.kind, cv, "derived", a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::operator::flag_degree_check;
    use crate::oracle::{verify_tables, Oracle, Precision, VerifyConfig};
    use crate::rootsys::{rat, SystemKind};

    fn sys(k: SystemKind) -> RootSystem {
        RootSystem::build(k).unwrap()
    }

    #[test]
    fn a1_products() {
        let s = sys(SystemKind::A1);
        let w = &s.fundamental_weights[0];
        let m = ExpSum::orbit_sum(&s.orbit_of(w).elements);
        let sq = exp_product(&m, &m);
        let mut want = ExpSum::orbit_sum(&s.orbit_of(&w.scale(&int(2))).elements);
        want.add(RVec::zeros(2), int(2));
        assert_eq!(sq, want);
        assert!(exp_product(&m, &ExpSum::new()).is_empty());
    }

    #[test]
    fn a1_reductions() {
        let s = sys(SystemKind::A1);
        let w = &s.fundamental_weights[0];
        let mut red = OrbitReducer::new(&s);
        assert_eq!(red.orbit_sum_to_tau(w).unwrap(), MultiPoly::var(1, 0));
        let two = red.orbit_sum_to_tau(&w.scale(&int(2))).unwrap();
        let want = &MultiPoly::monomial(Monomial(vec![2])) - &MultiPoly::constant(1, int(2));
        assert_eq!(two, want);
        assert_eq!(red.orbit_sum_to_tau(&RVec::zeros(2)).unwrap(), MultiPoly::constant(1, int(1)));
        assert!(red.orbit_sum_to_tau(&w.scale(&rat(1, 2))).is_err());
        assert!(red.orbit_sum_to_tau(&w.scale(&int(-1))).is_err());
    }

    #[test]
    fn reduction_reconstructs_orbit_sums() {
        for k in [SystemKind::A2, SystemKind::G2] {
            let s = sys(k);
            let mut red = OrbitReducer::new(&s);
            for p in [[2u32, 1], [1, 2], [3, 0], [0, 3]] {
                let lambda = s.weight_of_exponents(&p);
                let poly = red.orbit_sum_to_tau(&lambda).unwrap();
                let back = red.tau_to_exp(&poly);
                assert_eq!(back, ExpSum::orbit_sum(&s.orbit_of(&lambda).elements), "{k} {p:?}");
            }
        }
    }

    #[test]
    fn a1_closed_form() {
        let op = derive_operator(&sys(SystemKind::A1)).unwrap();
        let mut a = MultiPoly::constant(1, int(2));
        a.add_term(Monomial(vec![2]), NuLinear::constant(rat(-1, 2)));
        assert_eq!(op.a(0, 0), &a);
        let b = MultiPoly::term(1, Monomial(vec![1]), NuLinear::new(rat(-1, 2), int(-1)));
        assert_eq!(op.b(0), &b);
        assert_eq!(op.provenance, "derived");
    }

    #[test]
    fn rank_limit() {
        assert!(matches!(derive_operator(&sys(SystemKind::E7)), Err(DeriveError::RankTooLarge(7))));
    }

    #[test]
    fn derived_operators_match_oracle_and_preserve_flags() {
        for k in [SystemKind::A1, SystemKind::A2, SystemKind::G2] {
            let s = sys(k);
            let op = derive_operator(&s).unwrap();
            let r = s.rank();
            for i in 0..r {
                for j in 0..r {
                    let m = Monomial::var(r, i).mul(&Monomial::var(r, j));
                    assert_eq!(op.a(i, j).coefficient(&m).c0, -s.fundamental_weights[i].dot(&s.fundamental_weights[j]));
                }
            }
            let cfg = VerifyConfig { samples: 20, precision: Precision::High, tol: 1e-10, ..Default::default() };
            let rep = verify_tables(&op, &Oracle::new(&s), &cfg, Execution::default()).unwrap();
            assert!(rep.pass, "{k}: {:?}", rep.failing);
            assert!(flag_degree_check(&op).pass, "{k}");
        }
    }
}
