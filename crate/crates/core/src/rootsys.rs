//! Root systems, Weyl orbits of fundamental weights and the deformed Weyl
//! vector.
//!
//! E7 lives in the 8-dimensional realisation with the constraint
//! `x7 = -x8`: every root and (projected) weight is orthogonal to `e7 + e8`.
//! The physical coordinates are `y_i = x_i` (i <= 6) and `y7 = x7 - x8`, in
//! which the Laplacian reads `sum_i d^2/dy_i^2 + 2 d^2/dy7^2`; the metric
//! weights `g = (1,1,1,1,1,1,2)` encode that factor.
//!
//! The rank-1 and rank-2 systems (A1, A2, G2) are realised in the usual
//! hyperplane of R^2 / R^3 and use the ambient coordinates directly.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RootSystemError {
    #[error("unsupported root system `{0}` (expected one of e7, a1, a2, g2)")]
    UnsupportedKind(String),
    #[error("cannot reflect in the zero vector")]
    ZeroRoot,
    #[error("weight index {index} out of range for rank {rank}")]
    WeightIndex { index: usize, rank: usize },
    #[error("root system failed validation: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

/// Exact vector with rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RVec(Vec<Rational>);

impl RVec {
    pub fn new(coords: Vec<Rational>) -> Self {
        RVec(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        RVec(vec![Rational::zero(); dim])
    }

    pub fn from_ints(xs: &[i64]) -> Self {
        RVec(xs.iter().map(|&x| int(x)).collect())
    }

    /// Coordinates given as `(numerator, denominator)` pairs.
    pub fn from_fracs(xs: &[(i64, i64)]) -> Self {
        RVec(xs.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = Rational::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn dot(&self, other: &RVec) -> Rational {
        assert_eq!(self.dim(), other.dim(), "dot of vectors with different dimension");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> Rational {
        self.dot(self)
    }

    pub fn scale(&self, c: &Rational) -> RVec {
        RVec(self.0.iter().map(|x| x * c).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Coordinates as exact strings, `"3/2"` style.
    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(|x| x.to_string()).collect()
    }

    /// Least common denominator of the coordinates.
    pub fn denominator_lcm(&self) -> BigInt {
        self.0.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }
}

impl fmt::Debug for RVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl<'a> Add<&'a RVec> for &'a RVec {
    type Output = RVec;
    fn add(self, rhs: &'a RVec) -> RVec {
        RVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl<'a> Sub<&'a RVec> for &'a RVec {
    type Output = RVec;
    fn sub(self, rhs: &'a RVec) -> RVec {
        RVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &RVec {
    type Output = RVec;
    fn neg(self) -> RVec {
        RVec(self.0.iter().map(|a| -a).collect())
    }
}

/// `s_root(v) = v - 2 (root.v)/(root.root) root`.
pub fn reflect(v: &RVec, root: &RVec) -> Result<RVec, RootSystemError> {
    if v.dim() != root.dim() {
        return Err(RootSystemError::Dimension(v.dim(), root.dim()));
    }
    let rr = root.norm_sq();
    if rr.is_zero() {
        return Err(RootSystemError::ZeroRoot);
    }
    let c = int(2) * v.dot(root) / rr;
    Ok(v - &root.scale(&c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SystemKind {
    E7,
    A1,
    A2,
    G2,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [SystemKind::E7, SystemKind::A1, SystemKind::A2, SystemKind::G2];
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SystemKind::E7 => "E7",
            SystemKind::A1 => "A1",
            SystemKind::A2 => "A2",
            SystemKind::G2 => "G2",
        };
        f.write_str(s)
    }
}

impl FromStr for SystemKind {
    type Err = RootSystemError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e7" => Ok(SystemKind::E7),
            "a1" => Ok(SystemKind::A1),
            "a2" => Ok(SystemKind::A2),
            "g2" => Ok(SystemKind::G2),
            other => Err(RootSystemError::UnsupportedKind(other.to_string())),
        }
    }
}

/// A crystallographic root system with a chosen positive chamber.
///
/// `simple_roots[a]` is dual to `fundamental_weights[a]`:
/// `2 (w_a, s_b) / (s_b, s_b) = delta_ab`.
#[derive(Clone, Debug)]
pub struct RootSystem {
    pub kind: SystemKind,
    pub ambient_dim: usize,
    pub positive_roots: Vec<RVec>,
    pub simple_roots: Vec<RVec>,
    pub fundamental_weights: Vec<RVec>,
    pub weight_lengths_sq: Vec<Rational>,
    pub metric_weights: Vec<Rational>,
}

/// Weyl orbit of a weight, sorted canonically.
#[derive(Clone, Debug)]
pub struct WeylOrbit {
    pub generator_weight: RVec,
    pub elements: Vec<RVec>,
}

impl WeylOrbit {
    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, v: &RVec) -> bool {
        self.elements.binary_search(v).is_ok()
    }
}

/// Sum of positive roots; the deformed Weyl vector is `nu` times it when all
/// roots share one coupling.
#[derive(Clone, Debug)]
pub struct DeformedWeylVector {
    pub sum_positive_roots: RVec,
    pub rho_sq_over_nu_sq: Rational,
}

impl DeformedWeylVector {
    /// `E0 / (beta^2 nu^2) = rho^2 / (8 nu^2)`.
    pub fn ground_energy_coefficient(&self) -> Rational {
        &self.rho_sq_over_nu_sq / int(8)
    }
}

impl RootSystem {
    pub fn build(kind: SystemKind) -> Result<RootSystem, RootSystemError> {
        let sys = match kind {
            SystemKind::E7 => e7(),
            SystemKind::A1 => a1(),
            SystemKind::A2 => a2(),
            SystemKind::G2 => g2(),
        }?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn rank(&self) -> usize {
        self.simple_roots.len()
    }

    /// Number of physical coordinates `y`.
    pub fn phys_dim(&self) -> usize {
        self.metric_weights.len()
    }

    /// Coefficients `c` with `v . x = sum_k c_k y_k` on the physical slice.
    pub fn phys_coords(&self, v: &RVec) -> Vec<Rational> {
        match self.kind {
            SystemKind::E7 => {
                let mut c: Vec<Rational> = v.coords()[..6].to_vec();
                c.push((&v.coords()[6] - &v.coords()[7]) / int(2));
                c
            }
            _ => v.coords().to_vec(),
        }
    }

    /// Ambient position `x` of a physical point `y`.
    pub fn embed_point(&self, y: &[f64]) -> Vec<f64> {
        match self.kind {
            SystemKind::E7 => {
                let mut x = y[..6].to_vec();
                x.push(y[6] / 2.0);
                x.push(-y[6] / 2.0);
                x
            }
            _ => y.to_vec(),
        }
    }

    /// Inverse of [`RootSystem::embed_point`] (assumes `x` on the slice).
    pub fn project_point(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            SystemKind::E7 => {
                let mut y = x[..6].to_vec();
                y.push(x[6] - x[7]);
                y
            }
            _ => x.to_vec(),
        }
    }

    /// `2 (v, s_i) / (s_i, s_i)`.
    pub fn coroot_pairing(&self, v: &RVec, i: usize) -> Rational {
        let s = &self.simple_roots[i];
        int(2) * v.dot(s) / s.norm_sq()
    }

    /// Dynkin labels of `v` (coroot pairings with all simple roots).
    pub fn dynkin_labels(&self, v: &RVec) -> Vec<Rational> {
        (0..self.rank()).map(|i| self.coroot_pairing(v, i)).collect()
    }

    /// Coefficients of `v` in the simple-root basis, via fundamental coweights.
    pub fn simple_root_coords(&self, v: &RVec) -> Vec<Rational> {
        self.simple_roots.iter().zip(&self.fundamental_weights).map(|(s, w)| int(2) * v.dot(w) / s.norm_sq()).collect()
    }

    /// `sum_i p_i w_i`.
    pub fn weight_of_exponents(&self, p: &[u32]) -> RVec {
        let mut acc = RVec::zeros(self.ambient_dim);
        for (w, &k) in self.fundamental_weights.iter().zip(p) {
            if k > 0 {
                acc = &acc + &w.scale(&int(k as i64));
            }
        }
        acc
    }

    /// Partial dominance order: `a >= b` iff `a - b` is a non-negative integer
    /// combination of simple roots.
    pub fn dominance_cmp(&self, a: &RVec, b: &RVec) -> Option<Ordering> {
        if a == b {
            return Some(Ordering::Equal);
        }
        let coords = self.simple_root_coords(&(a - b));
        if !coords.iter().all(|c| c.is_integer()) {
            return None;
        }
        if coords.iter().all(|c| !c.is_negative()) {
            Some(Ordering::Greater)
        } else if coords.iter().all(|c| !c.is_positive()) {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn is_dominant(&self, v: &RVec) -> bool {
        (0..self.rank()).all(|i| !v.dot(&self.simple_roots[i]).is_negative())
    }

    /// Orbit element with non-negative pairing against every simple root.
    pub fn dominant_representative(&self, v: &RVec) -> RVec {
        let mut cur = v.clone();
        'outer: loop {
            for s in &self.simple_roots {
                if cur.dot(s).is_negative() {
                    cur = reflect(&cur, s).expect("simple roots are non-zero");
                    continue 'outer;
                }
            }
            return cur;
        }
    }

    /// Breadth-first closure of `generator` under the simple reflections.
    pub fn orbit_of(&self, generator: &RVec) -> WeylOrbit {
        // Integer fast path: scale by a common denominator; coroot pairings of
        // lattice weights are integers, so reflections stay integral.
        let den = self.simple_roots.iter().fold(generator.denominator_lcm(), |acc, s| acc.lcm(&s.denominator_lcm()));
        let scale = Rational::from_integer(den.clone());
        let to_int =
            |v: &RVec| -> Option<Vec<i64>> { v.coords().iter().map(|x| (x * &scale).to_integer().to_i64()).collect() };
        let simple: Option<Vec<Vec<i64>>> = self.simple_roots.iter().map(&to_int).collect();
        let start = to_int(generator);
        let integral = self.simple_roots.iter().all(|_| true)
            && (0..self.rank()).all(|i| self.coroot_pairing(generator, i).is_integer());
        if let (Some(simple), Some(start), true) = (simple, start, integral) {
            let norms: Vec<i64> = simple.iter().map(|s| s.iter().map(|x| x * x).sum()).collect();
            let mut seen: HashSet<Vec<i64>> = HashSet::new();
            let mut queue = VecDeque::new();
            seen.insert(start.clone());
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for (s, &nn) in simple.iter().zip(&norms) {
                    let d: i64 = v.iter().zip(s).map(|(a, b)| a * b).sum();
                    if d == 0 {
                        continue;
                    }
                    let k = 2 * d / nn;
                    let u: Vec<i64> = v.iter().zip(s).map(|(a, b)| a - k * b).collect();
                    if seen.insert(u.clone()) {
                        queue.push_back(u);
                    }
                }
            }
            let inv = Rational::one() / &scale;
            let mut elements: Vec<RVec> =
                seen.into_iter().map(|v| RVec(v.into_iter().map(|x| int(x) * &inv).collect())).collect();
            elements.sort();
            return WeylOrbit { generator_weight: generator.clone(), elements };
        }
        let mut seen: HashSet<RVec> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(generator.clone());
        queue.push_back(generator.clone());
        while let Some(v) = queue.pop_front() {
            for s in &self.simple_roots {
                let u = reflect(&v, s).expect("simple roots are non-zero");
                if seen.insert(u.clone()) {
                    queue.push_back(u);
                }
            }
        }
        let mut elements: Vec<RVec> = seen.into_iter().collect();
        elements.sort();
        WeylOrbit { generator_weight: generator.clone(), elements }
    }

    /// Orbit of the fundamental weight with 0-based `index`.
    pub fn weyl_orbit(&self, index: usize) -> Result<WeylOrbit, RootSystemError> {
        let w = self.fundamental_weights.get(index).ok_or(RootSystemError::WeightIndex { index, rank: self.rank() })?;
        Ok(self.orbit_of(w))
    }

    pub fn fundamental_orbits(&self) -> Vec<WeylOrbit> {
        (0..self.rank()).map(|i| self.orbit_of(&self.fundamental_weights[i])).collect()
    }

    pub fn deformed_weyl_vector(&self) -> DeformedWeylVector {
        let sum = self.positive_roots.iter().fold(RVec::zeros(self.ambient_dim), |acc, r| &acc + r);
        let rho_sq_over_nu_sq = sum.norm_sq();
        DeformedWeylVector { sum_positive_roots: sum, rho_sq_over_nu_sq }
    }

    /// All roots, positive then negative.
    pub fn all_roots(&self) -> Vec<RVec> {
        let mut v = self.positive_roots.clone();
        v.extend(self.positive_roots.iter().map(|r| -r));
        v
    }

    fn validate(&self) -> Result<(), RootSystemError> {
        let bad = |m: String| Err(RootSystemError::Validation(m));
        let r = self.rank();
        if self.fundamental_weights.len() != r || self.weight_lengths_sq.len() != r {
            return bad("rank mismatch between simple roots and weights".into());
        }
        for a in 0..r {
            for b in 0..r {
                let p = self.coroot_pairing(&self.fundamental_weights[a], b);
                let want = if a == b { Rational::one() } else { Rational::zero() };
                if p != want {
                    return bad(format!("weight {} pairs to {p} with simple coroot {}", a + 1, b + 1));
                }
            }
        }
        for (i, root) in self.positive_roots.iter().enumerate() {
            let c = self.simple_root_coords(root);
            if !c.iter().all(|x| x.is_integer() && !x.is_negative()) {
                return bad(format!("positive root #{i} {root:?} is not a non-negative simple-root combination"));
            }
        }
        let all: HashSet<RVec> = self.all_roots().into_iter().collect();
        if all.len() != 2 * self.positive_roots.len() {
            return bad("duplicate roots".into());
        }
        for a in &self.positive_roots {
            for b in &self.simple_roots {
                let u = reflect(a, b)?;
                if !all.contains(&u) {
                    return bad(format!("root set not closed under reflection in {b:?}"));
                }
            }
        }
        for (w, d2) in self.fundamental_weights.iter().zip(&self.weight_lengths_sq) {
            let g = self.metric_norm_sq(w);
            if &g != d2 || &w.norm_sq() != d2 {
                return bad(format!("weight {w:?} has length^2 {g}, expected {d2}"));
            }
        }
        if self.kind == SystemKind::E7 {
            let n = {
                let mut v = RVec::zeros(8);
                v.0[6] = Rational::one();
                v.0[7] = Rational::one();
                v
            };
            if self.positive_roots.len() != 63 {
                return bad(format!("E7 needs 63 positive roots, got {}", self.positive_roots.len()));
            }
            if self.positive_roots.iter().chain(&self.fundamental_weights).any(|v| !v.dot(&n).is_zero()) {
                return bad("vector off the x7 = -x8 slice".into());
            }
            if self.positive_roots.iter().any(|v| v.norm_sq() != int(2)) {
                return bad("E7 must be simply laced with root length^2 = 2".into());
            }
        }
        Ok(())
    }

    /// `sum_k g_k c_k^2` over physical coordinates.
    pub fn metric_norm_sq(&self, v: &RVec) -> Rational {
        self.metric_dot(v, v)
    }

    pub fn metric_dot(&self, u: &RVec, v: &RVec) -> Rational {
        let cu = self.phys_coords(u);
        let cv = self.phys_coords(v);
        self.metric_weights.iter().zip(cu.iter().zip(&cv)).map(|(g, (a, b))| g * a * b).sum()
    }

    /// Characteristic vector of the flag preserved by the model's algebraic
    /// form.
    pub fn characteristic_vector(&self) -> Vec<u32> {
        match self.kind {
            SystemKind::E7 => vec![1, 2, 2, 2, 3, 3, 4],
            SystemKind::A1 => vec![1],
            SystemKind::A2 => vec![1, 1],
            SystemKind::G2 => vec![1, 2],
        }
    }
}

/// Project onto the hyperplane orthogonal to `e7 + e8`.
fn project_e7(w: &RVec) -> RVec {
    let shift = (&w.coords()[6] + &w.coords()[7]) / int(2);
    let mut c = w.coords().to_vec();
    c[6] -= &shift;
    c[7] -= &shift;
    RVec(c)
}

fn e7() -> Result<RootSystem, RootSystemError> {
    let h = |n: i64| rat(n, 2);
    let e = |i: usize| RVec::unit(8, i - 1);
    // Simple roots ordered so that simple_roots[a] is dual to the weight of
    // the a-th invariant in the orbit-size ordering.
    let half_root = RVec(vec![h(1), h(-1), h(-1), h(-1), h(-1), h(-1), h(-1), h(1)]);
    let simple =
        vec![&e(6) - &e(5), half_root, &e(1) + &e(2), &e(5) - &e(4), &e(2) - &e(1), &e(4) - &e(3), &e(3) - &e(2)];
    let raw_weights = [
        RVec::from_ints(&[0, 0, 0, 0, 0, 1, -1, 0]),
        RVec::from_ints(&[0, 0, 0, 0, 0, 0, -2, 0]),
        RVec(vec![h(1), h(1), h(1), h(1), h(1), h(1), int(-2), int(0)]),
        RVec::from_ints(&[0, 0, 0, 0, 1, 1, -2, 0]),
        RVec(vec![h(-1), h(1), h(1), h(1), h(1), h(1), int(-3), int(0)]),
        RVec::from_ints(&[0, 0, 0, 1, 1, 1, -3, 0]),
        RVec::from_ints(&[0, 0, 1, 1, 1, 1, -4, 0]),
    ];
    let weights: Vec<RVec> = raw_weights.iter().map(project_e7).collect();

    // Root list: e_i +- e_j (j < i <= 6), e7 - e8, and
    // (e7 - e8 + sum_j (-1)^{n_j} e_j)/2 with sum n_j odd. Each is then
    // oriented into the chamber where the tabulated weights are dominant.
    let mut listed = Vec::new();
    for i in 1..=6 {
        for j in 1..i {
            listed.push(&e(i) + &e(j));
            listed.push(&e(i) - &e(j));
        }
    }
    listed.push(&e(7) - &e(8));
    for mask in 0u32..64 {
        if mask.count_ones() % 2 == 1 {
            let mut c: Vec<Rational> = (0..6).map(|j| if mask >> j & 1 == 1 { h(-1) } else { h(1) }).collect();
            c.push(h(1));
            c.push(h(-1));
            listed.push(RVec(c));
        }
    }
    let mut sys = RootSystem {
        kind: SystemKind::E7,
        ambient_dim: 8,
        positive_roots: Vec::new(),
        simple_roots: simple,
        fundamental_weights: weights,
        weight_lengths_sq: vec![h(3), int(2), h(7), int(4), int(6), h(15), int(12)],
        metric_weights: vec![int(1), int(1), int(1), int(1), int(1), int(1), int(2)],
    };
    sys.positive_roots = orient(&sys, listed)?;
    Ok(sys)
}

/// Flip each root into the positive chamber of `sys.simple_roots`.
fn orient(sys: &RootSystem, roots: Vec<RVec>) -> Result<Vec<RVec>, RootSystemError> {
    roots
        .into_iter()
        .map(|r| {
            let c = sys.simple_root_coords(&r);
            if c.iter().all(|x| !x.is_negative()) {
                Ok(r)
            } else if c.iter().all(|x| !x.is_positive()) {
                Ok(-&r)
            } else {
                Err(RootSystemError::Validation(format!("{r:?} is neither positive nor negative")))
            }
        })
        .collect()
}

fn a1() -> Result<RootSystem, RootSystemError> {
    let root = RVec::from_ints(&[1, -1]);
    Ok(RootSystem {
        kind: SystemKind::A1,
        ambient_dim: 2,
        positive_roots: vec![root.clone()],
        simple_roots: vec![root],
        fundamental_weights: vec![RVec::from_fracs(&[(1, 2), (-1, 2)])],
        weight_lengths_sq: vec![rat(1, 2)],
        metric_weights: vec![int(1), int(1)],
    })
}

fn a2() -> Result<RootSystem, RootSystemError> {
    let s1 = RVec::from_ints(&[1, -1, 0]);
    let s2 = RVec::from_ints(&[0, 1, -1]);
    Ok(RootSystem {
        kind: SystemKind::A2,
        ambient_dim: 3,
        positive_roots: vec![s1.clone(), s2.clone(), RVec::from_ints(&[1, 0, -1])],
        simple_roots: vec![s1, s2],
        fundamental_weights: vec![
            RVec::from_fracs(&[(2, 3), (-1, 3), (-1, 3)]),
            RVec::from_fracs(&[(1, 3), (1, 3), (-2, 3)]),
        ],
        weight_lengths_sq: vec![rat(2, 3), rat(2, 3)],
        metric_weights: vec![int(1), int(1), int(1)],
    })
}

fn g2() -> Result<RootSystem, RootSystemError> {
    let short = RVec::from_ints(&[1, -1, 0]);
    let long = RVec::from_ints(&[-2, 1, 1]);
    let comb = |a: i64, b: i64| &short.scale(&int(a)) + &long.scale(&int(b));
    Ok(RootSystem {
        kind: SystemKind::G2,
        ambient_dim: 3,
        positive_roots: vec![comb(1, 0), comb(0, 1), comb(1, 1), comb(2, 1), comb(3, 1), comb(3, 2)],
        simple_roots: vec![short, long],
        fundamental_weights: vec![RVec::from_ints(&[0, -1, 1]), RVec::from_ints(&[-1, -1, 2])],
        weight_lengths_sq: vec![int(2), int(6)],
        metric_weights: vec![int(1), int(1), int(1)],
    })
}

/// Canonical JSON export of an orbit.
#[derive(Debug, Serialize)]
pub struct OrbitExport {
    pub system: String,
    pub weight_index: usize,
    pub size: usize,
    pub length_sq: String,
    pub elements: Vec<Vec<String>>,
}

impl OrbitExport {
    pub fn new(sys: &RootSystem, index: usize, orbit: &WeylOrbit) -> Self {
        OrbitExport {
            system: sys.kind.to_string(),
            weight_index: index + 1,
            size: orbit.size(),
            length_sq: orbit.generator_weight.norm_sq().to_string(),
            elements: orbit.elements.iter().map(RVec::to_strings).collect(),
        }
    }
}

/// Memo of orbits keyed by dominant weight.
#[derive(Default)]
pub struct OrbitCache {
    map: HashMap<RVec, WeylOrbit>,
}

impl OrbitCache {
    pub fn get(&mut self, sys: &RootSystem, dominant: &RVec) -> &WeylOrbit {
        self.map.entry(dominant.clone()).or_insert_with(|| sys.orbit_of(dominant))
    }
}
