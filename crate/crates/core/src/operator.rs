//! The algebraic operator `h = sum A_ij d_i d_j + sum B_i d_i` on polynomials
//! in the invariants: loading, flag checks, matrix representations,
//! spectra and the weighted-projective substitution.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exactpoly::{CharVector, Monomial, MultiPoly, NuLinear, PolyError, TermRecord};
use crate::exec::Execution;
use crate::linalg::rational_determinant;
use crate::rootsys::{int, rat, RVec, Rational, RootSystem, RootSystemError, SystemKind};

const PRINTED_E7: &str = include_str!("../data/e7_operator.json");
const E7_ERRATA: &str = include_str!("../data/e7_errata.json");

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    RootSystem(#[from] RootSystemError),
    #[error("malformed operator file: {0}")]
    Format(String),
    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: String, computed: String },
    #[error("image of {monomial} has term {term} outside P_{n}")]
    OutsideFlag { monomial: String, term: String, n: u32 },
    #[error("bad entry id `{0}` (expected e.g. A17 or B3)")]
    EntryId(String),
    #[error("expected {expected} weighted-projective parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
}

/// One coefficient function of the operator (0-based indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryId {
    A(usize, usize),
    B(usize),
}

impl EntryId {
    /// All entries, upper triangle of `A` first.
    pub fn all(rank: usize) -> Vec<EntryId> {
        let mut v = Vec::new();
        for i in 0..rank {
            for j in i..rank {
                v.push(EntryId::A(i, j));
            }
        }
        v.extend((0..rank).map(EntryId::B));
        v
    }

    /// Degree bound `alpha_i + alpha_j` or `alpha_i`.
    pub fn degree_bound(&self, cv: &CharVector) -> u32 {
        match *self {
            EntryId::A(i, j) => cv.alpha(i) + cv.alpha(j),
            EntryId::B(i) => cv.alpha(i),
        }
    }

    fn normalized(self) -> EntryId {
        match self {
            EntryId::A(i, j) if i > j => EntryId::A(j, i),
            e => e,
        }
    }
}

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryId::A(i, j) => write!(f, "A{}{}", i + 1, j + 1),
            EntryId::B(i) => write!(f, "B{}", i + 1),
        }
    }
}

impl FromStr for EntryId {
    type Err = OperatorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || OperatorError::EntryId(s.to_string());
        let s = s.trim();
        let (head, rest) = s.split_at(1.min(s.len()));
        let digits: Vec<usize> = rest
            .chars()
            .filter(|c| *c != ',' && *c != '_')
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        if digits.contains(&0) {
            return Err(bad());
        }
        match (head, digits.as_slice()) {
            ("A" | "a", [i, j]) => Ok(EntryId::A(i - 1, j - 1).normalized()),
            ("B" | "b", [i]) => Ok(EntryId::B(i - 1)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlgebraicOperator {
    pub system: SystemKind,
    pub cv: CharVector,
    pub provenance: String,
    a: Vec<Vec<MultiPoly>>,
    b: Vec<MultiPoly>,
}

/// On-disk operator format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorFile {
    pub system: String,
    pub charvec: Vec<u32>,
    pub provenance: String,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<TermRecord>>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<TermRecord>>,
    pub checksum: String,
}

pub fn tables_checksum(a: &[Vec<Vec<TermRecord>>], b: &[Vec<TermRecord>]) -> String {
    let payload = serde_json::to_string(&(a, b)).expect("term records serialize");
    hex(&Sha256::digest(payload.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Corrections to individual entries, each with the value it replaces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrataFile {
    pub system: String,
    pub provenance: String,
    pub base_checksum: String,
    pub entries: Vec<ErratumRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErratumRecord {
    pub entry: String,
    pub printed: Vec<TermRecord>,
    pub fitted: Vec<TermRecord>,
    pub max_rel_residual: f64,
    pub note: String,
}

impl AlgebraicOperator {
    /// Builds from a full (symmetric) `A` and `B`.
    pub fn new(
        system: SystemKind,
        cv: CharVector,
        provenance: &str,
        a: Vec<Vec<MultiPoly>>,
        b: Vec<MultiPoly>,
    ) -> Result<Self, OperatorError> {
        let r = cv.rank();
        if a.len() != r || a.iter().any(|row| row.len() != r) || b.len() != r {
            return Err(OperatorError::Format(format!("expected {r}x{r} A and {r} B entries")));
        }
        for i in 0..r {
            for j in 0..r {
                if a[i][j] != a[j][i] {
                    return Err(OperatorError::Format(format!("A{}{} != A{}{}", i + 1, j + 1, j + 1, i + 1)));
                }
            }
        }
        Ok(AlgebraicOperator { system, cv, provenance: provenance.to_string(), a, b })
    }

    pub fn from_file(file: &OperatorFile) -> Result<Self, OperatorError> {
        let computed = tables_checksum(&file.a, &file.b);
        if computed != file.checksum {
            return Err(OperatorError::Checksum { stored: file.checksum.clone(), computed });
        }
        let system: SystemKind = file.system.parse()?;
        let r = file.charvec.len();
        if file.a.len() != r {
            return Err(OperatorError::Format(format!("{} A rows for rank {r}", file.a.len())));
        }
        let mut a = vec![vec![MultiPoly::zero(r); r]; r];
        for (i, row) in file.a.iter().enumerate() {
            if row.len() != r - i {
                return Err(OperatorError::Format(format!(
                    "A row {} has {} entries, want {}",
                    i + 1,
                    row.len(),
                    r - i
                )));
            }
            for (k, recs) in row.iter().enumerate() {
                let j = i + k;
                let p = MultiPoly::from_records(r, recs)?;
                a[i][j] = p.clone();
                a[j][i] = p;
            }
        }
        let b = file.b.iter().map(|recs| MultiPoly::from_records(r, recs)).collect::<Result<Vec<_>, _>>()?;
        Self::new(system, CharVector(file.charvec.clone()), &file.provenance, a, b)
    }

    pub fn from_json(s: &str) -> Result<Self, OperatorError> {
        let file: OperatorFile = serde_json::from_str(s).map_err(|e| OperatorError::Format(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> OperatorFile {
        let r = self.rank();
        let a: Vec<Vec<Vec<TermRecord>>> =
            (0..r).map(|i| (i..r).map(|j| self.a[i][j].to_records(&self.cv)).collect()).collect();
        let b: Vec<Vec<TermRecord>> = self.b.iter().map(|p| p.to_records(&self.cv)).collect();
        let checksum = tables_checksum(&a, &b);
        OperatorFile {
            system: self.system.to_string(),
            charvec: self.cv.0.clone(),
            provenance: self.provenance.clone(),
            a,
            b,
            checksum,
        }
    }

    /// Line-per-term JSON rendering of [`OperatorFile`].
    pub fn to_json(&self) -> String {
        render_operator_file(&self.to_file())
    }

    pub fn rank(&self) -> usize {
        self.cv.rank()
    }

    pub fn a(&self, i: usize, j: usize) -> &MultiPoly {
        &self.a[i][j]
    }

    pub fn b(&self, i: usize) -> &MultiPoly {
        &self.b[i]
    }

    pub fn entry(&self, e: EntryId) -> &MultiPoly {
        match e {
            EntryId::A(i, j) => &self.a[i][j],
            EntryId::B(i) => &self.b[i],
        }
    }

    /// Replaces one entry (both triangles for `A`).
    pub fn with_entry(&self, e: EntryId, p: MultiPoly) -> AlgebraicOperator {
        let mut out = self.clone();
        match e {
            EntryId::A(i, j) => {
                out.a[i][j] = p.clone();
                out.a[j][i] = p;
            }
            EntryId::B(i) => out.b[i] = p,
        }
        out
    }

    pub fn with_provenance(mut self, provenance: &str) -> Self {
        self.provenance = provenance.to_string();
        self
    }

    pub fn with_errata(&self, errata: &ErrataFile) -> Result<AlgebraicOperator, OperatorError> {
        let mut out = self.clone();
        for rec in &errata.entries {
            let id: EntryId = rec.entry.parse()?;
            let printed = MultiPoly::from_records(self.rank(), &rec.printed)?;
            if &printed != self.entry(id) {
                return Err(OperatorError::Format(format!("erratum for {id} does not match the loaded entry")));
            }
            out = out.with_entry(id, MultiPoly::from_records(self.rank(), &rec.fitted)?);
        }
        Ok(out.with_provenance(&errata.provenance))
    }

    /// `sum_ij A_ij d_i d_j f + sum_i B_i d_i f`.
    pub fn apply(&self, f: &MultiPoly) -> Result<MultiPoly, OperatorError> {
        let r = self.rank();
        if f.rank() != r {
            return Err(PolyError::RankMismatch(f.rank(), r).into());
        }
        let mut out = MultiPoly::zero(r);
        for i in 0..r {
            let di = f.partial_derivative(i)?;
            if di.is_zero() {
                continue;
            }
            out = out.try_add(&self.b[i].try_mul(&di)?)?;
            for j in 0..r {
                let dij = di.partial_derivative(j)?;
                if !dij.is_zero() {
                    out = out.try_add(&self.a[i][j].try_mul(&dij)?)?;
                }
            }
        }
        Ok(out)
    }

    /// The operator at a fixed rational coupling.
    pub fn at_nu(&self, nu: &Rational) -> AlgebraicOperator {
        AlgebraicOperator {
            system: self.system,
            cv: self.cv.clone(),
            provenance: self.provenance.clone(),
            a: self.a.iter().map(|row| row.iter().map(|p| p.at_nu(nu)).collect()).collect(),
            b: self.b.iter().map(|p| p.at_nu(nu)).collect(),
        }
    }
}

/// Printed E7 tables as bundled.
pub fn e7_operator() -> Result<AlgebraicOperator, OperatorError> {
    AlgebraicOperator::from_json(PRINTED_E7)
}

pub fn e7_errata() -> Result<ErrataFile, OperatorError> {
    serde_json::from_str(E7_ERRATA).map_err(|e| OperatorError::Format(e.to_string()))
}

/// Printed tables with the bundled fitted corrections applied.
pub fn e7_operator_corrected() -> Result<AlgebraicOperator, OperatorError> {
    let printed = e7_operator()?;
    let errata = e7_errata()?;
    let stored = printed.to_file().checksum;
    if errata.base_checksum != stored {
        return Err(OperatorError::Checksum { stored: errata.base_checksum, computed: stored });
    }
    printed.with_errata(&errata)
}

pub fn render_operator_file(f: &OperatorFile) -> String {
    let c = |x: &dyn erased::Ser| x.compact();
    let poly = |p: &[TermRecord], ind: &str| -> String {
        if p.is_empty() {
            return "[]".into();
        }
        let body: Vec<String> = p.iter().map(|t| format!("{ind}  {}", c(t))).collect();
        format!("[\n{}\n{ind}]", body.join(",\n"))
    };
    let mut out = vec!["{".to_string()];
    out.push(format!(" \"system\": {},", c(&f.system)));
    out.push(format!(" \"charvec\": {},", c(&f.charvec)));
    out.push(format!(" \"provenance\": {},", c(&f.provenance)));
    out.push(" \"A\": [".into());
    let rows: Vec<String> =
        f.a.iter()
            .map(|row| {
                let ps: Vec<String> = row.iter().map(|p| format!("   {}", poly(p, "   "))).collect();
                format!("  [\n{}\n  ]", ps.join(",\n"))
            })
            .collect();
    out.push(rows.join(",\n"));
    out.push(" ],".into());
    out.push(" \"B\": [".into());
    let bs: Vec<String> = f.b.iter().map(|p| format!("  {}", poly(p, "  "))).collect();
    out.push(bs.join(",\n"));
    out.push(" ],".into());
    out.push(format!(" \"checksum\": {}", c(&f.checksum)));
    out.push("}".into());
    out.join("\n") + "\n"
}

mod erased {
    pub trait Ser {
        fn compact(&self) -> String;
    }
    impl<T: serde::Serialize> Ser for T {
        fn compact(&self) -> String {
            serde_json::to_string(self).expect("serializable")
        }
    }
}

// ---------------------------------------------------------------------------
// Stored-data invariants

#[derive(Clone, Debug, Serialize)]
pub struct DegreeViolation {
    pub entry: String,
    pub term: String,
    pub degree: u32,
    pub bound: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryDegree {
    pub entry: String,
    pub degree: Option<u32>,
    pub bound: u32,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlagReport {
    pub charvec: Vec<u32>,
    pub entries: Vec<EntryDegree>,
    pub violations: Vec<DegreeViolation>,
    pub pass: bool,
}

pub fn flag_degree_check(op: &AlgebraicOperator) -> FlagReport {
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    for id in EntryId::all(op.rank()) {
        let p = op.entry(id);
        let bound = id.degree_bound(&op.cv);
        let degree = p.weighted_degree(&op.cv);
        for (m, c) in p.terms_above(&op.cv, bound) {
            violations.push(DegreeViolation {
                entry: id.to_string(),
                term: format!("{c}*{m}"),
                degree: m.weighted_degree(&op.cv),
                bound,
            });
        }
        entries.push(EntryDegree { entry: id.to_string(), degree, bound, pass: degree.map_or(true, |d| d <= bound) });
    }
    FlagReport { charvec: op.cv.0.clone(), pass: violations.is_empty(), entries, violations }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawCheck {
    pub entry: String,
    pub expected: String,
    pub found: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub leading_terms: Vec<LawCheck>,
    pub b_at_nu_zero: Vec<LawCheck>,
    pub degrees: FlagReport,
    pub origin_identity: Vec<LawCheck>,
    pub pass: bool,
}

/// Coefficient of `tau_i tau_j` in `A_ij` against `-(w_i, w_j)`.
pub fn leading_term_law(op: &AlgebraicOperator, sys: &RootSystem) -> Vec<LawCheck> {
    let r = op.rank();
    let mut out = Vec::new();
    for i in 0..r {
        for j in i..r {
            let m = Monomial::var(r, i).mul(&Monomial::var(r, j));
            let found = op.a(i, j).coefficient(&m);
            let expected = -sys.metric_dot(&sys.fundamental_weights[i], &sys.fundamental_weights[j]);
            out.push(LawCheck {
                entry: EntryId::A(i, j).to_string(),
                pass: found == NuLinear::constant(expected.clone()),
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
    }
    out
}

/// `B_i(nu = 0) = -d_i^2 tau_i`.
pub fn b_nu_zero_law(op: &AlgebraicOperator, sys: &RootSystem) -> Vec<LawCheck> {
    let r = op.rank();
    (0..r)
        .map(|i| {
            let expected = MultiPoly::var(r, i).scale(&-sys.weight_lengths_sq[i].clone());
            let found = op.b(i).at_nu(&Rational::zero());
            LawCheck {
                entry: EntryId::B(i).to_string(),
                pass: found == expected,
                expected: expected.to_string(),
                found: found.to_string(),
            }
        })
        .collect()
}

/// Values at the image of the origin, `tau = (|Omega_1|, .., |Omega_r|)`:
/// every `A_ij` vanishes and `B_i(0) = -d_i^2 |Omega_i|`.
pub fn origin_identity(op: &AlgebraicOperator, sys: &RootSystem) -> Result<Vec<LawCheck>, OperatorError> {
    let r = op.rank();
    let sizes: Vec<Rational> =
        sys.fundamental_orbits().iter().map(|o| Rational::from_integer((o.size() as i64).into())).collect();
    let mut out = Vec::new();
    for i in 0..r {
        for j in i..r {
            let v = op.a(i, j).evaluate_exact(&sizes, &Rational::zero())?;
            out.push(LawCheck {
                entry: EntryId::A(i, j).to_string(),
                pass: v.is_zero(),
                expected: "0".into(),
                found: v.to_string(),
            });
        }
    }
    for i in 0..r {
        let v = op.b(i).evaluate_exact(&sizes, &Rational::zero())?;
        let expected = -(&sys.weight_lengths_sq[i] * &sizes[i]);
        out.push(LawCheck {
            entry: EntryId::B(i).to_string(),
            pass: v == expected,
            expected: expected.to_string(),
            found: v.to_string(),
        });
    }
    Ok(out)
}

pub fn invariant_report(op: &AlgebraicOperator, sys: &RootSystem) -> Result<InvariantReport, OperatorError> {
    let leading_terms = leading_term_law(op, sys);
    let b_at_nu_zero = b_nu_zero_law(op, sys);
    let degrees = flag_degree_check(op);
    let origin = origin_identity(op, sys)?;
    let pass = leading_terms.iter().chain(&b_at_nu_zero).chain(&origin).all(|c| c.pass) && degrees.pass;
    Ok(InvariantReport { leading_terms, b_at_nu_zero, degrees, origin_identity: origin, pass })
}

// ---------------------------------------------------------------------------
// Flag spaces

#[derive(Clone, Debug)]
pub struct FlagBasis {
    pub n: u32,
    pub cv: CharVector,
    pub monomials: Vec<Monomial>,
    pub weights: Vec<RVec>,
    index: HashMap<Monomial, usize>,
}

impl FlagBasis {
    /// All monomials of weighted degree `<= n`, graded, and within each grade
    /// ordered from low to high dominance of `lambda(p) = sum p_i w_i`.
    pub fn enumerate(sys: &RootSystem, cv: &CharVector, n: u32) -> FlagBasis {
        let r = cv.rank();
        let mut by_grade: BTreeMap<u32, Vec<Monomial>> = BTreeMap::new();
        let mut cur = vec![0u32; r];
        enumerate_rec(cv, n, 0, 0, &mut cur, &mut |m| {
            by_grade.entry(m.weighted_degree(cv)).or_default().push(m);
        });
        let mut monomials = Vec::new();
        let mut weights = Vec::new();
        for (_, mut grade) in by_grade {
            grade.sort();
            let ws: Vec<RVec> = grade.iter().map(|m| sys.weight_of_exponents(&m.0)).collect();
            for k in dominance_sort(sys, &ws) {
                monomials.push(grade[k].clone());
                weights.push(ws[k].clone());
            }
        }
        let index = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        FlagBasis { n, cv: cv.clone(), monomials, weights, index }
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn grade(&self, k: usize) -> u32 {
        self.monomials[k].weighted_degree(&self.cv)
    }

    /// Index ranges of the weighted-degree grades.
    pub fn grade_blocks(&self) -> Vec<std::ops::Range<usize>> {
        let mut out: Vec<std::ops::Range<usize>> = Vec::new();
        for k in 0..self.dim() {
            match out.last_mut() {
                Some(r) if self.grade(r.start) == self.grade(k) => r.end = k + 1,
                _ => out.push(k..k + 1),
            }
        }
        out
    }
}

fn enumerate_rec(cv: &CharVector, n: u32, i: usize, used: u32, cur: &mut Vec<u32>, out: &mut impl FnMut(Monomial)) {
    if i == cv.rank() {
        out(Monomial(cur.clone()));
        return;
    }
    let a = cv.alpha(i);
    let mut p = 0;
    while used + p * a <= n {
        cur[i] = p;
        enumerate_rec(cv, n, i + 1, used + p * a, cur, out);
        p += 1;
    }
    cur[i] = 0;
}

/// Linear extension of dominance (smaller first); ties keep input order.
fn dominance_sort(sys: &RootSystem, ws: &[RVec]) -> Vec<usize> {
    let n = ws.len();
    let mut below = vec![0usize; n];
    let mut above: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in 0..n {
            if a != b && sys.dominance_cmp(&ws[a], &ws[b]) == Some(Ordering::Less) {
                // a < b: a must come first
                above[a].push(b);
                below[b] += 1;
            }
        }
    }
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let k = (0..n).find(|&k| !done[k] && below[k] == 0).expect("dominance is a partial order");
        done[k] = true;
        order.push(k);
        for &b in &above[k] {
            below[b] -= 1;
        }
    }
    order
}

/// Matrix of `h` on `P_n` at fixed `nu`; column `k` holds the image of
/// basis monomial `k`.
#[derive(Clone, Debug)]
pub struct FlagMatrix {
    pub basis: FlagBasis,
    pub nu: Rational,
    pub entries: Vec<Vec<Rational>>,
}

pub fn flag_matrix(
    op: &AlgebraicOperator,
    basis: &FlagBasis,
    nu: &Rational,
    exec: Execution,
) -> Result<FlagMatrix, OperatorError> {
    let fixed = op.at_nu(nu);
    let d = basis.dim();
    let cols: Vec<Result<Vec<Rational>, OperatorError>> = exec.map(&basis.monomials, |m| {
        let img = fixed.apply(&MultiPoly::monomial(m.clone()))?;
        let mut col = vec![Rational::zero(); d];
        for (t, c) in img.terms() {
            let row = basis.index_of(t).ok_or_else(|| OperatorError::OutsideFlag {
                monomial: m.to_string(),
                term: t.to_string(),
                n: basis.n,
            })?;
            col[row] = c.c0.clone();
        }
        Ok(col)
    });
    let cols = cols.into_iter().collect::<Result<Vec<_>, _>>()?;
    let entries = (0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect();
    Ok(FlagMatrix { basis: basis.clone(), nu: nu.clone(), entries })
}

/// Constructive flag check: `h m` lies in `P_n` for every basis monomial.
#[derive(Clone, Debug, Serialize)]
pub struct FlagPreservation {
    pub n: u32,
    pub dim: usize,
    /// Entries are affine in `nu`, so two couplings decide every coefficient.
    pub nus_checked: Vec<String>,
    pub outside: Vec<String>,
    pub pass: bool,
}

pub fn flag_preservation(
    op: &AlgebraicOperator,
    sys: &RootSystem,
    n: u32,
    exec: Execution,
) -> Result<FlagPreservation, OperatorError> {
    let basis = FlagBasis::enumerate(sys, &op.cv, n);
    let nus = [int(0), int(1)];
    let mut outside = Vec::new();
    for nu in &nus {
        let fixed = op.at_nu(nu);
        let found: Vec<Result<Vec<String>, OperatorError>> = exec.map(&basis.monomials, |m| {
            let img = fixed.apply(&MultiPoly::monomial(m.clone()))?;
            Ok(img
                .terms()
                .filter(|(t, _)| basis.index_of(t).is_none())
                .map(|(t, c)| format!("h({m}) at nu={nu} has {c}*{t}"))
                .collect())
        });
        for f in found {
            outside.extend(f?);
        }
    }
    Ok(FlagPreservation {
        n,
        dim: basis.dim(),
        nus_checked: nus.iter().map(|x| x.to_string()).collect(),
        pass: outside.is_empty(),
        outside,
    })
}

impl FlagMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Entries below the diagonal that are non-zero.
    pub fn lower_nonzeros(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        let mut v = Vec::new();
        for i in 0..d {
            for j in 0..i {
                if !self.entries[i][j].is_zero() {
                    v.push((i, j));
                }
            }
        }
        v
    }

    /// Non-zero entries that map a grade into a higher one.
    pub fn grade_violations(&self) -> Vec<(usize, usize)> {
        let d = self.dim();
        let mut v = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if !self.entries[i][j].is_zero() && self.basis.grade(i) > self.basis.grade(j) {
                    v.push((i, j));
                }
            }
        }
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("row\\col");
        for m in &self.basis.monomials {
            s.push(',');
            s.push_str(&m.to_string());
        }
        s.push('\n');
        for (i, row) in self.entries.iter().enumerate() {
            s.push_str(&self.basis.monomials[i].to_string());
            for x in row {
                s.push(',');
                s.push_str(&x.to_string());
            }
            s.push('\n');
        }
        s
    }

    pub fn to_export(&self) -> MatrixExport {
        MatrixExport {
            n: self.basis.n,
            nu: self.nu.to_string(),
            basis: self.basis.monomials.iter().map(|m| m.0.clone()).collect(),
            entries: self.entries.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixExport {
    pub n: u32,
    pub nu: String,
    pub basis: Vec<Vec<u32>>,
    pub entries: Vec<Vec<String>>,
}

// ---------------------------------------------------------------------------
// Spectrum

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpectrumCertificate {
    /// Grade blocks triangular in the dominance-refined order; eigenvalues
    /// read off the diagonal.
    Triangular,
    /// At least one block needed a numerical eigensolve.
    NumericBlocks,
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigenvalue {
    pub monomial: Vec<u32>,
    /// `c0 + c1 nu` (exact on the triangular path).
    pub c0: String,
    pub c1: String,
    pub c0_f64: f64,
    pub c1_f64: f64,
    /// `-(lambda, lambda)` for the monomial's weight.
    pub minus_lambda_sq: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    pub n: u32,
    pub dim: usize,
    pub nu_samples: Vec<String>,
    pub certificate: SpectrumCertificate,
    pub eigenvalues: Vec<Eigenvalue>,
    /// Largest deviation from an affine law over the sampled couplings.
    pub affine_residual: f64,
    pub affine_exact: bool,
    /// Spectrum at `nu = 0` equals `{-(lambda, lambda)}` as a multiset.
    pub nu_zero_law: bool,
}

impl SpectrumResult {
    /// Eigenvalues at a given coupling, in basis order.
    pub fn at(&self, nu: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.c0_f64 + e.c1_f64 * nu).collect()
    }
}

pub fn default_spectrum_nus() -> Vec<Rational> {
    vec![int(0), rat(1, 2), rat(5, 2)]
}

pub fn spectrum(
    op: &AlgebraicOperator,
    sys: &RootSystem,
    n: u32,
    nus: &[Rational],
    exec: Execution,
) -> Result<SpectrumResult, OperatorError> {
    assert!(nus.len() >= 3, "spectrum needs at least three coupling values");
    let basis = FlagBasis::enumerate(sys, &op.cv, n);
    let mats: Vec<FlagMatrix> = nus.iter().map(|nu| flag_matrix(op, &basis, nu, exec)).collect::<Result<_, _>>()?;
    for m in &mats {
        if let Some(&(i, j)) = m.grade_violations().first() {
            return Err(OperatorError::OutsideFlag {
                monomial: basis.monomials[j].to_string(),
                term: basis.monomials[i].to_string(),
                n: basis.grade(j),
            });
        }
    }
    let minus_lsq: Vec<Rational> = basis.weights.iter().map(|w| -sys.metric_norm_sq(w)).collect();
    let triangular = mats.iter().all(|m| m.lower_nonzeros().is_empty());
    let d = basis.dim();
    let mut eigenvalues = Vec::with_capacity(d);
    let (certificate, affine_residual, affine_exact, nu_zero_law);
    if triangular {
        let (n0, n1) = (&nus[0], &nus[1]);
        let mut worst = Rational::zero();
        let mut exact = true;
        let mut c0s = Vec::with_capacity(d);
        for k in 0..d {
            let (v0, v1) = (&mats[0].entries[k][k], &mats[1].entries[k][k]);
            let c1 = (v1 - v0) / (n1 - n0);
            let c0 = v0 - &c1 * n0;
            for (m, nu) in mats.iter().zip(nus).skip(2) {
                let dev = (&m.entries[k][k] - (&c0 + &c1 * nu)).abs();
                if !dev.is_zero() {
                    exact = false;
                }
                if dev > worst {
                    worst = dev;
                }
            }
            c0s.push(c0.clone());
            eigenvalues.push(Eigenvalue {
                monomial: basis.monomials[k].0.clone(),
                c0_f64: c0.to_f64().unwrap_or(f64::NAN),
                c1_f64: c1.to_f64().unwrap_or(f64::NAN),
                c0: c0.to_string(),
                c1: c1.to_string(),
                minus_lambda_sq: minus_lsq[k].to_string(),
            });
        }
        let mut at0 = c0s;
        let mut want = minus_lsq.clone();
        at0.sort();
        want.sort();
        certificate = SpectrumCertificate::Triangular;
        affine_residual = worst.to_f64().unwrap_or(f64::INFINITY);
        affine_exact = exact;
        nu_zero_law = at0 == want;
    } else {
        let blocks = basis.grade_blocks();
        let per_nu: Vec<Vec<f64>> = mats
            .iter()
            .map(|m| {
                let mut vals = Vec::with_capacity(d);
                for b in &blocks {
                    vals.extend(block_eigenvalues(m, b.clone()));
                }
                vals
            })
            .collect();
        let nf: Vec<f64> = nus.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        let mut worst = 0.0f64;
        for k in 0..d {
            let c1 = (per_nu[1][k] - per_nu[0][k]) / (nf[1] - nf[0]);
            let c0 = per_nu[0][k] - c1 * nf[0];
            for (vals, nu) in per_nu.iter().zip(&nf).skip(2) {
                worst = worst.max((vals[k] - (c0 + c1 * nu)).abs() / (1.0 + vals[k].abs()));
            }
            eigenvalues.push(Eigenvalue {
                monomial: basis.monomials[k].0.clone(),
                c0: format!("{c0:e}"),
                c1: format!("{c1:e}"),
                c0_f64: c0,
                c1_f64: c1,
                minus_lambda_sq: minus_lsq[k].to_string(),
            });
        }
        let zero_idx = nus.iter().position(|x| x.is_zero());
        nu_zero_law = match zero_idx {
            Some(z) => {
                let mut got = per_nu[z].clone();
                let mut want: Vec<f64> = minus_lsq.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect();
                got.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
                want.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
                got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-9 * (1.0 + b.abs()))
            }
            None => false,
        };
        certificate = SpectrumCertificate::NumericBlocks;
        affine_residual = worst;
        affine_exact = worst < 1e-9;
    }
    Ok(SpectrumResult {
        n,
        dim: d,
        nu_samples: nus.iter().map(|x| x.to_string()).collect(),
        certificate,
        eigenvalues,
        affine_residual,
        affine_exact,
        nu_zero_law,
    })
}

/// Real parts of the eigenvalues of a diagonal block, sorted descending so
/// that the pairing across couplings is stable.
fn block_eigenvalues(m: &FlagMatrix, r: std::ops::Range<usize>) -> Vec<f64> {
    let k = r.len();
    let block =
        nalgebra::DMatrix::from_fn(k, k, |i, j| m.entries[r.start + i][r.start + j].to_f64().unwrap_or(f64::NAN));
    let mut vals: Vec<f64> = block.complex_eigenvalues().iter().map(|z| z.re).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    vals
}

// ---------------------------------------------------------------------------
// Weighted-projective substitution

/// Parameter names in the order expected by [`ProjectiveParams::new`]. The
/// `tau_7` line carries six independent quadratic parameters.
pub const PROJECTIVE_LABELS: [&str; 31] = [
    "a2", "b2,1", "b2,2", "a3", "b3,1", "b3,2", "a4", "b4,1", "b4,2", "a12", "b5,1", "b5,2", "b5,3", "c5", "a6",
    "b6,1", "b6,2", "b6,3", "c6", "a18", "b7,1", "b7,2", "b7,3", "c7,1", "c7,2", "d7,1", "d7,2", "d7,3", "d7,4",
    "d7,5", "d7,6",
];

#[derive(Clone, Debug)]
pub struct ProjectiveParams(pub Vec<Rational>);

impl ProjectiveParams {
    pub fn new(values: Vec<Rational>) -> Result<Self, OperatorError> {
        if values.len() != PROJECTIVE_LABELS.len() {
            return Err(OperatorError::ParamCount { expected: PROJECTIVE_LABELS.len(), got: values.len() });
        }
        Ok(ProjectiveParams(values))
    }

    pub fn zero() -> Self {
        ProjectiveParams(vec![Rational::zero(); PROJECTIVE_LABELS.len()])
    }

    /// Non-zero rationals `p/q` with `|p| <= 9`, `1 <= q <= 7`, from a seed.
    pub fn random(seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..PROJECTIVE_LABELS.len())
            .map(|_| {
                let mut p = 0i64;
                while p == 0 {
                    p = rng.gen_range(-9..=9);
                }
                rat(p, rng.gen_range(1..=7))
            })
            .collect();
        ProjectiveParams(values)
    }

    pub fn labeled(&self) -> BTreeMap<String, String> {
        PROJECTIVE_LABELS.iter().zip(&self.0).map(|(l, v)| (l.to_string(), v.to_string())).collect()
    }

    /// Images of `tau_1 .. tau_7`.
    pub fn images(&self) -> Vec<MultiPoly> {
        let t = |ps: &[u32]| {
            let mut e = vec![0; 7];
            for &p in ps {
                e[p as usize - 1] += 1;
            }
            Monomial(e)
        };
        let p = &self.0;
        let mut k = 0;
        let mut next = || {
            k += 1;
            NuLinear::constant(p[k - 1].clone())
        };
        let line = |lead: u32, terms: Vec<(Monomial, NuLinear)>| {
            let mut q = MultiPoly::monomial(t(&[lead]));
            for (m, c) in terms {
                q.add_term(m, c);
            }
            q
        };
        let mut out = vec![MultiPoly::var(7, 0)];
        out.push(line(2, vec![(t(&[1, 1]), next()), (t(&[3]), next()), (t(&[4]), next())]));
        out.push(line(3, vec![(t(&[1, 1]), next()), (t(&[2]), next()), (t(&[4]), next())]));
        out.push(line(4, vec![(t(&[1, 1]), next()), (t(&[2]), next()), (t(&[3]), next())]));
        out.push(line(
            5,
            vec![
                (t(&[1, 1, 1]), next()),
                (t(&[1, 2]), next()),
                (t(&[1, 3]), next()),
                (t(&[1, 4]), next()),
                (t(&[6]), next()),
            ],
        ));
        out.push(line(
            6,
            vec![
                (t(&[1, 1, 1]), next()),
                (t(&[1, 2]), next()),
                (t(&[1, 3]), next()),
                (t(&[1, 4]), next()),
                (t(&[5]), next()),
            ],
        ));
        out.push(line(
            7,
            vec![
                (t(&[1, 1, 1, 1]), next()),
                (t(&[1, 1, 2]), next()),
                (t(&[1, 1, 3]), next()),
                (t(&[1, 1, 4]), next()),
                (t(&[1, 5]), next()),
                (t(&[1, 6]), next()),
                (t(&[2, 2]), next()),
                (t(&[3, 3]), next()),
                (t(&[4, 4]), next()),
                (t(&[2, 3]), next()),
                (t(&[2, 4]), next()),
                (t(&[3, 4]), next()),
            ],
        ));
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub n: u32,
    pub dim: usize,
    pub params: BTreeMap<String, String>,
    /// Every image lies in `P_n`.
    pub images_in_flag: bool,
    /// Each monomial of weighted degree `d` maps to weighted degree exactly `d`.
    pub degree_preserving: bool,
    /// Induced matrix is block triangular with respect to the grading.
    pub grade_block_triangular: bool,
    pub determinant: String,
    pub invertible: bool,
    /// Upper triangular with unit diagonal in the graded basis order.
    pub unit_triangular: bool,
    /// Diagonal-block determinants per grade.
    pub block_determinants: Vec<(u32, String)>,
    pub violations: Vec<String>,
}

pub fn weighted_projective_check(
    params: &ProjectiveParams,
    sys: &RootSystem,
    n: u32,
    exec: Execution,
) -> Result<InvarianceReport, OperatorError> {
    let cv = CharVector::e7();
    let basis = FlagBasis::enumerate(sys, &cv, n);
    let images = params.images();
    let d = basis.dim();
    // column, weighted degree of the image, terms outside the basis
    type Column = (Vec<Rational>, Option<u32>, Vec<String>);
    let cols = exec.map(&basis.monomials, |m| -> Result<Column, OperatorError> {
        let img = MultiPoly::monomial(m.clone()).substitute(&images)?;
        let mut col = vec![Rational::zero(); d];
        let mut bad = Vec::new();
        for (t, c) in img.terms() {
            match basis.index_of(t) {
                Some(row) => col[row] = c.c0.clone(),
                None => bad.push(format!("{m} -> {c}*{t}")),
            }
        }
        Ok((col, img.weighted_degree(&cv), bad))
    });
    let cols = cols.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut violations = Vec::new();
    let mut degree_preserving = true;
    for (k, (_, deg, bad)) in cols.iter().enumerate() {
        violations.extend(bad.iter().cloned());
        if *deg != Some(basis.grade(k)) {
            degree_preserving = false;
        }
    }
    let entries: Vec<Vec<Rational>> = (0..d).map(|i| (0..d).map(|j| cols[j].0[i].clone()).collect()).collect();
    let mut grade_block_triangular = true;
    let mut unit_triangular = true;
    for i in 0..d {
        for j in 0..d {
            let x = &entries[i][j];
            if basis.grade(i) > basis.grade(j) && !x.is_zero() {
                grade_block_triangular = false;
            }
            if (i > j && !x.is_zero()) || (i == j && !x.is_one()) {
                unit_triangular = false;
            }
        }
    }
    let det = rational_determinant(&entries);
    let block_determinants = basis
        .grade_blocks()
        .into_iter()
        .map(|r| {
            let g = basis.grade(r.start);
            let sub: Vec<Vec<Rational>> =
                r.clone().map(|i| r.clone().map(|j| entries[i][j].clone()).collect()).collect();
            (g, rational_determinant(&sub).to_string())
        })
        .collect();
    Ok(InvarianceReport {
        n,
        dim: d,
        params: params.labeled(),
        images_in_flag: violations.is_empty(),
        degree_preserving,
        grade_block_triangular,
        invertible: !det.is_zero(),
        determinant: det.to_string(),
        unit_triangular,
        block_determinants,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e7() -> RootSystem {
        RootSystem::build(SystemKind::E7).unwrap()
    }

    #[test]
    fn printed_tables_load_with_checksum() {
        let op = e7_operator().unwrap();
        assert_eq!(op.rank(), 7);
        assert_eq!(op.to_file().checksum, "4e3900bff9bc6c5e163e3d1799984f07cc71664e4732bf5f8ea895534192c8c5");
        assert_eq!(op.to_json(), PRINTED_E7);
    }

    #[test]
    fn a11_and_b7_entries() {
        let op = e7_operator().unwrap();
        let c = |e: &[u32]| op.a(0, 0).coefficient(&Monomial(e.to_vec())).c0;
        assert_eq!(c(&[0; 7]), int(168));
        assert_eq!(c(&[0, 1, 0, 0, 0, 0, 0]), int(24));
        assert_eq!(c(&[0, 0, 0, 1, 0, 0, 0]), int(2));
        assert_eq!(c(&[2, 0, 0, 0, 0, 0, 0]), rat(-3, 2));
        assert_eq!(op.a(0, 0).len(), 4);
        assert_eq!(op.b(6).coefficient(&Monomial::one(7)), NuLinear::nu(int(36288)));
    }

    #[test]
    fn a12_leading_coefficient() {
        let op = e7_operator().unwrap();
        let sys = e7();
        let m = Monomial(vec![1, 1, 0, 0, 0, 0, 0]);
        assert_eq!(op.a(0, 1).coefficient(&m).c0, int(-1));
        assert_eq!(sys.metric_dot(&sys.fundamental_weights[0], &sys.fundamental_weights[1]), int(1));
    }

    #[test]
    fn apply_on_low_monomials() {
        let op = e7_operator().unwrap();
        assert!(op.apply(&MultiPoly::constant(7, int(1))).unwrap().is_zero());
        let t1 = op.apply(&MultiPoly::var(7, 0)).unwrap();
        let want = MultiPoly::var(7, 0).scale_nu(&NuLinear::new(rat(-3, 2), rat(27, 2))).unwrap();
        assert_eq!(t1, want);
        let t2 = op.apply(&MultiPoly::var(7, 1)).unwrap();
        let mut want2 = MultiPoly::term(7, Monomial::one(7), NuLinear::nu(int(126)));
        want2.add_term(Monomial::var(7, 1), NuLinear::new(int(-2), int(17)));
        assert_eq!(t2, want2);
    }

    #[test]
    fn degree_checks() {
        let op = e7_operator().unwrap();
        let rep = flag_degree_check(&op);
        assert!(rep.pass, "{:?}", rep.violations);
        let a77 = rep.entries.iter().find(|e| e.entry == "A77").unwrap();
        assert_eq!((a77.degree, a77.bound), (Some(8), 8));
        let a12 = rep.entries.iter().find(|e| e.entry == "A12").unwrap();
        assert_eq!((a12.degree, a12.bound), (Some(3), 3));
        let mut b1 = op.b(0).clone();
        b1.add_term(Monomial::var(7, 6), NuLinear::constant(int(1)));
        let bad = flag_degree_check(&op.with_entry(EntryId::B(0), b1));
        assert!(!bad.pass);
        assert_eq!(bad.violations.len(), 1);
        assert_eq!(bad.violations[0].entry, "B1");
        assert_eq!(bad.violations[0].degree, 4);
    }

    #[test]
    fn basis_enumeration() {
        let sys = e7();
        let cv = CharVector::e7();
        assert_eq!(FlagBasis::enumerate(&sys, &cv, 0).dim(), 1);
        let b1 = FlagBasis::enumerate(&sys, &cv, 1);
        assert_eq!(b1.monomials, vec![Monomial::one(7), Monomial::var(7, 0)]);
        let b2 = FlagBasis::enumerate(&sys, &cv, 2);
        assert_eq!(b2.dim(), 6);
        // brute force count of sum alpha_i p_i <= 2
        let mut count = 0;
        for e in 0..3u32.pow(7) {
            let p: Vec<u32> = (0..7).map(|i| e / 3u32.pow(i) % 3).collect();
            if p.iter().zip(&cv.0).map(|(a, b)| a * b).sum::<u32>() <= 2 {
                count += 1;
            }
        }
        assert_eq!(count, 6);
    }

    #[test]
    fn small_flag_matrices() {
        let sys = e7();
        let op = e7_operator().unwrap();
        let b1 = FlagBasis::enumerate(&sys, &op.cv, 1);
        let m = flag_matrix(&op, &b1, &int(0), Execution::Sequential).unwrap();
        assert_eq!(m.entries, vec![vec![int(0), int(0)], vec![int(0), rat(-3, 2)]]);
        let b2 = FlagBasis::enumerate(&sys, &op.cv, 2);
        let m2 = flag_matrix(&op, &b2, &int(0), Execution::Parallel).unwrap();
        let k = b2.index_of(&Monomial(vec![2, 0, 0, 0, 0, 0, 0])).unwrap();
        assert_eq!(m2.entries[k][k], int(-6));
        assert!(m2.entries.iter().all(|row| row[0].is_zero()));
    }

    #[test]
    fn low_spectra() {
        let sys = e7();
        let op = e7_operator().unwrap();
        let s1 = spectrum(&op, &sys, 1, &default_spectrum_nus(), Execution::Sequential).unwrap();
        assert_eq!(s1.certificate, SpectrumCertificate::Triangular);
        assert_eq!((s1.eigenvalues[0].c0.as_str(), s1.eigenvalues[0].c1.as_str()), ("0", "0"));
        assert_eq!((s1.eigenvalues[1].c0.as_str(), s1.eigenvalues[1].c1.as_str()), ("-3/2", "27/2"));
        let s2 = spectrum(&op, &sys, 2, &default_spectrum_nus(), Execution::Sequential).unwrap();
        assert!(s2.nu_zero_law && s2.affine_exact);
        let t2 = s2.eigenvalues.iter().find(|e| e.monomial == vec![0, 1, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(t2.c0, "-2");
    }

    #[test]
    fn zero_parameters_give_identity() {
        let sys = e7();
        let rep = weighted_projective_check(&ProjectiveParams::zero(), &sys, 4, Execution::Sequential).unwrap();
        assert!(rep.images_in_flag && rep.unit_triangular && rep.degree_preserving);
        assert_eq!(rep.determinant, "1");
        assert_eq!(ProjectiveParams::zero().images()[0], MultiPoly::var(7, 0));
    }

    #[test]
    fn entry_ids() {
        assert_eq!("A17".parse::<EntryId>().unwrap(), EntryId::A(0, 6));
        assert_eq!("a7,1".parse::<EntryId>().unwrap(), EntryId::A(0, 6));
        assert_eq!("B3".parse::<EntryId>().unwrap(), EntryId::B(2));
        assert!("C1".parse::<EntryId>().is_err());
        assert!("A10".parse::<EntryId>().is_err());
        assert_eq!(EntryId::all(7).len(), 35);
    }
}
