//! Re-derivation of table entries by extended-precision least squares on
//! oracle values followed by rational reconstruction.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use super::verify::entry_scale;
use super::{NumericFrame, Oracle, OracleError, OracleOperator, Sampler};
use crate::exactpoly::{CharVector, Monomial, MultiPoly, NuLinear, TermRecord};
use crate::exec::Execution;
use crate::linalg::{LeastSquares, LinalgError};
use crate::numeric::{precision_digits, Hp, Real};
use crate::operator::{AlgebraicOperator, EntryId, ErrataFile, ErratumRecord, FlagBasis};
use crate::rootsys::Rational;

#[derive(Clone, Debug, Serialize)]
pub struct FitConfig {
    pub seed: u64,
    /// Samples per unknown; at least 2.
    pub oversampling: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    pub beta: f64,
    pub max_denominator: i64,
    /// Relative tolerance for snapping a coefficient to a rational.
    pub snap_tol: f64,
    /// Required residual of the reconstructed polynomial.
    pub accept_tol: f64,
    pub rank_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            seed: 20_090_401,
            oversampling: 2,
            // A wide box spreads the invariants over their range; the narrow
            // verification box leaves the monomial columns nearly collinear.
            box_lo: 0.0,
            box_hi: std::f64::consts::TAU,
            beta: 1.0,
            max_denominator: 4,
            snap_tol: 1e-35,
            accept_tol: 1e-30,
            rank_tol: 1e-60,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitOutcome {
    pub entry: String,
    pub basis_size: usize,
    pub samples: usize,
    /// Reconstructed polynomial, if every coefficient snapped.
    pub fitted: Option<Vec<TermRecord>>,
    /// Raw coefficients (`nu^0` then `nu^1` for B) when reconstruction failed.
    pub raw: Vec<(Vec<u32>, String)>,
    pub max_rel_residual: f64,
    pub accepted: bool,
    /// Fitted polynomial equals the entry of the comparison operator.
    pub matches_reference: Option<bool>,
    /// Diagonal ratio of the scaled triangular factor.
    pub conditioning: f64,
}

impl FitOutcome {
    pub fn polynomial(&self, rank: usize) -> Option<MultiPoly> {
        self.fitted.as_ref().map(|r| MultiPoly::from_records(rank, r).expect("records built by the fitter"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub config: FitConfig,
    pub precision_digits: usize,
    pub outcomes: Vec<FitOutcome>,
}

struct Sample {
    frame: NumericFrame<Hp>,
    num: OracleOperator<Hp>,
}

/// Fits one entry.
pub fn fit_entry(
    oracle: &Oracle,
    cv: &CharVector,
    id: EntryId,
    reference: Option<&AlgebraicOperator>,
    cfg: &FitConfig,
    exec: Execution,
) -> Result<FitOutcome, OracleError> {
    let mut r = fit_entries(oracle, cv, &[id], reference, cfg, exec)?;
    Ok(r.outcomes.remove(0))
}

/// Fits several entries from one shared sample set.
pub fn fit_entries(
    oracle: &Oracle,
    cv: &CharVector,
    ids: &[EntryId],
    reference: Option<&AlgebraicOperator>,
    cfg: &FitConfig,
    exec: Execution,
) -> Result<FitReport, OracleError> {
    if !oracle.has_real_invariants() {
        return Err(OracleError::ComplexInvariants);
    }
    let sys = &oracle.sys;
    let mut bases: BTreeMap<u32, Vec<Monomial>> = BTreeMap::new();
    for id in ids {
        let n = id.degree_bound(cv);
        bases.entry(n).or_insert_with(|| FlagBasis::enumerate(sys, cv, n).monomials);
    }
    let max_basis = bases.values().map(Vec::len).max().unwrap_or(0);
    let count = cfg.oversampling.max(2) * max_basis;
    let sampler = Sampler::new(cfg.seed).with_box(cfg.box_lo, cfg.box_hi).with_beta(cfg.beta);
    let beta = Hp::from_f64(cfg.beta);
    let samples: Vec<Result<Sample, OracleError>> = exec.map_range(count, |i| {
        let y = sampler.sample(oracle, i)?;
        let yh: Vec<Hp> = y.iter().map(|v| Hp::from_f64(*v)).collect();
        let frame = oracle.frame(&yh, &beta)?;
        let num = oracle.operator_parts(&frame, &Hp::one());
        Ok(Sample { frame, num })
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>, _>>()?;

    // One factorization per degree bound, over the first 2x|basis| samples.
    let factors: BTreeMap<u32, (usize, Result<LeastSquares<Hp>, LinalgError>)> = bases
        .iter()
        .map(|(&n, basis)| {
            let m = (cfg.oversampling.max(2) * basis.len()).min(samples.len());
            let cols: Vec<Vec<Hp>> =
                exec.map(basis, |mono| samples[..m].iter().map(|s| monomial_value(mono, &s.frame.tau)).collect());
            (n, (m, LeastSquares::factor(cols, cfg.rank_tol)))
        })
        .collect();

    let outcomes = exec.map(ids, |&id| {
        let n = id.degree_bound(cv);
        let basis = &bases[&n];
        let (m, ls) = &factors[&n];
        let mut outcome = FitOutcome {
            entry: id.to_string(),
            basis_size: basis.len(),
            samples: *m,
            fitted: None,
            raw: Vec::new(),
            max_rel_residual: f64::INFINITY,
            accepted: false,
            matches_reference: None,
            conditioning: 0.0,
        };
        let ls = match ls {
            Ok(ls) => ls,
            Err(_) => return outcome,
        };
        outcome.conditioning = ls.min_diag_ratio;
        let rhs = |part: u8| -> Vec<Hp> {
            samples[..*m]
                .iter()
                .map(|s| match (id, part) {
                    (EntryId::A(i, j), _) => s.num.a[i][j].clone(),
                    (EntryId::B(i), 0) => s.num.b0[i].clone(),
                    (EntryId::B(i), _) => s.num.b1[i].clone(),
                })
                .collect()
        };
        let parts: Vec<u8> = match id {
            EntryId::A(..) => vec![0],
            EntryId::B(_) => vec![0, 1],
        };
        let rank = cv.rank();
        let mut poly = MultiPoly::zero(rank);
        let mut snapped_all = true;
        for &part in &parts {
            let coeffs = ls.solve(&rhs(part)).expect("shapes match");
            for (mono, c) in basis.iter().zip(coeffs) {
                match snap(&c, cfg.max_denominator, cfg.snap_tol) {
                    Some(q) => {
                        let nl = if part == 0 { NuLinear::constant(q) } else { NuLinear::nu(q) };
                        poly.add_term(mono.clone(), nl);
                    }
                    None => snapped_all = false,
                }
                outcome.raw.push((mono.0.clone(), c.to_string_digits(40)));
            }
        }
        if !snapped_all {
            return outcome;
        }
        outcome.raw.clear();
        outcome.max_rel_residual = residual(&poly, id, &samples);
        outcome.accepted = outcome.max_rel_residual < cfg.accept_tol;
        outcome.matches_reference = reference.map(|r| r.entry(id) == &poly);
        outcome.fitted = Some(poly.to_records(cv));
        outcome
    });
    Ok(FitReport { config: cfg.clone(), precision_digits: precision_digits(), outcomes })
}

fn monomial_value(m: &Monomial, tau: &[Hp]) -> Hp {
    let mut v = Hp::one();
    for (t, &p) in tau.iter().zip(&m.0) {
        for _ in 0..p {
            v *= t.clone();
        }
    }
    v
}

/// Nearest rational with denominator `<= max_den` within `tol` (relative to
/// `1 + |x|`).
fn snap(x: &Hp, max_den: i64, tol: f64) -> Option<Rational> {
    let slack = Hp::from_f64(tol) * (Hp::one() + x.abs());
    for d in 1..=max_den {
        let xd = x.clone() * Hp::from_i64(d);
        let approx = xd.to_f64().round();
        if !approx.is_finite() || approx.abs() > 9.0e15 {
            return None;
        }
        let n = approx as i64;
        let err = (xd - Hp::from_i64(n)).abs() / Hp::from_i64(d);
        if err < slack {
            return Some(Rational::new(BigInt::from(n), BigInt::from(d)));
        }
    }
    None
}

/// Residual over every sample, including those not used in the fit.
fn residual(poly: &MultiPoly, id: EntryId, samples: &[Sample]) -> f64 {
    let mut worst = 0.0f64;
    for s in samples {
        let (p0, p1) = poly.evaluate_parts(&s.frame.tau).expect("rank matches");
        let r = match id {
            EntryId::A(i, j) => (p0 - s.num.a[i][j].clone()).abs() / entry_scale(&s.num, id, &Hp::zero()),
            EntryId::B(i) => {
                let scale = entry_scale(&s.num, id, &Hp::one());
                ((p0 - s.num.b0[i].clone()).abs() + (p1 - s.num.b1[i].clone()).abs()) / scale
            }
        };
        worst = worst.max(r.to_f64());
    }
    worst
}

/// Uniform reparametrization of the coupling: `fitted_B(nu) =
/// reference_B(factor nu)` for every `B` entry.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingRescale {
    pub factor: Option<String>,
    pub consistent: bool,
    pub entries_checked: usize,
}

pub fn detect_coupling_rescale(reference: &AlgebraicOperator, fitted_b: &[MultiPoly]) -> CouplingRescale {
    let mut factor: Option<Rational> = None;
    let mut consistent = true;
    for (i, fb) in fitted_b.iter().enumerate() {
        let rb = reference.b(i);
        let (r0, r1) = rb.nu_parts();
        let (f0, f1) = fb.nu_parts();
        if r0 != f0 {
            consistent = false;
            continue;
        }
        let monos: std::collections::BTreeSet<Monomial> =
            r1.terms().chain(f1.terms()).map(|(m, _)| m.clone()).collect();
        for m in monos {
            let a = r1.coefficient(&m).c0;
            let b = f1.coefficient(&m).c0;
            match (a.is_zero(), b.is_zero()) {
                (true, true) => {}
                (true, false) | (false, true) => consistent = false,
                (false, false) => {
                    let k = &b / &a;
                    match &factor {
                        None => factor = Some(k),
                        Some(f) if *f == k => {}
                        Some(_) => consistent = false,
                    }
                }
            }
        }
    }
    CouplingRescale {
        consistent: consistent && factor.is_some(),
        factor: factor.map(|f| f.to_string()),
        entries_checked: fitted_b.len(),
    }
}

/// Errata for every accepted fit that disagrees with `reference`.
pub fn build_errata(reference: &AlgebraicOperator, report: &FitReport) -> Result<ErrataFile, OracleError> {
    let rank = reference.rank();
    let fitted_b: Vec<MultiPoly> = (0..rank)
        .map(|i| {
            report
                .outcomes
                .iter()
                .find(|o| o.entry == EntryId::B(i).to_string())
                .and_then(|o| o.polynomial(rank))
                .unwrap_or_else(|| reference.b(i).clone())
        })
        .collect();
    let rescale = detect_coupling_rescale(reference, &fitted_b);
    let mut entries = Vec::new();
    for o in &report.outcomes {
        if !o.accepted || o.matches_reference != Some(false) {
            continue;
        }
        let id: EntryId = o.entry.parse().map_err(|_| OracleError::Entry(o.entry.clone()))?;
        let fitted = o.polynomial(rank).expect("accepted fit has a polynomial");
        let note = match (id, &rescale.factor) {
            (EntryId::B(_), Some(f)) if rescale.consistent => {
                format!("coupling-dependent part equals the printed one at nu -> {f} nu")
            }
            (EntryId::B(_), _) => "coupling-dependent part differs from the printed entry".to_string(),
            (EntryId::A(..), _) => {
                let diff = &fitted - reference.entry(id);
                format!("fitted minus printed: {diff}")
            }
        };
        entries.push(ErratumRecord {
            entry: o.entry.clone(),
            printed: reference.entry(id).to_records(&reference.cv),
            fitted: fitted.to_records(&reference.cv),
            max_rel_residual: o.max_rel_residual,
            note,
        });
    }
    Ok(ErrataFile {
        system: reference.system.to_string(),
        provenance: "fitted".to_string(),
        base_checksum: reference.to_file().checksum,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{int, rat, RootSystem, SystemKind};

    #[test]
    fn snapping() {
        assert_eq!(snap(&Hp::parse("1.5"), 4, 1e-30), Some(rat(3, 2)));
        assert_eq!(snap(&Hp::parse("-0.75"), 4, 1e-30), Some(rat(-3, 4)));
        assert_eq!(snap(&Hp::parse("0.2"), 4, 1e-30), None);
        let near = Hp::parse("168") + Hp::parse("1e-50");
        assert_eq!(snap(&near, 4, 1e-35), Some(int(168)));
    }

    #[test]
    fn a1_fit_recovers_closed_form() {
        let o = Oracle::new(&RootSystem::build(SystemKind::A1).unwrap());
        let cv = CharVector(vec![1]);
        let cfg = FitConfig::default();
        let rep = fit_entries(&o, &cv, &[EntryId::A(0, 0), EntryId::B(0)], None, &cfg, Execution::default()).unwrap();
        let a = rep.outcomes[0].polynomial(1).unwrap();
        let mut want = MultiPoly::constant(1, int(2));
        want.add_term(Monomial(vec![2]), NuLinear::constant(rat(-1, 2)));
        assert_eq!(a, want);
        let b = rep.outcomes[1].polynomial(1).unwrap();
        let want_b = MultiPoly::term(1, Monomial(vec![1]), NuLinear::new(rat(-1, 2), int(-1)));
        assert_eq!(b, want_b);
        assert!(rep.outcomes.iter().all(|o| o.accepted));
    }
}
