use serde::{Deserialize, Serialize};

use super::{Oracle, OracleError, OracleOperator, Sampler};
use crate::exactpoly::MultiPoly;
use crate::exec::Execution;
use crate::numeric::{Hp, Real};
use crate::operator::{AlgebraicOperator, EntryId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    High,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub nu_list: Vec<f64>,
    pub beta_list: Vec<f64>,
    pub precision: Precision,
    pub box_lo: f64,
    pub box_hi: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 50,
            seed: 42,
            tol: 1e-6,
            nu_list: vec![0.0, 0.5, 2.5],
            beta_list: vec![1.0],
            precision: Precision::Double,
            box_lo: 0.05,
            box_hi: 0.35,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryResidual {
    pub entry: String,
    pub max_rel_residual: f64,
    pub pass: bool,
    pub samples: usize,
    /// Sample index of the largest residual.
    pub worst_sample: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub entries: Vec<EntryResidual>,
    pub failing: Vec<String>,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub nu_list: Vec<f64>,
    pub beta_list: Vec<f64>,
    pub precision: Precision,
    /// Largest relative deviation of the numeric `B` from an affine law in `nu`.
    pub nu_linearity_residual: f64,
    /// Largest relative imaginary part met in the invariants.
    pub max_imag_rel: f64,
    pub pass: bool,
}

struct SampleResult {
    residuals: Vec<f64>,
    linearity: f64,
    imag: f64,
}

pub fn verify_tables(
    op: &AlgebraicOperator,
    oracle: &Oracle,
    cfg: &VerifyConfig,
    exec: Execution,
) -> Result<VerificationReport, OracleError> {
    let sampler = Sampler::new(cfg.seed).with_box(cfg.box_lo, cfg.box_hi);
    let ids = EntryId::all(op.rank());
    let mut jobs = Vec::new();
    for (bi, &beta) in cfg.beta_list.iter().enumerate() {
        for s in 0..cfg.samples {
            jobs.push((bi, s, beta));
        }
    }
    let results: Vec<Result<SampleResult, OracleError>> = exec.map(&jobs, |&(bi, s, beta)| {
        let y = sampler.clone().with_beta(beta).sample(oracle, s + bi * cfg.samples)?;
        match cfg.precision {
            Precision::Double => sample_residuals::<f64>(op, oracle, &ids, &y, beta, &cfg.nu_list),
            Precision::High => sample_residuals::<Hp>(op, oracle, &ids, &y, beta, &cfg.nu_list),
        }
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut entries = Vec::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        let (worst_sample, max) = results
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.residuals[k]))
            .fold((0, 0.0f64), |acc, (i, v)| if v > acc.1 || v.is_nan() { (i, v) } else { acc });
        entries.push(EntryResidual {
            entry: id.to_string(),
            max_rel_residual: max,
            pass: max < cfg.tol,
            samples: results.len(),
            worst_sample,
        });
    }
    let nu_linearity_residual = results.iter().map(|r| r.linearity).fold(0.0, f64::max);
    let max_imag_rel = results.iter().map(|r| r.imag).fold(0.0, f64::max);
    let failing: Vec<String> = entries.iter().filter(|e| !e.pass).map(|e| e.entry.clone()).collect();
    Ok(VerificationReport {
        pass: failing.is_empty(),
        failing,
        entries,
        samples: cfg.samples,
        seed: cfg.seed,
        tol: cfg.tol,
        nu_list: cfg.nu_list.clone(),
        beta_list: cfg.beta_list.clone(),
        precision: cfg.precision,
        nu_linearity_residual,
        max_imag_rel,
    })
}

/// Relative scale for entry residuals: `sqrt(A_ii A_jj)` bounds `|A_ij|`
/// for the Gram-type matrix; `B` is scaled by the size of its two parts.
pub(super) fn entry_scale<S: Real>(num: &OracleOperator<S>, id: EntryId, nu: &S) -> S {
    let tiny = S::from_f64(1e-300);
    match id {
        EntryId::A(i, j) => (num.a[i][i].clone() * num.a[j][j].clone()).abs().sqrt() + tiny,
        EntryId::B(i) => num.b0[i].abs() + (nu.clone() * num.b1[i].clone()).abs() + tiny,
    }
}

fn sample_residuals<S: Real>(
    op: &AlgebraicOperator,
    oracle: &Oracle,
    ids: &[EntryId],
    y: &[f64],
    beta: f64,
    nus: &[f64],
) -> Result<SampleResult, OracleError> {
    let ys: Vec<S> = y.iter().map(|v| S::from_f64(*v)).collect();
    let frame = oracle.frame(&ys, &S::from_f64(beta))?;
    let num = oracle.operator_parts(&frame, &S::one());
    let nus_s: Vec<S> = nus.iter().map(|v| S::from_f64(*v)).collect();
    if !frame.tau_im.is_empty() {
        return Ok(complex_residuals(op, oracle, ids, &frame, &nus_s));
    }
    let eval = |p: &MultiPoly| p.evaluate_parts(&frame.tau).expect("rank checked on load");
    let mut residuals = Vec::with_capacity(ids.len());
    for &id in ids {
        let (p0, p1) = eval(op.entry(id));
        let mut worst = 0.0f64;
        match id {
            EntryId::A(i, j) => {
                let tab = p0 + p1 * S::zero();
                let r = (tab - num.a[i][j].clone()).abs() / entry_scale(&num, id, &S::zero());
                worst = worst.max(r.to_f64());
            }
            EntryId::B(i) => {
                for nu in &nus_s {
                    let tab = p0.clone() + p1.clone() * nu.clone();
                    let val = num.b0[i].clone() + nu.clone() * num.b1[i].clone();
                    let r = (tab - val).abs() / entry_scale(&num, id, nu);
                    let r = r.to_f64();
                    worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
                }
            }
        }
        residuals.push(worst);
    }
    Ok(SampleResult { residuals, linearity: nu_linearity(oracle, &frame, nus), imag: frame.imag_rel })
}

/// Residuals for systems whose invariants are complex; moduli replace
/// absolute values.
fn complex_residuals<S: Real>(
    op: &AlgebraicOperator,
    oracle: &Oracle,
    ids: &[EntryId],
    frame: &super::NumericFrame<S>,
    nus: &[S],
) -> SampleResult {
    let re = oracle.operator_parts(frame, &S::one());
    let im = oracle.operator_parts_im(frame, &S::one());
    let modulus = |x: &S, y: &S| (x.clone() * x.clone() + y.clone() * y.clone()).sqrt();
    let tiny = S::from_f64(1e-300);
    let mut residuals = Vec::with_capacity(ids.len());
    for &id in ids {
        let ((p0r, p0i), (p1r, p1i)) =
            op.entry(id).evaluate_parts_complex(&frame.tau, &frame.tau_im).expect("rank checked on load");
        let r = match id {
            EntryId::A(i, j) => {
                let scale =
                    (modulus(&re.a[i][i], &im.a[i][i]) * modulus(&re.a[j][j], &im.a[j][j])).sqrt() + tiny.clone();
                (modulus(&(p0r - re.a[i][j].clone()), &(p0i - im.a[i][j].clone())) / scale).to_f64()
            }
            EntryId::B(i) => {
                let mut worst = 0.0f64;
                for nu in nus {
                    let tr = p0r.clone() + p1r.clone() * nu.clone() - re.b0[i].clone() - nu.clone() * re.b1[i].clone();
                    let ti = p0i.clone() + p1i.clone() * nu.clone() - im.b0[i].clone() - nu.clone() * im.b1[i].clone();
                    let scale = modulus(&re.b0[i], &im.b0[i])
                        + (nu.clone() * modulus(&re.b1[i], &im.b1[i])).abs()
                        + tiny.clone();
                    let r = (modulus(&tr, &ti) / scale).to_f64();
                    worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
                }
                worst
            }
        };
        residuals.push(r);
    }
    SampleResult { residuals, linearity: 0.0, imag: 0.0 }
}

/// Recomputes `B` at each coupling with the coupling folded into the ground
/// state gradient and measures the deviation from the affine fit through
/// the first two couplings.
fn nu_linearity<S: Real>(oracle: &Oracle, frame: &super::NumericFrame<S>, nus: &[f64]) -> f64 {
    if nus.len() < 3 {
        return 0.0;
    }
    let per_nu: Vec<Vec<S>> = nus
        .iter()
        .map(|&nu| {
            let mut f = frame.clone();
            for g in f.grad_logpsi.iter_mut() {
                *g = g.clone() * S::from_f64(nu);
            }
            let parts = oracle.operator_parts(&f, &S::one());
            parts.b0.into_iter().zip(parts.b1).map(|(a, b)| a + b).collect()
        })
        .collect();
    let (n0, n1) = (S::from_f64(nus[0]), S::from_f64(nus[1]));
    let mut worst = 0.0f64;
    for i in 0..per_nu[0].len() {
        let slope = (per_nu[1][i].clone() - per_nu[0][i].clone()) / (n1.clone() - n0.clone());
        for (vals, &nu) in per_nu.iter().zip(nus).skip(2) {
            let pred = per_nu[0][i].clone() + slope.clone() * (S::from_f64(nu) - n0.clone());
            let scale = vals[i].abs() + per_nu[0][i].abs() + S::from_f64(1e-300);
            worst = worst.max(((vals[i].clone() - pred).abs() / scale).to_f64());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::{Monomial, NuLinear};
    use crate::operator::e7_operator;
    use crate::rootsys::{int, RootSystem, SystemKind};

    fn oracle() -> Oracle {
        Oracle::new(&RootSystem::build(SystemKind::E7).unwrap())
    }

    #[test]
    fn a11_sabotage_is_detected() {
        let o = oracle();
        let op = e7_operator().unwrap();
        let cfg = VerifyConfig { samples: 4, ..Default::default() };
        let base = verify_tables(&op, &o, &cfg, Execution::default()).unwrap();
        let mut a11 = op.a(0, 0).clone();
        a11.add_term(Monomial::var(7, 1), NuLinear::constant(int(1)));
        let bad = op.with_entry(EntryId::A(0, 0), a11);
        let rep = verify_tables(&bad, &o, &cfg, Execution::default()).unwrap();
        let newly: Vec<_> = rep.failing.iter().filter(|e| !base.failing.contains(e)).collect();
        assert_eq!(newly, vec!["A11"]);
        let r = rep.entries.iter().find(|e| e.entry == "A11").unwrap();
        assert!(r.max_rel_residual > 1e-2);
    }

    #[test]
    fn corrected_tables_pass_in_high_precision() {
        let o = oracle();
        let op = crate::operator::e7_operator_corrected().unwrap();
        let cfg = VerifyConfig { samples: 2, precision: Precision::High, tol: 1e-30, ..Default::default() };
        let rep = verify_tables(&op, &o, &cfg, Execution::default()).unwrap();
        assert!(rep.pass, "{:?}", rep.failing);
        let printed = verify_tables(&e7_operator().unwrap(), &o, &cfg, Execution::default()).unwrap();
        let want: Vec<String> =
            ["A17", "B1", "B2", "B3", "B4", "B5", "B6", "B7"].iter().map(|s| s.to_string()).collect();
        assert_eq!(printed.failing, want);
    }

    #[test]
    fn report_is_reproducible() {
        let o = oracle();
        let op = e7_operator().unwrap();
        let cfg = VerifyConfig { samples: 3, ..Default::default() };
        let a = serde_json::to_string(&verify_tables(&op, &o, &cfg, Execution::Parallel).unwrap()).unwrap();
        let b = serde_json::to_string(&verify_tables(&op, &o, &cfg, Execution::Sequential).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
