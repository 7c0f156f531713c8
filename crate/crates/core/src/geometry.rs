//! Curvature of the metric defined by the operator's second-order part.
//!
//! `A_ij(tau)` is the contravariant metric, `g = A^-1` the covariant one.
//! Derivatives of `A` are exact polynomial derivatives; only the inversion
//! and the assembly of the curvature tensor are floating point.

use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::exactpoly::{MultiPoly, PolyError};
use crate::exec::Execution;
use crate::linalg::{LinalgError, Mat};
use crate::numeric::Hp;
use crate::numeric::Real;
use crate::operator::AlgebraicOperator;
use crate::oracle::{Oracle, OracleError, Precision, Sampler};
use crate::rootsys::Rational;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("metric is singular at this point: {0}")]
    Singular(#[from] LinalgError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("metric inverse check failed: |A A^-1 - I| = {0:e}")]
    Inverse(f64),
}

/// `A` together with its first and second exact partial derivatives, in
/// coordinates `tau_k / s_k`.
pub struct MetricModel {
    rank: usize,
    scales: Vec<Rational>,
    a: Vec<Vec<MultiPoly>>,
    /// `da[k][i][j] = d A_ij / d tau_k`.
    da: Vec<Vec<Vec<MultiPoly>>>,
    /// `dda[l][k][i][j]`, `l <= k` stored for all pairs.
    dda: Vec<Vec<Vec<Vec<MultiPoly>>>>,
}

impl MetricModel {
    pub fn new(op: &AlgebraicOperator) -> Result<Self, PolyError> {
        Self::with_scales(op, vec![Rational::one(); op.rank()])
    }

    /// Curvature is measured in `tau_k / |O_k|`, which keeps all
    /// coordinates of order one.
    pub fn orbit_normalized(op: &AlgebraicOperator, orbit_sizes: &[usize]) -> Result<Self, PolyError> {
        Self::with_scales(op, orbit_sizes.iter().map(|&s| Rational::from_integer((s as i64).into())).collect())
    }

    pub fn with_scales(op: &AlgebraicOperator, scales: Vec<Rational>) -> Result<Self, PolyError> {
        let r = op.rank();
        let images: Vec<MultiPoly> = (0..r).map(|k| MultiPoly::var(r, k).scale(&scales[k])).collect();
        let mut a = vec![vec![MultiPoly::zero(r); r]; r];
        for i in 0..r {
            for j in i..r {
                let p = op.a(i, j).nu_parts().0.substitute(&images)?;
                let p = p.scale(&(Rational::one() / (&scales[i] * &scales[j])));
                a[i][j] = p.clone();
                a[j][i] = p;
            }
        }
        let deriv = |m: &Vec<Vec<MultiPoly>>, k: usize| -> Result<Vec<Vec<MultiPoly>>, PolyError> {
            m.iter().map(|row| row.iter().map(|p| p.partial_derivative(k)).collect()).collect()
        };
        let da: Vec<Vec<Vec<MultiPoly>>> = (0..r).map(|k| deriv(&a, k)).collect::<Result<_, _>>()?;
        let dda = (0..r)
            .map(|l| (0..r).map(|k| deriv(&da[k], l)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        Ok(MetricModel { rank: r, scales, a, da, dda })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Model coordinates of an invariant point.
    pub fn coords<S: Real>(&self, tau: &[S]) -> Vec<S> {
        tau.iter().zip(&self.scales).map(|(t, s)| t.clone() / S::from_rational(s)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct MetricFrame<S> {
    pub tau: Vec<S>,
    pub a: Mat<S>,
    pub a_inv: Mat<S>,
    pub condition: f64,
    /// `max |A A^-1 - I|`.
    pub inverse_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub condition: f64,
    /// `max |R^i_jkl| / (1 + max |Gamma|^2)`.
    pub riemann_max_normalized: f64,
    pub riemann_max: f64,
    pub christoffel_max: f64,
    /// First Bianchi identity, normalized the same way.
    pub bianchi_max_normalized: f64,
    /// Same ratio in a frame orthonormal at the point; `NaN` if `A` is not
    /// positive definite there.
    pub frame_normalized: f64,
}

fn eval_mat<S: Real>(m: &[Vec<MultiPoly>], tau: &[S]) -> Result<Mat<S>, PolyError> {
    let r = m.len();
    let mut out = Mat::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let v = m[i][j].evaluate_parts(tau)?.0;
            out.set(i, j, v.clone());
            out.set(j, i, v);
        }
    }
    Ok(out)
}

/// Metric at an invariant point `tau`, in model coordinates.
pub fn metric_at<S: Real>(model: &MetricModel, tau: &[S]) -> Result<MetricFrame<S>, GeometryError> {
    let x = model.coords(tau);
    let a = eval_mat(&model.a, &x)?;
    let a_inv = a.inverse_equilibrated()?;
    let prod = a.matmul(&a_inv);
    let mut err = 0.0f64;
    for i in 0..model.rank {
        for j in 0..model.rank {
            let id = if i == j { S::one() } else { S::zero() };
            err = err.max((prod.get(i, j).clone() - id).abs().to_f64());
        }
    }
    let tol = if S::is_high_precision() { 1e-40 } else { 1e-10 };
    let condition = a.condition_inf(&a_inv);
    if err > tol * condition.max(1.0) {
        return Err(GeometryError::Inverse(err));
    }
    Ok(MetricFrame { tau: x, a, a_inv, condition, inverse_error: err })
}

fn neg_sandwich<S: Real>(g: &Mat<S>, m: &Mat<S>) -> Mat<S> {
    let p = g.matmul(m).matmul(g);
    Mat { rows: p.rows, cols: p.cols, data: p.data.into_iter().map(|x| -x).collect() }
}

pub fn riemann_at<S: Real>(model: &MetricModel, tau: &[S]) -> Result<CurvatureReport, GeometryError> {
    let n = model.rank;
    let frame = metric_at(model, tau)?;
    let x = &frame.tau;
    let g = &frame.a_inv;
    let ainv = &frame.a;
    let da: Vec<Mat<S>> = model.da.iter().map(|m| eval_mat(m, x)).collect::<Result<_, _>>()?;
    // dg[k] = -g dA_k g
    let dg: Vec<Mat<S>> = da.iter().map(|m| neg_sandwich(g, m)).collect();
    // ddg[l][k] = -(dg_l) dA_k g - g ddA_lk g - g dA_k (dg_l)
    let mut ddg: Vec<Vec<Mat<S>>> = Vec::with_capacity(n);
    for l in 0..n {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let dda = eval_mat(&model.dda[l][k], x)?;
            let mut acc = neg_sandwich(g, &dda);
            let t1 = dg[l].matmul(&da[k]).matmul(g);
            let t3 = g.matmul(&da[k]).matmul(&dg[l]);
            for ((a, x), y) in acc.data.iter_mut().zip(t1.data).zip(t3.data) {
                *a = a.clone() - x - y;
            }
            row.push(acc);
        }
        ddg.push(row);
    }
    let half = S::from_f64(0.5);
    // Gamma_{k i j} (first kind) and its derivative.
    let gam1 = |k: usize, i: usize, j: usize| -> S {
        half.clone() * (dg[i].get(j, k).clone() + dg[j].get(i, k).clone() - dg[k].get(i, j).clone())
    };
    let dgam1 = |l: usize, k: usize, i: usize, j: usize| -> S {
        half.clone() * (ddg[l][i].get(j, k).clone() + ddg[l][j].get(i, k).clone() - ddg[l][k].get(i, j).clone())
    };
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let mut g1 = vec![S::zero(); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                g1[idx(k, i, j)] = gam1(k, i, j);
            }
        }
    }
    // Gamma^m_ij = A_mk Gamma_kij
    let mut g2 = vec![S::zero(); n * n * n];
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = S::zero();
                for k in 0..n {
                    acc += ainv.get(m, k).clone() * g1[idx(k, i, j)].clone();
                }
                g2[idx(m, i, j)] = acc;
            }
        }
    }
    // dG2[l][m][i][j] = dA_mk/dl Gamma_kij + A_mk dGamma_kij/dl
    let mut dg2 = vec![S::zero(); n * n * n * n];
    for l in 0..n {
        let mut dg1 = vec![S::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = dgam1(l, k, i, j);
                    dg1[idx(k, j, i)] = v.clone();
                    dg1[idx(k, i, j)] = v;
                }
            }
        }
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = S::zero();
                    for k in 0..n {
                        acc += da[l].get(m, k).clone() * g1[idx(k, i, j)].clone()
                            + ainv.get(m, k).clone() * dg1[idx(k, i, j)].clone();
                    }
                    dg2[l * n * n * n + idx(m, i, j)] = acc;
                }
            }
        }
    }
    let d2 = |l: usize, m: usize, i: usize, j: usize| dg2[l * n * n * n + idx(m, i, j)].clone();
    // R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj
    let mut r = vec![S::zero(); n * n * n * n];
    let ridx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = d2(k, i, l, j) - d2(l, i, k, j);
                    for m in 0..n {
                        acc += g2[idx(i, k, m)].clone() * g2[idx(m, l, j)].clone()
                            - g2[idx(i, l, m)].clone() * g2[idx(m, k, j)].clone();
                    }
                    r[ridx(i, j, k, l)] = acc;
                }
            }
        }
    }
    let gmax = g2.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
    let rmax = r.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
    let mut bianchi = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let s = r[ridx(i, j, k, l)].clone() + r[ridx(i, k, l, j)].clone() + r[ridx(i, l, j, k)].clone();
                    bianchi = bianchi.max(s.abs().to_f64());
                }
            }
        }
    }
    let norm = 1.0 + gmax * gmax;
    let (r_on, g_on) = match cholesky(&frame.a) {
        Some(l) => {
            let m = lower_inverse(&l);
            let mut gt = contract_axis(&g2, n, 3, 0, &m, false);
            gt = contract_axis(&gt, n, 3, 1, &l, true);
            gt = contract_axis(&gt, n, 3, 2, &l, true);
            let mut rt = contract_axis(&r, n, 4, 0, &m, false);
            for ax in 1..4 {
                rt = contract_axis(&rt, n, 4, ax, &l, true);
            }
            let f = |v: &[S]| v.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
            (f(&rt), f(&gt))
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(CurvatureReport {
        condition: frame.condition,
        riemann_max_normalized: rmax / norm,
        riemann_max: rmax,
        christoffel_max: gmax,
        bianchi_max_normalized: bianchi / norm,
        frame_normalized: r_on / (1.0 + g_on * g_on),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessConfig {
    pub points: usize,
    pub seed: u64,
    /// Half-width of the offset box around the principal point.
    pub radius: f64,
    pub beta: f64,
    pub precision: Precision,
    pub tol: f64,
}

impl Default for FlatnessConfig {
    fn default() -> Self {
        FlatnessConfig { points: 10, seed: 42, radius: 0.1, beta: 1.0, precision: Precision::Double, tol: 1e-6 }
    }
}

impl FlatnessConfig {
    pub fn high_precision() -> Self {
        FlatnessConfig { precision: Precision::High, tol: 1e-30, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointCurvature {
    pub point_seed: u64,
    pub point_index: usize,
    pub y: Vec<f64>,
    pub precision: Precision,
    #[serde(flatten)]
    pub curvature: CurvatureReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessReport {
    pub config: FlatnessConfig,
    pub points: Vec<PointCurvature>,
    pub riemann_max_normalized: f64,
    pub bianchi_max_normalized: f64,
    pub pass: bool,
}

/// Curvature at `cfg.points` images `tau(y)`, with `y` drawn around the
/// principal point where the invariant map is best conditioned.
pub fn flatness_check(
    op: &AlgebraicOperator,
    oracle: &Oracle,
    cfg: &FlatnessConfig,
    exec: Execution,
) -> Result<FlatnessReport, GeometryError> {
    let model = MetricModel::orbit_normalized(op, &oracle.orbit_sizes())?;
    let sampler = Sampler::new(cfg.seed)
        .with_box(-cfg.radius, cfg.radius)
        .with_beta(cfg.beta)
        .with_center(oracle.principal_point(cfg.beta));
    let results = exec.map_range(cfg.points, |i| -> Result<PointCurvature, GeometryError> {
        let y = sampler.sample(oracle, i)?;
        let curvature = match cfg.precision {
            Precision::Double => riemann_at(&model, &oracle.tau(&y, &cfg.beta)?)?,
            Precision::High => {
                let yh: Vec<Hp> = y.iter().map(|v| Hp::from_f64(*v)).collect();
                riemann_at(&model, &oracle.tau(&yh, &Hp::from_f64(cfg.beta))?)?
            }
        };
        Ok(PointCurvature { point_seed: cfg.seed, point_index: i, y, precision: cfg.precision, curvature })
    });
    let points = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max = |f: fn(&CurvatureReport) -> f64| {
        points.iter().map(|p| f(&p.curvature)).fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) })
    };
    let riemann_max_normalized = max(|c| c.riemann_max_normalized);
    let bianchi_max_normalized = max(|c| c.bianchi_max_normalized);
    Ok(FlatnessReport {
        pass: riemann_max_normalized < cfg.tol,
        config: cfg.clone(),
        points,
        riemann_max_normalized,
        bianchi_max_normalized,
    })
}

/// `A = L L^T`, `None` unless positive definite.
fn cholesky<S: Real>(a: &Mat<S>) -> Option<Mat<S>> {
    let n = a.rows;
    let mut l = Mat::<S>::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j).clone();
        for k in 0..j {
            d -= l.get(j, k).clone() * l.get(j, k).clone();
        }
        if d.to_f64() <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l.set(j, j, d.clone());
        for i in j + 1..n {
            let mut v = a.get(i, j).clone();
            for k in 0..j {
                v -= l.get(i, k).clone() * l.get(j, k).clone();
            }
            l.set(i, j, v / d.clone());
        }
    }
    Some(l)
}

fn lower_inverse<S: Real>(l: &Mat<S>) -> Mat<S> {
    let n = l.rows;
    let mut m = Mat::<S>::zeros(n, n);
    for c in 0..n {
        for i in c..n {
            let mut v = if i == c { S::one() } else { S::zero() };
            for k in c..i {
                v -= l.get(i, k).clone() * m.get(k, c).clone();
            }
            m.set(i, c, v / l.get(i, i).clone());
        }
    }
    m
}

/// Contracts one axis of a flat `n^order` tensor: `T'[.., i, ..] = sum_a P[i][a] T[.., a, ..]`,
/// or `P[a][i]` when `transpose`.
fn contract_axis<S: Real>(t: &[S], n: usize, order: usize, axis: usize, p: &Mat<S>, transpose: bool) -> Vec<S> {
    let inner = n.pow((order - 1 - axis) as u32);
    let outer = n.pow(axis as u32);
    let mut out = vec![S::zero(); t.len()];
    for o in 0..outer {
        for i in 0..n {
            for r in 0..inner {
                let mut acc = S::zero();
                for a in 0..n {
                    let c = if transpose { p.get(a, i) } else { p.get(i, a) };
                    acc += c.clone() * t[(o * n + a) * inner + r].clone();
                }
                out[(o * n + i) * inner + r] = acc;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::{CharVector, Monomial, NuLinear};
    use crate::rootsys::{int, rat, RootSystem, SystemKind};

    fn a1_operator() -> AlgebraicOperator {
        let mut a = MultiPoly::constant(1, int(2));
        a.add_term(Monomial(vec![2]), NuLinear::constant(rat(-1, 2)));
        let b = MultiPoly::term(1, Monomial(vec![1]), NuLinear::new(rat(-1, 2), int(-1)));
        AlgebraicOperator::new(SystemKind::A1, CharVector(vec![1]), "derived", vec![vec![a]], vec![b]).unwrap()
    }

    #[test]
    fn a1_metric_and_curvature() {
        let model = MetricModel::new(&a1_operator()).unwrap();
        let f = metric_at(&model, &[1.0]).unwrap();
        assert_eq!(*f.a.get(0, 0), 1.5);
        let r = riemann_at(&model, &[1.0]).unwrap();
        assert_eq!(r.riemann_max, 0.0);
    }

    #[test]
    fn origin_image_is_singular() {
        let op = crate::operator::e7_operator().unwrap();
        let model = MetricModel::new(&op).unwrap();
        let tau0 = [56.0, 126.0, 576.0, 756.0, 2016.0, 4032.0, 10080.0];
        assert!(matches!(metric_at(&model, &tau0), Err(GeometryError::Singular(_))));
    }

    #[test]
    fn a2_metric_is_flat() {
        // A2 metric from the oracle's closed form is checked in the derive
        // module; here a polynomial flat metric in two variables: the
        // Euclidean metric in polar-like coordinates u = x^2 + y^2, v = x.
        // A = [[4u, 2v], [2v, 1]].
        let u = MultiPoly::var(2, 0);
        let v = MultiPoly::var(2, 1);
        let a = vec![vec![u.scale(&int(4)), v.scale(&int(2))], vec![v.scale(&int(2)), MultiPoly::constant(2, int(1))]];
        let b = vec![MultiPoly::zero(2), MultiPoly::zero(2)];
        let op = AlgebraicOperator::new(SystemKind::A2, CharVector(vec![1, 1]), "test", a, b).unwrap();
        let model = MetricModel::new(&op).unwrap();
        let r = riemann_at(&model, &[2.0, 0.7]).unwrap();
        assert!(r.riemann_max_normalized < 1e-12, "{r:?}");
        let r = riemann_at(&model, &[Hp::from_f64(2.0), Hp::from_f64(0.7)]).unwrap();
        assert!(r.riemann_max_normalized < 1e-60, "{r:?}");
        // A non-flat perturbation: the round 2-sphere metric in a chart.
        let a2 = vec![
            vec![&MultiPoly::constant(2, int(1)) - &u.try_mul(&u).unwrap(), -&u.try_mul(&v).unwrap()],
            vec![-&u.try_mul(&v).unwrap(), &MultiPoly::constant(2, int(1)) - &v.try_mul(&v).unwrap()],
        ];
        let op2 = AlgebraicOperator::new(
            SystemKind::A2,
            CharVector(vec![1, 1]),
            "test",
            a2,
            vec![MultiPoly::zero(2), MultiPoly::zero(2)],
        )
        .unwrap();
        let r2 = riemann_at(&MetricModel::new(&op2).unwrap(), &[0.3, 0.2]).unwrap();
        assert!(r2.riemann_max_normalized > 1e-2, "{r2:?}");
        assert!(r2.bianchi_max_normalized < 1e-12);
    }

    #[test]
    fn corrected_e7_metric_is_flat_and_fault_is_not() {
        let o = Oracle::new(&RootSystem::build(SystemKind::E7).unwrap());
        let co = crate::operator::e7_operator_corrected().unwrap();
        let cfg = FlatnessConfig { points: 3, ..Default::default() };
        let rep = flatness_check(&co, &o, &cfg, Execution::default()).unwrap();
        assert!(rep.pass, "{}", rep.riemann_max_normalized);
        assert!(rep.bianchi_max_normalized < 1e-6);
        let m = Monomial(vec![2, 0, 0, 0, 0, 0, 0]);
        let mut a11 = co.a(0, 0).clone();
        a11.add_term(m, NuLinear::constant(rat(-1, 2)));
        let bad = co.with_entry(crate::operator::EntryId::A(0, 0), a11);
        let rep = flatness_check(&bad, &o, &cfg, Execution::default()).unwrap();
        assert!(rep.riemann_max_normalized > 1e-3);
    }
}
