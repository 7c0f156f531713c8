//! Numeric chain-rule oracle: invariants, their derivatives, the ground
//! state and the gauge-rotated operator evaluated directly in the physical
//! coordinates.

mod fit;
mod ground;
mod verify;

pub use fit::{
    build_errata, detect_coupling_rescale, fit_entries, fit_entry, CouplingRescale, FitConfig, FitOutcome, FitReport,
};
pub use ground::{verify_ground_state, CouplingResidual, GroundStateConfig, GroundStateReport};
pub use verify::{verify_tables, EntryResidual, Precision, VerificationReport, VerifyConfig};

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::Real;
use crate::rootsys::{Rational, RootSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("clearance violated: |sin(beta (alpha.y)/2)| = {value:e} for root #{root}")]
    Clearance { root: usize, value: f64 },
    #[error("imaginary part of tau_{index} did not cancel (relative {relative:e})")]
    Cancellation { index: usize, relative: f64 },
    #[error("no clearance sample found after {0} attempts")]
    Sampling(usize),
    #[error("point has dimension {got}, expected {want}")]
    Dimension { got: usize, want: usize },
    #[error("invariants of this system are complex; use the complex evaluation")]
    ComplexInvariants,
    #[error("unknown entry {0}")]
    Entry(String),
}

/// Minimal `|sin(beta (alpha.y) / 2)|` over positive roots.
pub const CLEARANCE: f64 = 1e-3;

/// Relative tolerance on the cancelled sine parts of the invariants.
const CANCELLATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct SamplePoint {
    pub y: Vec<f64>,
    pub beta: f64,
    pub nu: f64,
}

impl SamplePoint {
    /// `g = nu (nu - 1)`.
    pub fn coupling(&self) -> f64 {
        self.nu * (self.nu - 1.0)
    }
}

/// Deterministic clearance sampler: sample `i` depends only on `(seed, i)`.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    pub beta: f64,
    /// When set, samples are `center + offset` with the offset drawn from the box.
    pub center: Option<Vec<f64>>,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { seed, lo: 0.05, hi: 0.35, beta: 1.0, center: None }
    }

    pub fn with_box(mut self, lo: f64, hi: f64) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        self.center = Some(center);
        self
    }

    pub fn sample(&self, oracle: &Oracle, index: usize) -> Result<Vec<f64>, OracleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        const TRIES: usize = 10_000;
        for _ in 0..TRIES {
            let mut y: Vec<f64> = (0..oracle.phys_dim()).map(|_| rng.gen_range(self.lo..self.hi)).collect();
            if let Some(c) = &self.center {
                for (v, c) in y.iter_mut().zip(c) {
                    *v += c;
                }
            }
            if oracle.clearance(&y, self.beta) > CLEARANCE {
                return Ok(y);
            }
        }
        Err(OracleError::Sampling(TRIES))
    }

    pub fn samples(&self, oracle: &Oracle, count: usize) -> Result<Vec<Vec<f64>>, OracleError> {
        (0..count).map(|i| self.sample(oracle, i)).collect()
    }
}

struct OrbitTable {
    size: usize,
    d2: Rational,
    /// Flattened integer exponents `D c_k` for each element.
    exps: Vec<i32>,
}

/// Precomputed orbit and root data in physical coordinates.
pub struct Oracle {
    pub sys: RootSystem,
    /// Every fundamental orbit is closed under negation, so the invariants are real.
    real: bool,
    den: i64,
    dim: usize,
    max_exp: i32,
    orbits: Vec<OrbitTable>,
    /// Physical coefficients of the positive roots.
    roots: Vec<Vec<Rational>>,
    roots_f64: Vec<Vec<f64>>,
    root_norms: Vec<Rational>,
    metric: Vec<Rational>,
    rho_sq_over_nu_sq: Rational,
}

/// Invariants and their first derivatives at one point.
#[derive(Clone, Debug)]
pub struct NumericFrame<S> {
    pub tau: Vec<S>,
    /// `jac[i][k] = d tau_i / d y_k`.
    pub jac: Vec<Vec<S>>,
    /// `D tau_i` with `D = sum_k g_k d_k^2`.
    pub lap_tau: Vec<S>,
    /// `d_k log Psi_0 / nu`.
    pub grad_logpsi: Vec<S>,
    /// `D log Psi_0 / nu`.
    pub lap_logpsi: S,
    /// `sum_alpha |alpha|^2 csc^2(beta (alpha.y)/2)`.
    pub csc_sum: S,
    /// Imaginary parts of `tau`, `jac` and `lap_tau`; empty when the
    /// invariants are real.
    pub tau_im: Vec<S>,
    pub jac_im: Vec<Vec<S>>,
    pub lap_tau_im: Vec<S>,
    /// Largest relative imaginary part of the invariants (real systems only).
    pub imag_rel: f64,
    pub beta: S,
}

struct OrbitSums<S> {
    re: Vec<S>,
    im: Vec<S>,
    jac_re: Vec<Vec<S>>,
    jac_im: Vec<Vec<S>>,
    imag_rel: f64,
}

/// Gauge-rotated operator at one point, split into its `nu` components:
/// `B_i = b0_i + nu b1_i`.
#[derive(Clone, Debug)]
pub struct OracleOperator<S> {
    pub a: Vec<Vec<S>>,
    pub b0: Vec<S>,
    pub b1: Vec<S>,
}

impl Oracle {
    pub fn new(sys: &RootSystem) -> Self {
        let orbits = sys.fundamental_orbits();
        let metric = sys.metric_weights.clone();
        let dim = sys.phys_dim();
        let mut den = num_bigint::BigInt::from(1);
        let phys: Vec<Vec<Vec<Rational>>> =
            orbits.iter().map(|o| o.elements.iter().map(|w| sys.phys_coords(w)).collect()).collect();
        for c in phys.iter().flatten().flatten() {
            den = num_integer::Integer::lcm(&den, c.denom());
        }
        let den_r = Rational::from_integer(den.clone());
        let den = den.to_i64().expect("small denominator");
        let mut max_exp = 0;
        let tables = orbits
            .iter()
            .zip(&phys)
            .zip(&sys.weight_lengths_sq)
            .map(|((o, els), d2)| {
                let mut exps = Vec::with_capacity(o.size() * dim);
                for c in els {
                    for x in c {
                        let n = (x * &den_r).to_integer().to_i32().expect("small exponent");
                        max_exp = max_exp.max(n.abs());
                        exps.push(n);
                    }
                }
                OrbitTable { size: o.size(), d2: d2.clone(), exps }
            })
            .collect();
        let roots: Vec<Vec<Rational>> = sys.positive_roots.iter().map(|r| sys.phys_coords(r)).collect();
        let roots_f64 = roots.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()).collect();
        let root_norms = sys.positive_roots.iter().map(|r| sys.metric_norm_sq(r)).collect();
        let real = orbits.iter().all(|o| o.elements.iter().all(|w| o.contains(&-w)));
        Oracle {
            sys: sys.clone(),
            real,
            den,
            dim,
            max_exp,
            orbits: tables,
            roots,
            roots_f64,
            root_norms,
            metric,
            rho_sq_over_nu_sq: sys.deformed_weyl_vector().rho_sq_over_nu_sq,
        }
    }

    pub fn has_real_invariants(&self) -> bool {
        self.real
    }

    pub fn phys_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.orbits.len()
    }

    /// `y` with `beta (alpha_i . y) = 2 pi / h` for every simple root, `h` the
    /// Coxeter number; the Weyl denominator is largest there.
    pub fn principal_point(&self, beta: f64) -> Vec<f64> {
        let sys = &self.sys;
        let h = 2.0 * sys.positive_roots.len() as f64 / sys.rank() as f64;
        let mut rho_vee = vec![0.0; sys.ambient_dim];
        for r in &sys.positive_roots {
            let w = 1.0 / r.norm_sq().to_f64().unwrap_or(1.0);
            for (acc, x) in rho_vee.iter_mut().zip(r.to_f64()) {
                *acc += w * x;
            }
        }
        let k = 2.0 * std::f64::consts::PI / (h * beta);
        let amb: Vec<f64> = rho_vee.iter().map(|x| x * k).collect();
        sys.project_point(&amb)
    }

    pub fn orbit_sizes(&self) -> Vec<usize> {
        self.orbits.iter().map(|o| o.size).collect()
    }

    pub fn metric_f64(&self) -> Vec<f64> {
        self.metric.iter().map(|g| g.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// `min_alpha |sin(beta (alpha.y)/2)|`.
    pub fn clearance(&self, y: &[f64], beta: f64) -> f64 {
        self.roots_f64
            .iter()
            .map(|r| (0.5 * beta * r.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()).sin().abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `tau_a = sum_{w in Omega_a} cos(beta w.y)`; fails for complex invariants.
    pub fn tau<S: Real>(&self, y: &[S], beta: &S) -> Result<Vec<S>, OracleError> {
        if !self.real {
            return Err(OracleError::ComplexInvariants);
        }
        Ok(self.orbit_sums(y, beta, false)?.re)
    }

    /// Real and imaginary parts of `sum_{w in Omega_a} exp(i beta w.y)`.
    pub fn tau_complex<S: Real>(&self, y: &[S], beta: &S) -> Result<(Vec<S>, Vec<S>), OracleError> {
        let s = self.orbit_sums(y, beta, false)?;
        let im = if self.real { vec![S::zero(); s.re.len()] } else { s.im };
        Ok((s.re, im))
    }

    /// Powers `z_k^n = exp(i beta y_k n / D)` for `0 <= n <= max_exp`.
    fn phase_powers<S: Real>(&self, y: &[S], beta: &S) -> Vec<Vec<(S, S)>> {
        let d = S::from_i64(self.den);
        y.iter()
            .map(|yk| {
                let (s, c) = (beta.clone() * yk.clone() / d.clone()).sin_cos();
                let mut row = vec![(S::one(), S::zero())];
                for n in 1..=self.max_exp as usize {
                    let (pc, ps) = row[n - 1].clone();
                    row.push((pc.clone() * c.clone() - ps.clone() * s.clone(), pc * s.clone() + ps * c.clone()));
                }
                row
            })
            .collect()
    }

    /// Orbit sums, and when `grad` is set the bucketed sums giving the
    /// first derivatives.
    fn orbit_sums<S: Real>(&self, y: &[S], beta: &S, grad: bool) -> Result<OrbitSums<S>, OracleError> {
        if y.len() != self.dim {
            return Err(OracleError::Dimension { got: y.len(), want: self.dim });
        }
        let pw = self.phase_powers(y, beta);
        let width = 2 * self.max_exp as usize + 1;
        let off = self.max_exp;
        let cplx = !self.real;
        let mut out =
            OrbitSums { re: Vec::new(), im: Vec::new(), jac_re: Vec::new(), jac_im: Vec::new(), imag_rel: 0.0 };
        for (a, orb) in self.orbits.iter().enumerate() {
            let mut re = S::zero();
            let mut im = S::zero();
            let mut b_sin: Vec<Vec<S>> = if grad { vec![vec![S::zero(); width]; self.dim] } else { Vec::new() };
            let mut b_cos: Vec<Vec<S>> = if grad && cplx { vec![vec![S::zero(); width]; self.dim] } else { Vec::new() };
            for el in orb.exps.chunks_exact(self.dim) {
                let mut zr = S::one();
                let mut zi = S::zero();
                let mut first = true;
                for (k, &n) in el.iter().enumerate() {
                    if n == 0 {
                        continue;
                    }
                    let (c, s) = &pw[k][n.unsigned_abs() as usize];
                    let s = if n < 0 { -s.clone() } else { s.clone() };
                    if first {
                        zr = c.clone();
                        zi = s;
                        first = false;
                    } else {
                        let nr = zr.clone() * c.clone() - zi.clone() * s.clone();
                        zi = zr * s + zi * c.clone();
                        zr = nr;
                    }
                }
                if grad {
                    for (k, &n) in el.iter().enumerate() {
                        if n != 0 {
                            b_sin[k][(n + off) as usize] += zi.clone();
                            if cplx {
                                b_cos[k][(n + off) as usize] += zr.clone();
                            }
                        }
                    }
                }
                re += zr;
                im += zi;
            }
            if !cplx {
                let rel = im.abs().to_f64() / (orb.size as f64);
                out.imag_rel = out.imag_rel.max(rel);
                if rel > CANCELLATION_TOL {
                    return Err(OracleError::Cancellation { index: a + 1, relative: rel });
                }
            }
            if grad {
                // d/dy_k exp(i beta w.y) = i beta c_k exp(i beta w.y), c_k = n / D
                let f = beta.clone() / S::from_i64(self.den);
                let collapse = |b: Vec<Vec<S>>, sign: S| -> Vec<S> {
                    b.into_iter()
                        .map(|b| {
                            let mut acc = S::zero();
                            for (idx, v) in b.into_iter().enumerate() {
                                let n = idx as i64 - off as i64;
                                if n != 0 {
                                    acc += S::from_i64(n) * v;
                                }
                            }
                            sign.clone() * f.clone() * acc
                        })
                        .collect()
                };
                out.jac_re.push(collapse(b_sin, -S::one()));
                if cplx {
                    out.jac_im.push(collapse(b_cos, S::one()));
                }
            }
            out.re.push(re);
            if cplx {
                out.im.push(im);
            }
        }
        Ok(out)
    }

    pub fn frame<S: Real>(&self, y: &[S], beta: &S) -> Result<NumericFrame<S>, OracleError> {
        let sums = self.orbit_sums(y, beta, true)?;
        let (tau, jac, imag_rel) = (sums.re, sums.jac_re, sums.imag_rel);
        let b2 = beta.clone() * beta.clone();
        let lap = |t: &[S]| -> Vec<S> {
            t.iter().zip(&self.orbits).map(|(t, o)| -(b2.clone() * S::from_rational(&o.d2) * t.clone())).collect()
        };
        let lap_tau = lap(&tau);
        let lap_tau_im = lap(&sums.im);
        let half = beta.clone() / S::from_i64(2);
        let mut grad = vec![S::zero(); self.dim];
        let mut csc_sum = S::zero();
        for (i, (r, n2)) in self.roots.iter().zip(&self.root_norms).enumerate() {
            let mut ay = S::zero();
            for (c, yk) in r.iter().zip(y) {
                if !c.is_zero() {
                    ay += S::from_rational(c) * yk.clone();
                }
            }
            let (s, c) = (half.clone() * ay).sin_cos();
            let sv = s.abs().to_f64();
            if sv <= CLEARANCE {
                return Err(OracleError::Clearance { root: i, value: sv });
            }
            let cot = c / s.clone();
            for (g, rk) in grad.iter_mut().zip(r) {
                if !rk.is_zero() {
                    *g += half.clone() * S::from_rational(rk) * cot.clone();
                }
            }
            csc_sum += S::from_rational(n2) / (s.clone() * s);
        }
        let lap_logpsi = -(half.clone() * half * csc_sum.clone());
        Ok(NumericFrame {
            tau,
            jac,
            lap_tau,
            tau_im: sums.im,
            jac_im: sums.jac_im,
            lap_tau_im,
            grad_logpsi: grad,
            lap_logpsi,
            csc_sum,
            imag_rel,
            beta: beta.clone(),
        })
    }

    /// `A_ij = (1/beta^2) sum_k g_k J_ik J_jk`;
    /// `B_i = (1/beta^2) [D tau_i + 2 kappa nu sum_k g_k G_k J_ik]`.
    ///
    /// `kappa` is the exponent of the ground state in units of `nu`; the
    /// Hamiltonian's ground state has `kappa = 1`.
    pub fn operator_parts<S: Real>(&self, f: &NumericFrame<S>, kappa: &S) -> OracleOperator<S> {
        let r = self.rank();
        let g: Vec<S> = self.metric.iter().map(S::from_rational).collect();
        let inv_b2 = S::one() / (f.beta.clone() * f.beta.clone());
        let mut a = vec![vec![S::zero(); r]; r];
        for i in 0..r {
            for j in i..r {
                let mut acc = S::zero();
                for k in 0..self.dim {
                    acc += g[k].clone() * f.jac[i][k].clone() * f.jac[j][k].clone();
                    if !f.jac_im.is_empty() {
                        acc -= g[k].clone() * f.jac_im[i][k].clone() * f.jac_im[j][k].clone();
                    }
                }
                let v = acc * inv_b2.clone();
                a[j][i] = v.clone();
                a[i][j] = v;
            }
        }
        let two = S::from_i64(2);
        let mut b0 = Vec::with_capacity(r);
        let mut b1 = Vec::with_capacity(r);
        for i in 0..r {
            b0.push(f.lap_tau[i].clone() * inv_b2.clone());
            let mut acc = S::zero();
            for k in 0..self.dim {
                acc += g[k].clone() * f.grad_logpsi[k].clone() * f.jac[i][k].clone();
            }
            b1.push(two.clone() * kappa.clone() * acc * inv_b2.clone());
        }
        OracleOperator { a, b0, b1 }
    }

    /// Imaginary parts matching [`Oracle::operator_parts`]; zero for real
    /// invariants.
    pub fn operator_parts_im<S: Real>(&self, f: &NumericFrame<S>, kappa: &S) -> OracleOperator<S> {
        let r = self.rank();
        if f.jac_im.is_empty() {
            return OracleOperator { a: vec![vec![S::zero(); r]; r], b0: vec![S::zero(); r], b1: vec![S::zero(); r] };
        }
        let g: Vec<S> = self.metric.iter().map(S::from_rational).collect();
        let inv_b2 = S::one() / (f.beta.clone() * f.beta.clone());
        let mut a = vec![vec![S::zero(); r]; r];
        for i in 0..r {
            for j in i..r {
                let mut acc = S::zero();
                for k in 0..self.dim {
                    acc += g[k].clone()
                        * (f.jac[i][k].clone() * f.jac_im[j][k].clone() + f.jac_im[i][k].clone() * f.jac[j][k].clone());
                }
                let v = acc * inv_b2.clone();
                a[j][i] = v.clone();
                a[i][j] = v;
            }
        }
        let two = S::from_i64(2);
        let b0 = f.lap_tau_im.iter().map(|x| x.clone() * inv_b2.clone()).collect();
        let b1 = (0..r)
            .map(|i| {
                let mut acc = S::zero();
                for k in 0..self.dim {
                    acc += g[k].clone() * f.grad_logpsi[k].clone() * f.jac_im[i][k].clone();
                }
                two.clone() * kappa.clone() * acc * inv_b2.clone()
            })
            .collect();
        OracleOperator { a, b0, b1 }
    }

    pub fn chain_rule_oracle<S: Real>(
        &self,
        y: &[S],
        beta: &S,
    ) -> Result<(NumericFrame<S>, OracleOperator<S>), OracleError> {
        let f = self.frame(y, beta)?;
        let op = self.operator_parts(&f, &S::one());
        Ok((f, op))
    }

    /// `E_0 = (beta^2/8) rho^2`.
    pub fn ground_energy<S: Real>(&self, beta: &S, nu: &S) -> S {
        beta.clone() * beta.clone() * nu.clone() * nu.clone() * S::from_rational(&self.rho_sq_over_nu_sq)
            / S::from_i64(8)
    }

    /// `|(H Psi_0)/Psi_0 - E_0| / (E_0 + 1)`.
    pub fn ground_state_residual<S: Real>(&self, y: &[S], beta: &S, nu: &S) -> Result<f64, OracleError> {
        let f = self.frame(y, beta)?;
        let g: Vec<S> = self.metric.iter().map(S::from_rational).collect();
        let mut grad_sq = S::zero();
        for (gk, dk) in g.iter().zip(&f.grad_logpsi) {
            grad_sq += gk.clone() * dk.clone() * dk.clone();
        }
        let lap = nu.clone() * f.lap_logpsi.clone();
        let kinetic = -(lap + nu.clone() * nu.clone() * grad_sq) / S::from_i64(2);
        let coupling = nu.clone() * (nu.clone() - S::one());
        let potential = beta.clone() * beta.clone() / S::from_i64(8) * coupling * f.csc_sum.clone();
        let e0 = self.ground_energy(beta, nu);
        let res = (kinetic + potential - e0.clone()).abs() / (e0 + S::one());
        Ok(res.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Hp;
    use crate::rootsys::{reflect, SystemKind};

    fn e7() -> Oracle {
        Oracle::new(&RootSystem::build(SystemKind::E7).unwrap())
    }

    #[test]
    fn tau_at_origin_is_orbit_sizes() {
        let o = e7();
        let t = o.tau(&[0.0; 7], &1.0).unwrap();
        assert_eq!(t, vec![56.0, 126.0, 576.0, 756.0, 2016.0, 4032.0, 10080.0]);
    }

    #[test]
    fn a1_tau_by_hand() {
        let o = Oracle::new(&RootSystem::build(SystemKind::A1).unwrap());
        // w.x = (x1 - x2)/2 = pi/3
        let x = std::f64::consts::PI / 3.0;
        let t = o.tau(&[x, -x], &1.0).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn a1_closed_forms() {
        let o = Oracle::new(&RootSystem::build(SystemKind::A1).unwrap());
        for (y, beta) in [([0.3, -0.4], 1.0), ([0.9, 0.2], 1.7)] {
            let (f, op) = o.chain_rule_oracle(&y, &beta).unwrap();
            let t = f.tau[0];
            assert!((op.a[0][0] - (2.0 - t * t / 2.0)).abs() < 1e-13);
            assert!((op.b0[0] + 0.5 * t).abs() < 1e-13);
            assert!((op.b1[0] + t).abs() < 1e-13);
        }
    }

    #[test]
    fn ground_state_double_and_high_precision() {
        let o = e7();
        let y = Sampler::new(7).sample(&o, 0).unwrap();
        assert!(o.ground_state_residual(&y, &1.0, &1.7).unwrap() < 1e-8);
        assert!(o.ground_state_residual(&y, &1.0, &0.0).unwrap() == 0.0);
        let yh: Vec<Hp> = y.iter().map(|v| Hp::from_f64(*v)).collect();
        let r = o.ground_state_residual(&yh, &Hp::one(), &Hp::parse("1.7")).unwrap();
        assert!(r < 1e-40, "{r:e}");
    }

    #[test]
    fn weyl_invariance_of_tau() {
        let o = e7();
        let sys = &o.sys;
        let y = Sampler::new(3).sample(&o, 0).unwrap();
        let x = sys.embed_point(&y);
        for s in &sys.simple_roots {
            let sf = s.to_f64();
            let d: f64 = sf.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() * 2.0 / 2.0;
            let xr: Vec<f64> = x.iter().zip(&sf).map(|(a, b)| a - d * b).collect();
            let yr = sys.project_point(&xr);
            let t0 = o.tau(&y, &1.0).unwrap();
            let t1 = o.tau(&yr, &1.0).unwrap();
            for (a, b) in t0.iter().zip(&t1) {
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            }
        }
        // keep the exact reflection in view: simple roots have length^2 2
        assert_eq!(reflect(&sys.simple_roots[0], &sys.simple_roots[0]).unwrap(), -&sys.simple_roots[0]);
    }

    #[test]
    fn oracle_a_is_symmetric_and_imag_cancels() {
        let o = e7();
        let y = Sampler::new(11).sample(&o, 2).unwrap();
        let (f, op) = o.chain_rule_oracle(&y, &1.0).unwrap();
        assert!(f.imag_rel < 1e-12);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(op.a[i][j], op.a[j][i]);
            }
        }
    }

    #[test]
    fn laplacian_identity_matches_direct_sum() {
        // D tau_a = -beta^2 d_a^2 tau_a: check against finite differences.
        let o = e7();
        let y = Sampler::new(5).sample(&o, 1).unwrap();
        let f = o.frame(&y, &1.0).unwrap();
        let g = o.metric_f64();
        let h = 1e-4;
        for a in [0usize, 3] {
            let mut lap = 0.0;
            for k in 0..7 {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[k] += h;
                ym[k] -= h;
                let tp = o.tau(&yp, &1.0).unwrap()[a];
                let tm = o.tau(&ym, &1.0).unwrap()[a];
                lap += g[k] * (tp - 2.0 * f.tau[a] + tm) / (h * h);
            }
            assert!((lap - f.lap_tau[a]).abs() < 1e-4 * f.lap_tau[a].abs().max(1.0), "{lap} vs {}", f.lap_tau[a]);
        }
    }

    #[test]
    fn sampler_is_reproducible_and_clear() {
        let o = e7();
        let s = Sampler::new(42);
        let a = s.samples(&o, 5).unwrap();
        let b = s.samples(&o, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|y| o.clearance(y, 1.0) > CLEARANCE && y.iter().all(|v| (0.05..0.35).contains(v))));
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn clearance_violation_is_reported() {
        let o = e7();
        assert!(matches!(o.frame(&[0.0; 7], &1.0), Err(OracleError::Clearance { .. })));
    }
}
