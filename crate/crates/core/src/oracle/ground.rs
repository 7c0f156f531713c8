use serde::Serialize;

use super::{Oracle, OracleError, Precision, Sampler};
use crate::exec::Execution;
use crate::numeric::{Hp, Real};

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub nu_list: Vec<f64>,
    pub beta_list: Vec<f64>,
    pub precision: Precision,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        GroundStateConfig {
            samples: 100,
            seed: 42,
            tol: 1e-8,
            nu_list: vec![0.5, 1.7, 3.0],
            beta_list: vec![1.0, 2.0],
            precision: Precision::Double,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingResidual {
    pub nu: f64,
    pub beta: f64,
    pub ground_energy: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateReport {
    pub system: String,
    /// `|rho|^2 / nu^2`, exact.
    pub rho_sq_over_nu_sq: String,
    /// `E_0 / (beta^2 nu^2)`, exact.
    pub ground_energy_coefficient: String,
    pub per_coupling: Vec<CouplingResidual>,
    pub max_residual: f64,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

/// `(H Psi_0)/Psi_0 = E_0` at clearance samples for every `(nu, beta)`.
pub fn verify_ground_state(
    oracle: &Oracle,
    cfg: &GroundStateConfig,
    exec: Execution,
) -> Result<GroundStateReport, OracleError> {
    let mut per_coupling = Vec::new();
    for &beta in &cfg.beta_list {
        let sampler = Sampler::new(cfg.seed).with_beta(beta);
        let ys = sampler.samples(oracle, cfg.samples)?;
        for &nu in &cfg.nu_list {
            let res: Vec<Result<f64, OracleError>> = exec.map(&ys, |y| match cfg.precision {
                Precision::Double => oracle.ground_state_residual(y, &beta, &nu),
                Precision::High => {
                    let yh: Vec<Hp> = y.iter().map(|v| Hp::from_f64(*v)).collect();
                    oracle.ground_state_residual(&yh, &Hp::from_f64(beta), &Hp::from_f64(nu))
                }
            });
            let max = res.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, |a: f64, b| {
                if b.is_nan() {
                    f64::NAN
                } else {
                    a.max(b)
                }
            });
            per_coupling.push(CouplingResidual {
                nu,
                beta,
                ground_energy: oracle.ground_energy(&beta, &nu),
                max_residual: max,
            });
        }
    }
    let max_residual = per_coupling.iter().map(|c| c.max_residual).fold(0.0, f64::max);
    let dwv = oracle.sys.deformed_weyl_vector();
    Ok(GroundStateReport {
        system: oracle.sys.kind.to_string(),
        rho_sq_over_nu_sq: dwv.rho_sq_over_nu_sq.to_string(),
        ground_energy_coefficient: dwv.ground_energy_coefficient().to_string(),
        pass: max_residual < cfg.tol && per_coupling.iter().all(|c| !c.max_residual.is_nan()),
        per_coupling,
        max_residual,
        samples: cfg.samples,
        tol: cfg.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{RootSystem, SystemKind};

    #[test]
    fn small_systems_pass() {
        for k in [SystemKind::A1, SystemKind::A2, SystemKind::G2, SystemKind::E7] {
            let o = Oracle::new(&RootSystem::build(k).unwrap());
            let cfg = GroundStateConfig { samples: 5, ..Default::default() };
            let rep = verify_ground_state(&o, &cfg, Execution::default()).unwrap();
            assert!(rep.pass, "{k}: {}", rep.max_residual);
        }
    }
}
