mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;

use tauforge::derive::derive_operator;
use tauforge::exec::{with_jobs, Execution};
use tauforge::geometry::{flatness_check, FlatnessConfig};
use tauforge::numeric::{precision_digits, precision_from_env, set_precision_digits, Hp, Real};
use tauforge::operator::{
    default_spectrum_nus, e7_errata, e7_operator, e7_operator_corrected, flag_degree_check, flag_matrix,
    flag_preservation, invariant_report, render_operator_file, spectrum, weighted_projective_check, AlgebraicOperator,
    EntryId, FlagBasis, OperatorFile, ProjectiveParams,
};
use tauforge::oracle::{
    build_errata, detect_coupling_rescale, fit_entries, verify_ground_state, verify_tables, FitConfig,
    GroundStateConfig, Oracle, Precision, Sampler, VerifyConfig,
};
use tauforge::rootsys::{OrbitExport, RootSystem, SystemKind};

use report::{render_text, Envelope, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "tauforge", version, about = "Checks for the trigonometric E7 model in fundamental invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Clone, Serialize)]
struct Global {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Extended-precision digits; overrides TAUFORGE_PRECISION.
    #[arg(long, global = true)]
    precision_digits: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Prec {
    Double,
    High,
}

impl From<Prec> for Precision {
    fn from(p: Prec) -> Self {
        match p {
            Prec::Double => Precision::Double,
            Prec::High => Precision::High,
        }
    }
}

#[derive(Args, Clone, Serialize)]
struct OperatorArg {
    /// `printed`, `corrected` (printed tables with the fitted errata) or an operator file.
    #[arg(long, default_value = "printed")]
    operator: String,
}

impl OperatorArg {
    fn load(&self) -> Result<AlgebraicOperator> {
        Ok(match self.operator.as_str() {
            "printed" => e7_operator()?,
            "corrected" => e7_operator_corrected()?,
            path => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                AlgebraicOperator::from_json(&text)?
            }
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Weyl orbits of the fundamental weights.
    Orbits(OrbitsArgs),
    /// Evaluate the invariants at a point.
    TauEval(TauArgs),
    /// Check the ground state against the Hamiltonian.
    VerifyGroundState(GroundArgs),
    /// Compare every table entry with the chain-rule oracle.
    VerifyTables(VerifyArgs),
    /// Degree bounds, structure laws and constructive flag preservation.
    FlagCheck(FlagArgs),
    /// Eigenvalues on a flag space.
    Spectrum(SpectrumArgs),
    /// Curvature of the metric A at sampled points.
    Flatness(FlatnessArgs),
    /// Weighted-projective substitution on a flag space.
    Invariance(InvarianceArgs),
    /// Re-derive entries by extended-precision least squares.
    Fit(FitArgs),
    /// Exact derivation for a rank <= 2 system.
    Derive(DeriveArgs),
    /// Write data files (operator, errata, flag matrix, orbit).
    Export(ExportArgs),
}

#[derive(Args, Serialize)]
struct OrbitsArgs {
    #[arg(long, default_value = "e7")]
    system: String,
    /// Include orbit elements.
    #[arg(long)]
    elements: bool,
}

#[derive(Args, Serialize)]
struct TauArgs {
    #[arg(long, default_value = "e7")]
    system: String,
    /// Physical coordinates, comma separated; default is clearance sample `--sample`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    sample: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = Prec::Double)]
    precision: Prec,
}

#[derive(Args, Serialize)]
struct GroundArgs {
    #[arg(long, default_value = "e7")]
    system: String,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.7,3.0")]
    nu_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    beta_list: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Prec::Double)]
    precision: Prec,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    operator: OperatorArg,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Default 1e-6 in double, 1e-30 in high precision.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,2.5")]
    nu_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    beta_list: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Prec::Double)]
    precision: Prec,
}

#[derive(Args, Serialize)]
struct FlagArgs {
    #[command(flatten)]
    #[serde(flatten)]
    operator: OperatorArg,
    /// Flag degree for the constructive check.
    #[arg(long, default_value_t = 3)]
    n: u32,
}

#[derive(Args, Serialize)]
struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    operator: OperatorArg,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Couplings at which to list the eigenvalues (rationals).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    nu: Vec<String>,
}

#[derive(Args, Serialize)]
struct FlatnessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    operator: OperatorArg,
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    /// Default 1e-6 in double, 1e-30 in high precision.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Prec::Double)]
    precision: Prec,
}

#[derive(Args, Serialize)]
struct InvarianceArgs {
    #[arg(long, default_value_t = 6)]
    n: u32,
    /// Number of random parameter sets.
    #[arg(long, default_value_t = 3)]
    sets: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Explicit parameters (31 rationals) instead of random sets.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Option<Vec<String>>,
}

#[derive(Args, Serialize)]
struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    operator: OperatorArg,
    /// Entries to fit, e.g. A17,B1; default: entries failing a double-precision verification.
    #[arg(long, value_delimiter = ',')]
    entries: Option<Vec<String>>,
    #[arg(long, default_value_t = 20090401)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    oversampling: usize,
    #[arg(long, default_value_t = 4)]
    max_denominator: i64,
    /// Write an errata file for the entries whose fit differs from the tables.
    #[arg(long)]
    errata_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DeriveArgs {
    #[arg(long, default_value = "a1")]
    system: String,
    /// Oracle comparison points (high precision).
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write the derived operator file here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExportKind {
    Operator,
    Errata,
    Matrix,
    Orbit,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MatrixFormat {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
struct ExportArgs {
    #[arg(value_enum)]
    what: ExportKind,
    #[command(flatten)]
    #[serde(flatten)]
    operator: OperatorArg,
    /// Flag degree (matrix).
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Coupling (matrix).
    #[arg(long, default_value = "0")]
    nu: String,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Json)]
    matrix_format: MatrixFormat,
    #[arg(long, default_value = "e7")]
    system: String,
    /// 1-based fundamental weight (orbit).
    #[arg(long, default_value_t = 1)]
    index: usize,
}

struct Output {
    text: String,
    pass: bool,
}

fn envelope<C: Serialize, R: Serialize>(
    command: &'static str,
    config: C,
    pass: bool,
    report: R,
    format: Format,
) -> Result<Output> {
    let env = Envelope { schema_version: SCHEMA_VERSION, command, config, pass, report };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&env)? + "\n",
        Format::Text => render_text(&serde_json::to_value(&env)?),
    };
    Ok(Output { text, pass })
}

#[derive(Serialize)]
struct Effective<'a, A: Serialize> {
    #[serde(flatten)]
    args: &'a A,
    precision_digits: usize,
    parallel: bool,
    jobs: Option<usize>,
}

fn system(s: &str) -> Result<RootSystem> {
    let kind: SystemKind = s.parse()?;
    Ok(RootSystem::build(kind)?)
}

fn parse_rational(s: &str) -> Result<BigRational> {
    s.trim().parse::<BigRational>().with_context(|| format!("not a rational: {s}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    precision_from_env();
    if let Some(d) = cli.global.precision_digits {
        set_precision_digits(d);
    }
    let jobs = cli.global.jobs;
    let result = with_jobs(jobs, || run(&cli));
    match result {
        Ok(out) => {
            let written = match &cli.global.output {
                Some(p) => std::fs::write(p, &out.text).with_context(|| format!("writing {}", p.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Output> {
    let fmt = cli.global.format;
    let exec = Execution::default();
    let jobs = cli.global.jobs;
    fn effective<A: Serialize>(args: &A, exec: Execution, jobs: Option<usize>) -> Effective<'_, A> {
        Effective { args, precision_digits: precision_digits(), parallel: exec.is_parallel(), jobs }
    }
    macro_rules! eff {
        ($a:expr) => {
            effective($a, exec, jobs)
        };
    }
    match &cli.command {
        Command::Orbits(a) => {
            let sys = system(&a.system)?;
            let orbits = sys.fundamental_orbits();
            #[derive(Serialize)]
            struct R {
                system: String,
                sizes: Vec<usize>,
                lengths_sq: Vec<String>,
                rho_sq_over_nu_sq: String,
                #[serde(skip_serializing_if = "Option::is_none")]
                orbits: Option<Vec<OrbitExport>>,
            }
            let r = R {
                system: sys.kind.to_string(),
                sizes: orbits.iter().map(|o| o.size()).collect(),
                lengths_sq: sys.weight_lengths_sq.iter().map(|x| x.to_string()).collect(),
                rho_sq_over_nu_sq: sys.deformed_weyl_vector().rho_sq_over_nu_sq.to_string(),
                orbits: a
                    .elements
                    .then(|| orbits.iter().enumerate().map(|(i, o)| OrbitExport::new(&sys, i, o)).collect()),
            };
            envelope("orbits", eff!(a), true, r, fmt)
        }
        Command::TauEval(a) => {
            let sys = system(&a.system)?;
            let oracle = Oracle::new(&sys);
            let y = match &a.y {
                Some(y) => y.clone(),
                None => Sampler::new(a.seed).with_beta(a.beta).sample(&oracle, a.sample)?,
            };
            if y.len() != oracle.phys_dim() {
                bail!("expected {} coordinates, got {}", oracle.phys_dim(), y.len());
            }
            #[derive(Serialize)]
            struct R {
                y: Vec<f64>,
                beta: f64,
                tau_re: Vec<String>,
                tau_im: Vec<String>,
                clearance: f64,
            }
            let digits = precision_digits();
            let (re, im) = match a.precision {
                Prec::Double => {
                    let (re, im) = oracle.tau_complex(&y, &a.beta)?;
                    (re.iter().map(|x| format!("{x:e}")).collect(), im.iter().map(|x| format!("{x:e}")).collect())
                }
                Prec::High => {
                    let yh: Vec<Hp> = y.iter().map(|v| Hp::from_f64(*v)).collect();
                    let (re, im) = oracle.tau_complex(&yh, &Hp::from_f64(a.beta))?;
                    let f = |v: Vec<Hp>| v.iter().map(|x| x.to_string_digits(digits)).collect();
                    (f(re), f(im))
                }
            };
            let r = R { clearance: oracle.clearance(&y, a.beta), y, beta: a.beta, tau_re: re, tau_im: im };
            envelope("tau-eval", eff!(a), true, r, fmt)
        }
        Command::VerifyGroundState(a) => {
            let oracle = Oracle::new(&system(&a.system)?);
            let cfg = GroundStateConfig {
                samples: a.samples,
                seed: a.seed,
                tol: a.tol,
                nu_list: a.nu_list.clone(),
                beta_list: a.beta_list.clone(),
                precision: a.precision.into(),
            };
            let r = verify_ground_state(&oracle, &cfg, exec)?;
            envelope("verify-ground-state", eff!(a), r.pass, r, fmt)
        }
        Command::VerifyTables(a) => {
            let op = a.operator.load()?;
            let oracle = Oracle::new(&RootSystem::build(op.system)?);
            let precision: Precision = a.precision.into();
            let tol = a.tol.unwrap_or(if precision == Precision::High { 1e-30 } else { 1e-6 });
            let cfg = VerifyConfig {
                samples: a.samples,
                seed: a.seed,
                tol,
                nu_list: a.nu_list.clone(),
                beta_list: a.beta_list.clone(),
                precision,
                ..Default::default()
            };
            let r = verify_tables(&op, &oracle, &cfg, exec)?;
            #[derive(Serialize)]
            struct R {
                operator: String,
                #[serde(flatten)]
                report: tauforge::oracle::VerificationReport,
            }
            envelope("verify-tables", eff!(a), r.pass, R { operator: op.provenance.clone(), report: r }, fmt)
        }
        Command::FlagCheck(a) => {
            let op = a.operator.load()?;
            let sys = RootSystem::build(op.system)?;
            let degrees = flag_degree_check(&op);
            let laws = invariant_report(&op, &sys)?;
            let constructive = flag_preservation(&op, &sys, a.n, exec)?;
            let pass = degrees.pass && laws.pass && constructive.pass;
            #[derive(Serialize)]
            struct R {
                degrees: tauforge::operator::FlagReport,
                laws: tauforge::operator::InvariantReport,
                constructive: tauforge::operator::FlagPreservation,
            }
            envelope("flag-check", eff!(a), pass, R { degrees, laws, constructive }, fmt)
        }
        Command::Spectrum(a) => {
            let op = a.operator.load()?;
            let sys = RootSystem::build(op.system)?;
            let nus = a.nu.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            let res = spectrum(&op, &sys, a.n, &default_spectrum_nus(), exec)?;
            #[derive(Serialize)]
            struct At {
                nu: String,
                eigenvalues: Vec<String>,
                multiset: Vec<String>,
            }
            let at = nus
                .iter()
                .map(|nu| {
                    let vals: Vec<String> = res
                        .eigenvalues
                        .iter()
                        .map(|e| match (e.c0.parse::<BigRational>(), e.c1.parse::<BigRational>()) {
                            (Ok(c0), Ok(c1)) => (c0 + c1 * nu).to_string(),
                            _ => format!("{:e}", e.c0_f64 + e.c1_f64 * nu_f64(nu)),
                        })
                        .collect();
                    let mut multiset = vals.clone();
                    multiset.sort_by(|x, y| value_f64(x).total_cmp(&value_f64(y)));
                    multiset.dedup();
                    At { nu: nu.to_string(), eigenvalues: vals, multiset }
                })
                .collect::<Vec<_>>();
            #[derive(Serialize)]
            struct R {
                #[serde(flatten)]
                spectrum: tauforge::operator::SpectrumResult,
                at: Vec<At>,
            }
            let pass = res.affine_exact && res.nu_zero_law;
            envelope("spectrum", eff!(a), pass, R { spectrum: res, at }, fmt)
        }
        Command::Flatness(a) => {
            let op = a.operator.load()?;
            let oracle = Oracle::new(&RootSystem::build(op.system)?);
            let precision: Precision = a.precision.into();
            let base =
                if precision == Precision::High { FlatnessConfig::high_precision() } else { FlatnessConfig::default() };
            let cfg = FlatnessConfig {
                points: a.points,
                seed: a.seed,
                radius: a.radius,
                tol: a.tol.unwrap_or(base.tol),
                ..base
            };
            let r = flatness_check(&op, &oracle, &cfg, exec)?;
            envelope("flatness", eff!(a), r.pass, r, fmt)
        }
        Command::Invariance(a) => {
            let sys = RootSystem::build(SystemKind::E7)?;
            let sets: Vec<ProjectiveParams> = match &a.params {
                Some(ps) => vec![ProjectiveParams::new(ps.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?)?],
                None => (0..a.sets as u64).map(|k| ProjectiveParams::random(a.seed.wrapping_add(k))).collect(),
            };
            let reports =
                sets.iter().map(|p| weighted_projective_check(p, &sys, a.n, exec)).collect::<Result<Vec<_>, _>>()?;
            #[derive(Serialize)]
            struct R {
                /// Images in the flag, degree preserved, invertible.
                structural_pass: bool,
                /// Literal unit-triangular claim.
                unit_triangular: bool,
                sets: Vec<tauforge::operator::InvarianceReport>,
            }
            let structural_pass = reports.iter().all(|r| r.images_in_flag && r.degree_preserving && r.invertible);
            let unit_triangular = reports.iter().all(|r| r.unit_triangular);
            let pass = structural_pass && unit_triangular;
            envelope("invariance", eff!(a), pass, R { structural_pass, unit_triangular, sets: reports }, fmt)
        }
        Command::Fit(a) => {
            let op = a.operator.load()?;
            let oracle = Oracle::new(&RootSystem::build(op.system)?);
            let ids: Vec<EntryId> = match &a.entries {
                Some(list) => list.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
                None => {
                    let rep = verify_tables(&op, &oracle, &VerifyConfig::default(), exec)?;
                    rep.failing.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
                }
            };
            let cfg = FitConfig {
                seed: a.seed,
                oversampling: a.oversampling,
                max_denominator: a.max_denominator,
                ..Default::default()
            };
            let fit = fit_entries(&oracle, &op.cv, &ids, Some(&op), &cfg, exec)?;
            let rank = op.rank();
            let fitted_b: Vec<_> = (0..rank)
                .map(|i| {
                    fit.outcomes
                        .iter()
                        .find(|o| o.entry == EntryId::B(i).to_string())
                        .and_then(|o| o.polynomial(rank))
                        .unwrap_or_else(|| op.b(i).clone())
                })
                .collect();
            let rescale = detect_coupling_rescale(&op, &fitted_b);
            if let Some(path) = &a.errata_out {
                let errata = build_errata(&op, &fit)?;
                std::fs::write(path, serde_json::to_string_pretty(&errata)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let pass = fit.outcomes.iter().all(|o| o.accepted);
            #[derive(Serialize)]
            struct R {
                fit: tauforge::oracle::FitReport,
                coupling_rescale: tauforge::oracle::CouplingRescale,
            }
            envelope("fit", eff!(a), pass, R { fit, coupling_rescale: rescale }, fmt)
        }
        Command::Derive(a) => {
            let sys = system(&a.system)?;
            let op = derive_operator(&sys)?;
            let oracle = Oracle::new(&sys);
            let cfg = VerifyConfig { samples: a.samples, tol: a.tol, precision: Precision::High, ..Default::default() };
            let verification = verify_tables(&op, &oracle, &cfg, exec)?;
            let degrees = flag_degree_check(&op);
            let file = op.to_file();
            if let Some(path) = &a.out {
                std::fs::write(path, render_operator_file(&file))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let pass = verification.pass && degrees.pass;
            #[derive(Serialize)]
            struct R {
                operator: OperatorFile,
                verification: tauforge::oracle::VerificationReport,
                degrees: tauforge::operator::FlagReport,
            }
            envelope("derive", eff!(a), pass, R { operator: file, verification, degrees }, fmt)
        }
        Command::Export(a) => {
            let text = match a.what {
                ExportKind::Operator => render_operator_file(&a.operator.load()?.to_file()),
                ExportKind::Errata => serde_json::to_string_pretty(&e7_errata()?)? + "\n",
                ExportKind::Matrix => {
                    let op = a.operator.load()?;
                    let sys = RootSystem::build(op.system)?;
                    let basis = FlagBasis::enumerate(&sys, &op.cv, a.n);
                    let m = flag_matrix(&op, &basis, &parse_rational(&a.nu)?, exec)?;
                    match a.matrix_format {
                        MatrixFormat::Csv => m.to_csv(),
                        MatrixFormat::Json => serde_json::to_string_pretty(&m.to_export())? + "\n",
                    }
                }
                ExportKind::Orbit => {
                    let sys = system(&a.system)?;
                    if a.index == 0 || a.index > sys.rank() {
                        bail!("weight index must be in 1..={}", sys.rank());
                    }
                    let orbit = sys.weyl_orbit(a.index - 1)?;
                    serde_json::to_string_pretty(&OrbitExport::new(&sys, a.index - 1, &orbit))? + "\n"
                }
            };
            Ok(Output { text, pass: true })
        }
    }
}

fn nu_f64(q: &BigRational) -> f64 {
    num_traits_to_f64(q)
}

fn value_f64(s: &str) -> f64 {
    s.parse::<BigRational>().map(|q| num_traits_to_f64(&q)).or_else(|_| s.parse::<f64>()).unwrap_or(f64::NAN)
}

fn num_traits_to_f64(q: &BigRational) -> f64 {
    Hp::from_rational(q).to_f64()
}
