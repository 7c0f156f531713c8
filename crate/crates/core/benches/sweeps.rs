use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tauforge::exec::Execution;
use tauforge::geometry::{flatness_check, FlatnessConfig};
use tauforge::operator::{
    e7_operator, e7_operator_corrected, flag_preservation, weighted_projective_check, ProjectiveParams,
};
use tauforge::oracle::{verify_tables, Oracle, VerifyConfig};
use tauforge::rootsys::{RootSystem, SystemKind};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn label(e: Execution) -> &'static str {
    match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn tables(c: &mut Criterion) {
    let sys = RootSystem::build(SystemKind::E7).unwrap();
    let oracle = Oracle::new(&sys);
    let op = e7_operator().unwrap();
    let cfg = VerifyConfig { samples: 16, ..Default::default() };
    let mut g = c.benchmark_group("verify_tables_double_16");
    g.sample_size(10);
    for e in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(label(e)), &e, |b, &e| {
            b.iter(|| verify_tables(&op, &oracle, &cfg, e).unwrap())
        });
    }
    g.finish();
}

fn flatness(c: &mut Criterion) {
    let sys = RootSystem::build(SystemKind::E7).unwrap();
    let oracle = Oracle::new(&sys);
    let op = e7_operator_corrected().unwrap();
    let cfg = FlatnessConfig::default();
    let mut g = c.benchmark_group("flatness_double_10");
    g.sample_size(10);
    for e in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(label(e)), &e, |b, &e| {
            b.iter(|| flatness_check(&op, &oracle, &cfg, e).unwrap())
        });
    }
    g.finish();
}

fn flags(c: &mut Criterion) {
    let sys = RootSystem::build(SystemKind::E7).unwrap();
    let op = e7_operator().unwrap();
    let params = ProjectiveParams::random(42);
    let mut g = c.benchmark_group("flag_sweeps");
    g.sample_size(10);
    for e in MODES {
        g.bench_with_input(BenchmarkId::new("preservation_p4", label(e)), &e, |b, &e| {
            b.iter(|| flag_preservation(&op, &sys, 4, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("projective_p6", label(e)), &e, |b, &e| {
            b.iter(|| weighted_projective_check(&params, &sys, 6, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, tables, flatness, flags);
criterion_main!(benches);
