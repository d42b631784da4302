//! Oracle benchmarks: exact enumeration and Monte-Carlo contrast
//! evaluation with common random numbers.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use variata_core::effects::EffectKind;
use variata_core::scm::{builtin_scm, oracle_effect, sample_observational, OracleMode};
use variata_core::shape::Scale;

fn exact_oracle(c: &mut Criterion) {
    let spec = builtin_scm("c-de-ie-se-a").unwrap();
    c.bench_function("exact_te_se_on_discrete_model", |b| {
        b.iter(|| oracle_effect(&spec, EffectKind::TeSe, Scale::Mean, OracleMode::Exact).unwrap())
    });
}

fn mc_oracle(c: &mut Criterion) {
    let spec = builtin_scm("m5").unwrap();
    let mut group = c.benchmark_group("mc_de_ie_se_on_m5");
    group.sample_size(10);
    for n in [10_000usize, 100_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| {
                oracle_effect(
                    &spec,
                    EffectKind::DeIeSe,
                    Scale::Mean,
                    OracleMode::MonteCarlo { n, seed: 1 },
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let spec = builtin_scm("m1").unwrap();
    let mut group = c.benchmark_group("sample_observational_m1");
    group.sample_size(10);
    group.bench_function("n=100k", |b| b.iter(|| sample_observational(&spec, 100_000, 3).unwrap()));
    group.finish();
}

criterion_group!(benches, exact_oracle, mc_oracle, sampling);
criterion_main!(benches);
