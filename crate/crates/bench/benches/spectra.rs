use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_bigint::BigUint;

use specweight_core::dixmier::{block_extrapolation, estimate_trace, weight_partial_sums, DixmierOptions};
use specweight_core::hypertrace::{check_hypotheses, commutator_trace_norm, PhiChoice};
use specweight_core::tauberian::partition;
use specweight_core::zeta::{free_group_zeta, residue_estimate, zeta_eval};
use specweight_core::{generate, Complex64, GeneratorSpec, Schedule, TruncatedOperator};

fn generators(c: &mut Criterion) {
    let mut g = c.benchmark_group("generators");
    g.bench_function("primes_counting_1e6", |b| {
        b.iter(|| {
            let s = generate(&GeneratorSpec::Primes { limit: 10_000_000 }).unwrap();
            black_box(s.counting(1e6).unwrap())
        })
    });
    g.bench_function("torus2_counting_1e5", |b| {
        b.iter(|| {
            let s = generate(&GeneratorSpec::Torus2).unwrap();
            black_box(s.counting(1e5).unwrap())
        })
    });
    g.bench_function("free_group_200_blocks", |b| {
        let s = generate(&GeneratorSpec::FreeGroup { p: 2 }).unwrap();
        b.iter(|| black_box(s.prefix(200).unwrap().len()))
    });
    g.finish();
}

fn dixmier(c: &mut Criterion) {
    let mut g = c.benchmark_group("dixmier");
    let naturals = generate(&GeneratorSpec::Naturals).unwrap();
    let explicit = generate(&GeneratorSpec::Explicit {
        pairs: (1..=500).map(|k| (k as f64, (k % 7 + 1) as u64)).collect(),
    })
    .unwrap();
    g.bench_function("naturals_schedule_1e8", |b| {
        let n = (4..=16).map(|j| 10f64.powf(j as f64 / 2.0).round() as u64).collect();
        let schedule = Schedule::Points { n };
        b.iter(|| {
            black_box(
                estimate_trace(&naturals, &schedule, &DixmierOptions::default())
                    .unwrap()
                    .value,
            )
        })
    });
    g.bench_function("explicit_partial_sums", |b| {
        let ns: Vec<BigUint> = (1..=20).map(|k| BigUint::from(90u32 * k)).collect();
        b.iter(|| black_box(weight_partial_sums(&explicit, &ns).unwrap()))
    });
    g.bench_function("free_group_block_extrapolation", |b| {
        let s = generate(&GeneratorSpec::FreeGroup { p: 2 }).unwrap();
        b.iter(|| black_box(block_extrapolation(&s, 200, 100).unwrap()))
    });
    g.finish();
}

fn zeta(c: &mut Criterion) {
    let mut g = c.benchmark_group("zeta");
    let naturals = generate(&GeneratorSpec::Naturals).unwrap();
    g.bench_function("naturals_s_1_5", |b| {
        b.iter(|| black_box(zeta_eval(&naturals, Complex64::new(1.5, 0.0), 1e-12).unwrap()))
    });
    g.bench_function("naturals_residue", |b| {
        b.iter(|| black_box(residue_estimate(&naturals, 1e-8).unwrap()))
    });
    g.bench_function("free_group_near_pole", |b| {
        b.iter(|| black_box(free_group_zeta(2, Complex64::new(1.0 + 1e-6, 0.0), 1e-12).unwrap()))
    });
    g.finish();
}

fn tauberian(c: &mut Criterion) {
    let mut g = c.benchmark_group("tauberian");
    let weyl = generate(&GeneratorSpec::WeylPower { c: 1.0, gamma: 2.0 }).unwrap();
    g.bench_function("weyl_partition_beta_1e-3", |b| {
        b.iter(|| black_box(partition(&weyl, 1e-3, 1e-10).unwrap()))
    });
    g.finish();
}

fn hypertrace(c: &mut Criterion) {
    let mut g = c.benchmark_group("hypertrace");
    let naturals = generate(&GeneratorSpec::Naturals).unwrap();
    let shift = TruncatedOperator::shift(1000);
    g.bench_function("shift_commutator_1000", |b| {
        b.iter(|| black_box(commutator_trace_norm(&naturals, &shift, 1.25, PhiChoice::Identity).unwrap()))
    });
    let band = TruncatedOperator::shift(199).entries;
    let dense = TruncatedOperator::dense(&band * Complex64::new(0.5, 0.0) + band.transpose());
    g.sample_size(10);
    g.bench_function("dense_svd_200", |b| {
        b.iter(|| black_box(commutator_trace_norm(&naturals, &dense, 1.25, PhiChoice::Identity).unwrap()))
    });
    g.bench_function("weyl_hypotheses_50000", |b| {
        let weyl = generate(&GeneratorSpec::WeylPower { c: 1.0, gamma: 2.0 }).unwrap();
        b.iter(|| black_box(check_hypotheses(&weyl, 50_000).unwrap().overall))
    });
    g.finish();
}

criterion_group!(benches, generators, dixmier, zeta, tauberian, hypertrace);
criterion_main!(benches);
