//! End-to-end benchmarks for the hot paths: link-budget math, expected
//! scheduler shares, the proportional-fairness solver, and the subframe
//! simulator.

use std::hint::black_box;

use absf_bench::Fixture;
use absf_core::asymptotic::{expected_share, ShareMode};
use absf_core::radio::{group_cdf_centroid, group_efficiency_exact, sinr_cdf, transmission_efficiency};
use absf_core::sim::{self, Policy};
use absf_core::{dbm_to_watts, AbsPattern, LinkBudget, McsTable};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn edge_budget() -> LinkBudget {
    let noise = dbm_to_watts(-101.0);
    LinkBudget::from_mean_powers(1.0e-9, &[4.0e-10, 1.5e-10, 6.0e-11], noise).expect("budget")
}

fn bench_link_math(c: &mut Criterion) {
    let budget = edge_budget();
    let mcs = McsTable::default_table();
    let members: Vec<LinkBudget> = (0..5).map(|_| budget.clone()).collect();

    let mut g = c.benchmark_group("link_math");
    g.bench_function("sinr_cdf", |b| {
        b.iter(|| sinr_cdf(black_box(1.7), black_box(&budget)).unwrap())
    });
    g.bench_function("group_efficiency_exact_u5", |b| {
        b.iter(|| group_efficiency_exact(black_box(&members), mcs).unwrap())
    });
    g.bench_function("efficiency_centroid_u5", |b| {
        b.iter(|| {
            transmission_efficiency(
                |x| group_cdf_centroid(x, black_box(&budget), 5).unwrap(),
                mcs,
            )
        })
    });
    g.finish();
}

fn bench_expected_share(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let make = |rng: &mut ChaCha8Rng, n: usize| {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        (p, sizes)
    };
    let (p12, s12) = make(&mut rng, 12);
    let (p20, s20) = make(&mut rng, 20);

    let mut g = c.benchmark_group("expected_share");
    g.bench_function("exact_12_groups", |b| {
        b.iter(|| {
            expected_share(
                black_box(0),
                black_box(&p12),
                black_box(&s12),
                16.8e6,
                ShareMode::Exact,
            )
            .unwrap()
        })
    });
    g.bench_function("monte_carlo_20_groups_5k", |b| {
        b.iter(|| {
            expected_share(
                black_box(0),
                black_box(&p20),
                black_box(&s20),
                16.8e6,
                ShareMode::MonteCarlo { trials: 5000, seed: 3 },
            )
            .unwrap()
        })
    });
    g.finish();
}

fn bench_solver(c: &mut Criterion) {
    let fx = Fixture::new();
    let spec = fx.run_spec();
    let matrix = sim::planning_matrix(&spec).expect("planning matrix");
    let opts = spec.optimizer.solve.clone();

    let mut g = c.benchmark_group("solver");
    g.sample_size(20);
    g.bench_function(
        format!(
            "asymptotic_pf_{}x{}",
            matrix.n_groups(),
            matrix.n_states()
        ),
        |b| b.iter(|| absf_core::optimizer::solve_asymptotic_pf(black_box(&matrix), &opts).unwrap()),
    );
    g.bench_function("max_throughput", |b| {
        b.iter(|| absf_core::optimizer::solve_max_throughput(black_box(&matrix)).unwrap())
    });
    g.finish();
}

fn bench_simulator(c: &mut Criterion) {
    let fx = Fixture::new();
    let spec = fx.run_spec();
    let all_active = AbsPattern::new(
        vec![fx.env.all_active().id(); 8],
        fx.env.n_stations(),
    )
    .expect("pattern");

    let mut g = c.benchmark_group("simulator");
    g.sample_size(10);
    g.bench_function("static_2s_all_active", |b| {
        b.iter(|| sim::run_with_pattern(black_box(&spec), &all_active, "bench").unwrap())
    });
    g.bench_function("static_2s_dynamic_pf", |b| {
        b.iter(|| sim::run_experiment(black_box(&spec), &Policy::DynamicPf).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_link_math,
    bench_expected_share,
    bench_solver,
    bench_simulator
);
criterion_main!(benches);
