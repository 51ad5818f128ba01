use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use interpnorm::harness::Benchmark;
use interpnorm::linalg::DenseMatrix;
use interpnorm::norms::{chain_groups, latent_group_lasso, LpExponent};
use interpnorm::prox;
use interpnorm::solver::{DrSolver, RunOptions};

fn ramp(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 37 % 101) as f64 - 50.0) / 25.0).collect()
}

fn proxes(c: &mut Criterion) {
    let x = ramp(64);
    c.bench_function("prox_l2_block/64", |b| {
        b.iter(|| prox::prox_l2_block(black_box(&x), 0.3))
    });
    c.bench_function("project_l1_ball/64", |b| {
        b.iter(|| prox::project_l1_ball(black_box(&x), 1.0))
    });
    c.bench_function("prox_linf_block/64", |b| {
        b.iter(|| prox::prox_linf_block(black_box(&x), 1.0))
    });
    let m = DenseMatrix::new(8, 8, x.clone()).unwrap();
    c.bench_function("prox_nuclear/8x8", |b| {
        b.iter(|| prox::prox_nuclear(black_box(&m), 0.5, 1.0).unwrap())
    });
}

fn graph_projection(c: &mut Criterion) {
    let problem = Benchmark::desk_hinge(0).problem().unwrap();
    let solver = DrSolver::new(&problem).unwrap();
    let pre = solver.precomputed();
    let total = problem.norm().operator().total_dim();
    let x = ramp(total);
    let y = ramp(problem.n());
    c.bench_function("project_graph/desk", |b| {
        b.iter(|| prox::project_graph(black_box(&x), black_box(&y), &pre.l_blocks, &pre.r_blocks).unwrap())
    });
}

fn dr_iterations(c: &mut Criterion) {
    let bench = Benchmark::desk_hinge(0);
    let problem = bench.problem().unwrap();
    let solver = DrSolver::new(&problem).unwrap();
    let quiet = RunOptions {
        reference: None,
        record_every: usize::MAX,
    };
    let mut group = c.benchmark_group("dr_200_iterations");
    for alpha in [1.0, 0.5, 0.1] {
        let config = bench
            .config
            .clone()
            .with_alpha(alpha)
            .with_tol(0.0)
            .with_max_iter(200);
        group.bench_function(format!("alpha={alpha}"), |b| {
            b.iter_batched(
                || config.clone(),
                |cfg| solver.run(&cfg, &quiet).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn primal_eval(c: &mut Criterion) {
    let norm = latent_group_lasso(50, &chain_groups(50, 10, 3).unwrap(), LpExponent::Two).unwrap();
    let w = ramp(50);
    c.bench_function("primal_eval/chain_d50", |b| {
        b.iter(|| norm.norm(black_box(&w)).unwrap())
    });
}

criterion_group!(benches, proxes, graph_projection, dr_iterations, primal_eval);
criterion_main!(benches);
