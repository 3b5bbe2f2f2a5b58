use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use pdge::benchmarks::BenchmarkId;
use pdge::dg_space::{DgSpace, DgVector};
use pdge::estimators::{elliptic_estimator, Constants, EllipticSource};
use pdge::exec::{with_policy, Policy};
use pdge::ipdg::{assemble_stiffness, DiffusionTensor, Theta};
use pdge::mesh::{build_structured_mesh, DomainTag};
use pdge::study::{run_level, RunConfig};

const POLICIES: [(&str, Policy); 2] = [("sequential", Policy::Sequential), ("parallel", Policy::Parallel)];

fn assembly(c: &mut Criterion) {
    let space = DgSpace::new(Arc::new(build_structured_mesh(DomainTag::UnitSquare, 32)), 2).unwrap();
    let tensor = DiffusionTensor::identity();
    let mut group = c.benchmark_group("assemble_stiffness_n32_p2");
    for (name, policy) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| with_policy(policy, || assemble_stiffness(black_box(&space), &tensor, 0.0, Theta::Symmetric, 80.0)))
        });
    }
    group.finish();
}

fn estimator(c: &mut Criterion) {
    let space = DgSpace::new(Arc::new(build_structured_mesh(DomainTag::UnitSquare, 32)), 2).unwrap();
    let id = BenchmarkId::U1;
    let u = DgVector::l2_project(&space, move |x, t| id.value(x, t), 0.5);
    let tensor = DiffusionTensor::identity();
    let g = move |x| id.forcing(x, 0.5);
    let mut group = c.benchmark_group("elliptic_estimator_n32_p2");
    for (name, policy) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| {
                with_policy(policy, || {
                    elliptic_estimator(black_box(&u), &tensor, 0.5, EllipticSource::Field(&g), 80.0, &Constants::default())
                })
            })
        });
    }
    group.finish();
}

fn short_run(c: &mut Criterion) {
    let mut config = RunConfig::new(BenchmarkId::U1, 1, vec![8], 0, 0.05);
    config.problem.final_time = Some(0.25);
    let mut group = c.benchmark_group("run_level_u1_n8");
    group.sample_size(10);
    for (name, policy) in POLICIES {
        group.bench_function(name, |b| b.iter(|| with_policy(policy, || run_level(black_box(&config), 0, 8).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, assembly, estimator, short_run);
criterion_main!(benches);
