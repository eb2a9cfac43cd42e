use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinscape::gradients::grad_avg_fidelity;
use spinscape::optimizer::maximize;
use spinscape::{
    EigenSystem, OptimizationConfig, Readout, SensitivityKernel, SpinNetwork, TimeSpec, Topology,
    TransferTask,
};
use spinscape_bench::ring_fixture;
use std::hint::black_box;

fn eigensystem(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigensystem");
    for n in [7, 14, 20] {
        let (net, bias) = ring_fixture(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| EigenSystem::from_network(&net, black_box(&bias)).unwrap())
        });
    }
    group.finish();
}

fn objectives(c: &mut Criterion) {
    let (net, bias) = ring_fixture(14);
    let eig = EigenSystem::from_network(&net, &bias).unwrap();
    c.bench_function("fidelity/14", |b| {
        b.iter(|| eig.fidelity(0, black_box(5), 7.3))
    });
    c.bench_function("avg_fidelity/14", |b| {
        b.iter(|| eig.avg_fidelity(0, black_box(5), 7.3, 0.05).unwrap())
    });
    c.bench_function("bias_gradient/14", |b| {
        b.iter(|| {
            SensitivityKernel::new(&eig, 0, black_box(5), Readout::Instant { t: 7.3 })
                .bias_gradient()
        })
    });
    c.bench_function("window_gradient/14", |b| {
        b.iter(|| grad_avg_fidelity(&eig, 0, black_box(5), 7.3, 0.05).unwrap())
    });
}

fn restarts(c: &mut Criterion) {
    let net = SpinNetwork::new(7, Topology::Ring, 0.0).unwrap();
    let task = TransferTask::new(&net, 0, 2, TimeSpec::Free { lo: 0.0, hi: 30.0 }, None).unwrap();
    let config = OptimizationConfig {
        restarts: 8,
        ..OptimizationConfig::default()
    };
    c.bench_function("maximize/ring7-1-3/8-restarts", |b| {
        b.iter(|| maximize(&task, &net, black_box(&config)).unwrap())
    });
}

criterion_group!(benches, eigensystem, objectives, restarts);
criterion_main!(benches);
