use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use ldlab_core::estimators::{tail_mc_grid, tail_mc_shared, Channel, Side, TailTarget};
use ldlab_core::exact_kernels::{apply_transfer, cylinder_dp};
use ldlab_core::parallel::with_workers;
use ldlab_core::tower::TowerModel;
use ldlab_core::{MapSpec, Observable};

fn tail(c: &mut Criterion) {
    let mut g = c.benchmark_group("tail_mc");
    let steps = 10_000u64 * 200;
    g.throughput(Throughput::Elements(steps));
    g.sample_size(10);
    let ch = Channel::Orbit(MapSpec::doubling());
    for obs in ["logpow:1:0", "loglog:0", "cylinder:0,1,1,0"] {
        let o = Observable::new(obs.parse().unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::new("doubling", obs), &o, |b, o| {
            b.iter(|| with_workers(Some(1), || tail_mc_grid(&ch, o, &[200], 0.3, Side::Upper, 10_000, 1).unwrap()))
        });
    }
    let shared = [Observable::log_pow(1.0, 0.0), Observable::log_pow(2.0, 0.0)];
    let targets = [TailTarget { obs: 0, n: 200, eps: 0.3 }, TailTarget { obs: 1, n: 200, eps: 3.0 }];
    g.bench_function("doubling/shared alpha 1,2", |b| {
        b.iter(|| with_workers(Some(1), || tail_mc_shared(&ch, &shared, &targets, Side::Upper, 10_000, 1).unwrap()))
    });
    let iid = Observable::log_pow(1.0, 0.0);
    g.bench_function("iid/exp1", |b| {
        b.iter(|| with_workers(Some(1), || tail_mc_grid(&Channel::Iid, &iid, &[200], 0.3, Side::Upper, 10_000, 1).unwrap()))
    });
    g.finish();
}

fn transfer(c: &mut Criterion) {
    let f = |x: f64| -x.ln();
    let mut g = c.benchmark_group("transfer");
    for n in [10u32, 16, 20] {
        g.throughput(Throughput::Elements(1 << n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| apply_transfer(&f, n, black_box(0.3)).unwrap())
        });
    }
    g.finish();
}

fn exact(c: &mut Criterion) {
    let obs = Observable::log_pow(1.0, 0.0).to_cylinder(6).unwrap();
    c.bench_function("cylinder_dp d=6 n=32", |b| b.iter(|| cylinder_dp(&obs, 32, 1e-2).unwrap()));
    let k3 = TowerModel::build(3).unwrap();
    c.bench_function("tower log_mgf K=3 n=2000", |b| b.iter(|| k3.log_mgf_curve(1.0, 2000).unwrap()));
    let k2 = TowerModel::build(2).unwrap();
    c.bench_function("tower sn_distribution K=2 n=160", |b| b.iter(|| k2.sn_distribution(160).unwrap()));
}

criterion_group!(benches, tail, transfer, exact);
criterion_main!(benches);
