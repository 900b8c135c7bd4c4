use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use sublinear_bench::two_point;
use sublinear_core::sim::{
    simulate_family, simulate_paths, standard_policies, AdversaryPolicy, SimOptions,
};

fn paths(c: &mut Criterion) {
    let fam = two_point();
    let pol = AdversaryPolicy::constant(0.0, 1.0);
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.throughput(Throughput::Elements(1000 * 1000));
    g.bench_function("constant 1000x1000", |b| {
        b.iter(|| simulate_paths(&fam, &pol, 1000, 1000, 1).unwrap())
    });
    let pols = standard_policies(&fam.params);
    g.throughput(Throughput::Elements(1000 * 1000 * pols.len() as u64));
    g.bench_function("standard family 1000x1000", |b| {
        b.iter(|| simulate_family(&fam, &pols, 1000, 1000, 1, &SimOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, paths);
criterion_main!(benches);
