use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use memcell::analysis::{enumerate_levels, topology_search, LevelMode, SearchOptions};
use memcell::cell::CellConfig;
use memcell::Exec;

fn modes() -> Vec<(&'static str, Exec)> {
    #[allow(unused_mut)]
    let mut m = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("parallel", Exec::Parallel));
    m
}

fn closed_form(c: &mut Criterion) {
    let cfg = CellConfig::default();
    let mut g = c.benchmark_group("levels_closed_form");
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| enumerate_levels(&cfg, LevelMode::ClosedForm, exec).unwrap())
        });
    }
    g.finish();
}

fn transient(c: &mut Criterion) {
    let cfg = CellConfig {
        n: 2,
        r_sub: vec![20.0, 60.0],
        ..Default::default()
    };
    let mut g = c.benchmark_group("levels_transient_n2");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| enumerate_levels(&cfg, LevelMode::Transient, exec).unwrap())
        });
    }
    g.finish();
}

fn topology(c: &mut Criterion) {
    let opts = SearchOptions {
        resistor_count: 3,
        samples: 50,
        ..Default::default()
    };
    let mut g = c.benchmark_group("topology_search_r3");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| topology_search(opts, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, closed_form, transient, topology);
criterion_main!(benches);
