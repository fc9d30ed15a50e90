use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use juliatherm_bench::{chebyshev, hyperbolic, misiurewicz};
use juliatherm_core::backward::{
    backward_tree, tree_pressure_estimate, Metric, TreeConfig, TreeMode,
};
use juliatherm_core::inducing::{
    canonical_branches, enumerate_components, propose_nice_couple, InducingConfig,
};
use juliatherm_core::periodic::{find_periodic_points, PeriodicConfig};
use juliatherm_core::point::CPoint;
use juliatherm_core::pressure::{assemble_pressure, grid_range, AssembleConfig};
use num_complex::Complex64;

fn bench_backward_tree(c: &mut Criterion) {
    let map = chebyshev();
    let root = CPoint::from_complex(Complex64::new(0.3, 0.0));
    let mut group = c.benchmark_group("backward_tree");
    group.measurement_time(Duration::from_secs(8));
    for depth in [10usize, 14] {
        group.bench_with_input(BenchmarkId::new("exact", depth), &depth, |b, &depth| {
            b.iter(|| {
                let tree = backward_tree(
                    &map,
                    &root,
                    depth,
                    TreeMode::Exact,
                    Metric::Spherical,
                    &TreeConfig::default(),
                )
                .unwrap();
                tree_pressure_estimate(&tree, 0.7)
            })
        });
    }
    group.finish();
}

fn bench_periodic_points(c: &mut Criterion) {
    let map = misiurewicz();
    let cfg = PeriodicConfig::default();
    let mut group = c.benchmark_group("periodic_points");
    group.measurement_time(Duration::from_secs(8));
    for m in [6usize, 9] {
        group.bench_with_input(BenchmarkId::new("solve", m), &m, |b, &m| {
            b.iter(|| find_periodic_points(&map, m, &cfg).unwrap().len())
        });
    }
    group.finish();
}

fn bench_pressure_assembly(c: &mut Criterion) {
    let map = hyperbolic();
    let grid = grid_range(-2.0, 2.0, 0.25);
    let cfg = AssembleConfig {
        depth_hi: 12,
        depth_lo: 7,
        period_cap: 256,
        chi_period_cap: 64,
        ..AssembleConfig::default()
    };
    c.bench_function("assemble_pressure/quick", |b| {
        b.iter(|| assemble_pressure(&map, &grid, &cfg).unwrap().t_star)
    });
}

fn bench_branch_enumeration(c: &mut Criterion) {
    let map = misiurewicz();
    let crit = map.critical_points().unwrap();
    let icfg = InducingConfig::default();
    let couple = propose_nice_couple(&map, &crit, &[(0.02, 0.06)], &icfg).unwrap();
    c.bench_function("enumerate_components/m14", |b| {
        b.iter(|| {
            let set = enumerate_components(&couple, &map, 14, &icfg).unwrap();
            canonical_branches(&set, &couple, &map, &icfg)
                .unwrap()
                .branches
                .len()
        })
    });
}

criterion_group!(
    benches,
    bench_backward_tree,
    bench_periodic_points,
    bench_pressure_assembly,
    bench_branch_enumeration
);
criterion_main!(benches);
