use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfgnet::calibrate::{calibrate_cost, CalibrationSpec};
use mfgnet::edgecost::{CostForm, EdgeModel, ModelSpec};
use mfgnet::equilibrium::{solve_exact, solve_iterative, vi_gap, SolveOptions};
use mfgnet::netmodel::examples::braess;
use mfgnet::recovery::{recover_values, verify_mfg};
use mfgnet::wardrop_net::transform;
use mfgnet_bench::{braess_directed, log_grid, random_directed};
use std::hint::black_box;

fn edge_cost(c: &mut Criterion) {
    let grid = log_grid(64);
    let quad = EdgeModel::from_spec(&ModelSpec::quadratic()).unwrap();
    c.bench_function("edge_cost/quadratic_curve_64", |b| {
        b.iter(|| quad.cost_curve(black_box(&grid)).unwrap())
    });
    let cal = calibrate_cost(&CalibrationSpec::fixed(0.5, CostForm::affine(1.0, 1.0), 1.0, 2.0)).unwrap();
    let model = cal.edge_model();
    c.bench_function("edge_cost/calibrated_c01", |b| {
        b.iter(|| model.c01(black_box(3.7)).unwrap())
    });
    c.bench_function("calibrate/affine", |b| {
        b.iter(|| {
            calibrate_cost(&CalibrationSpec::fixed(
                0.5,
                CostForm::affine(1.0, black_box(1.0)),
                1.0,
                2.0,
            ))
            .unwrap()
        })
    });
}

fn wardrop(c: &mut Criterion) {
    let net = braess(true, 0.0);
    c.bench_function("transform/braess_bridge", |b| {
        b.iter(|| transform(black_box(&net)).unwrap())
    });
    let d = braess_directed(true);
    let o = SolveOptions::default();
    c.bench_function("solve_exact/braess_bridge", |b| b.iter(|| solve_exact(&d, &o).unwrap()));
    c.bench_function("solve_iterative/braess_bridge", |b| {
        b.iter(|| solve_iterative(&d, &o).unwrap())
    });

    let mut group = c.benchmark_group("solve_iterative/random");
    for size in [4usize, 8, 16] {
        let d = random_directed(17, size);
        group.bench_with_input(BenchmarkId::from_parameter(size), &d, |b, d| {
            b.iter(|| solve_iterative(d, &o).unwrap())
        });
    }
    group.finish();
}

fn recovery(c: &mut Criterion) {
    let d = braess_directed(true);
    let r = solve_exact(&d, &SolveOptions::default()).unwrap();
    c.bench_function("vi_gap/braess_bridge", |b| {
        b.iter(|| vi_gap(&d, black_box(&r.flow)).unwrap())
    });
    c.bench_function("recover_and_verify/braess_bridge", |b| {
        b.iter(|| {
            let v = recover_values(&d, &r.flow).unwrap();
            verify_mfg(&d, &r.flow, &v).unwrap()
        })
    });
}

criterion_group!(benches, edge_cost, wardrop, recovery);
criterion_main!(benches);
