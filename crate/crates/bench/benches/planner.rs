use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hap_bench::Fixture;
use hap_core::motion::{adapt_trajectory, MotionParams};
use hap_core::sequencer::{sequence, solve_tsp, SequencingParams};
use hap_core::{ik_solutions, Trajectory};

fn bench_ik(c: &mut Criterion) {
    let f = Fixture::new(0.2);
    let t = f.home();
    c.bench_function("ik_solutions", |b| b.iter(|| ik_solutions(&f.arm, black_box(&t), &f.scene)));
}

fn bench_decompose(c: &mut Criterion) {
    let f = Fixture::new(0.2);
    c.bench_function("decompose_band", |b| b.iter(|| f.decomposition()));
}

fn bench_sequence(c: &mut Criterion) {
    let f = Fixture::new(0.1);
    let d = f.decomposition();
    let mut g = c.benchmark_group("sequence");
    for n in [4, 8, 12] {
        let tasks = f.tasks(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &tasks, |b, tasks| {
            b.iter(|| sequence(tasks, &d, &f.home(), &SequencingParams::default(), &f.arm, &f.scene).unwrap())
        });
    }
    g.finish();
}

fn bench_tsp(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_tsp");
    // 10 is exact, 20 goes through nearest neighbour and 2-opt
    for n in [10usize, 20] {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let (r, a) = (1.0 + i as f64 * 0.1, i as f64 * 2.4);
                (r * a.cos(), r * a.sin())
            })
            .collect();
        let w: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| pts.iter().map(|q| (p.0 - q.0).hypot(p.1 - q.1)).collect())
            .collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| b.iter(|| solve_tsp(black_box(w), 0)));
    }
    g.finish();
}

fn bench_adapt(c: &mut Criterion) {
    let f = Fixture::new(0.1);
    let d = f.decomposition();
    let plan = sequence(&f.tasks(4), &d, &f.home(), &SequencingParams::default(), &f.arm, &f.scene).unwrap();
    let seeds: Vec<Trajectory> = plan.legs.iter().map(|l| l.trajectory.clone()).collect();
    let params = MotionParams::default();
    c.bench_function("adapt_legs", |b| {
        b.iter(|| {
            for (i, s) in seeds.iter().enumerate() {
                black_box(adapt_trajectory(s, &f.arm, &f.scene, &params, i as u64).unwrap());
            }
        })
    });
}

criterion_group!(benches, bench_ik, bench_decompose, bench_sequence, bench_tsp, bench_adapt);
criterion_main!(benches);
