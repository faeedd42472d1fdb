use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hermanlab::cfrac::ContinuedFraction;
use hermanlab::curve::{bounded_turning_with, trace};
use hermanlab::julia::{box_count, classify_with, koch_curve, Sampling, Traps, Window};
use hermanlab::maps::blaschke;
use hermanlab::rotation::tune_blaschke;
use hermanlab::Execution;
use num_complex::Complex64;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn bench(c: &mut Criterion) {
    let theta = ContinuedFraction::golden();
    let alpha = tune_blaschke(2, &theta, 1e-12).unwrap().alpha.unwrap();
    let f = blaschke(2, alpha).unwrap();
    let window = Window::centered(Complex64::new(0.0, 0.0), 2.5).unwrap();
    let curve = trace(&f, &theta, 16).unwrap();
    let koch = koch_curve(7);

    let mut g = c.benchmark_group("classify_128");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| classify_with(&f, window, (128, 128), 500, Traps::default(), exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("box_count_koch7");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| box_count(&koch, Sampling::Polyline, 1e-3, exec))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("bounded_turning");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| bounded_turning_with(&curve, exec)));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
