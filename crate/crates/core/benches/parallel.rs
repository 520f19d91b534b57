//! Sequential against rayon-parallel schedules for the three hot loops.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use wmterrain::dem::gaussian_smooth_with;
use wmterrain::exec::Schedule;
use wmterrain::roughness::moore_gradient_map_with;
use wmterrain::wm::{generate_monofractal_with, GridSpec, WmOptions};
use wmterrain::{quantize_png16, WmParams};

const SCHEDULES: [(&str, Schedule); 2] = [
    ("sequential", Schedule::Sequential),
    ("parallel", Schedule::Parallel),
];

fn grid(p: &WmParams, size: usize) -> GridSpec {
    GridSpec {
        size_px: size,
        x0: p.length,
        y0: p.length,
        spacing: p.length / size as f64,
    }
}

fn kernel(c: &mut Criterion) {
    let size = 65;
    let p = WmParams::high_frequency(2.45).with_n_max(size as u32);
    let g = grid(&p, size);
    let mut group = c.benchmark_group("wm_kernel_65px");
    group.sample_size(10);
    for (name, schedule) in SCHEDULES {
        let options = WmOptions {
            schedule,
            ..WmOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_monofractal_with(black_box(&p), &g, 7, &options).unwrap())
        });
    }
    group.finish();
}

fn smoothing_and_gradient(c: &mut Criterion) {
    let size = 257;
    let p = WmParams::mid_frequency().with_n_max(48);
    let raw = generate_monofractal_with(&p, &grid(&p, size), 3, &WmOptions::default()).unwrap();
    let q = quantize_png16(&raw).unwrap();

    let mut group = c.benchmark_group("smooth_257px");
    for (name, schedule) in SCHEDULES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| gaussian_smooth_with(black_box(&raw), 2.0, schedule).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("gradient_257px");
    for (name, schedule) in SCHEDULES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| moore_gradient_map_with(black_box(&q), 0.2, schedule).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernel, smoothing_and_gradient);
criterion_main!(benches);
