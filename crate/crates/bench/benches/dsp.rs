use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spkaug_bench::harmonic_signal;
use spkaug_core::{istft, resample_sinc, speed_perturb, stft, vtlp_perturb, SpeedSpec, StftParams, WarpParams};

fn stft_roundtrip(c: &mut Criterion) {
    let x = harmonic_signal(3.0);
    let params = StftParams::default();
    c.bench_function("stft 3s", |b| b.iter(|| stft(&x, &params)));
    let spec = stft(&x, &params);
    c.bench_function("istft 3s", |b| b.iter(|| istft(&spec).unwrap()));
}

fn perturbations(c: &mut Criterion) {
    let x = harmonic_signal(3.0);
    let mut group = c.benchmark_group("perturb 3s");
    for alpha in [0.9, 1.1] {
        let spec = SpeedSpec::new(alpha).unwrap();
        group.bench_with_input(BenchmarkId::new("speed", alpha), &spec, |b, s| {
            b.iter(|| speed_perturb(&x, s).unwrap())
        });
        let warp = WarpParams::new(alpha).unwrap();
        group.bench_with_input(BenchmarkId::new("vtlp", alpha), &warp, |b, w| {
            b.iter(|| vtlp_perturb(&x, w).unwrap())
        });
    }
    group.finish();
}

fn resampling(c: &mut Criterion) {
    let x = harmonic_signal(3.0);
    let mut group = c.benchmark_group("resample 3s");
    for ratio in [0.5, 1.0 / 0.83, 2.0] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{ratio:.3}")), &ratio, |b, &r| {
            b.iter(|| resample_sinc(&x, r).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, stft_roundtrip, perturbations, resampling);
criterion_main!(benches);
