//! Criterion benchmarks for the hot kernels: plain convolution, the
//! spatially varying convolution, and a miniature model forward pass.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use svehdr_core::conv::conv2d;
use svehdr_core::network::{build_model, Fusion, Model, ModelConfig};
use svehdr_core::svc::{svc_forward, FirstLayerKind, SvcWeights};
use svehdr_core::tensor::Tensor;

fn bench_conv2d(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x32 = Tensor::<f32>::rand_uniform([1, 64, 64, 64], 1.0, &mut rng);
    let w32 = Tensor::<f32>::rand_uniform([64, 64, 3, 3], 0.1, &mut rng);
    let b32: Vec<f32> = vec![0.0; 64];
    c.bench_function("conv2d 3x3 64ch 64x64 f32", |b| {
        b.iter(|| conv2d(black_box(&x32), &w32, Some(&b32), (1, 1), (1, 1)).unwrap())
    });

    let x64 = x32.cast::<f64>();
    let w64 = w32.cast::<f64>();
    let b64: Vec<f64> = vec![0.0; 64];
    c.bench_function("conv2d 3x3 64ch 64x64 f64", |b| {
        b.iter(|| conv2d(black_box(&x64), &w64, Some(&b64), (1, 1), (1, 1)).unwrap())
    });
}

fn bench_svc(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Tensor::<f64>::rand_uniform([1, 1, 128, 128], 1.0, &mut rng);
    let banks: Vec<_> =
        (0..8).map(|_| Tensor::<f64>::rand_uniform([64, 1, 5, 5], 0.2, &mut rng)).collect();
    let biases: Vec<Vec<f64>> = (0..8).map(|_| vec![0.0; 64]).collect();
    let weights = SvcWeights::new(banks, biases).unwrap();
    c.bench_function("svc 5x5 1->64 128x128 f64", |b| {
        b.iter(|| svc_forward(black_box(&x), &weights).unwrap())
    });
}

fn bench_model_forward(c: &mut Criterion) {
    let config = ModelConfig {
        rb_blocks: 4,
        egb_blocks: 4,
        channels: 16,
        egb_c: 8,
        rb_head: FirstLayerKind::Svc(5),
        egb_head: FirstLayerKind::Svc(5),
        fusion: Fusion::EgbBeta,
        beta_init: 1.0,
    };
    let model: Model<f32> = build_model(&config, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let e = Tensor::<f32>::rand_uniform([1, 1, 64, 64], 0.4, &mut rng).map(|v| v + 0.5);
    let mask = Tensor::<f32>::ones([1, 1, 64, 64]);
    c.bench_function("miniature model forward 64x64 f32", |b| {
        b.iter(|| model.forward(black_box(&e), Some(&mask)).unwrap())
    });
}

criterion_group!(benches, bench_conv2d, bench_svc, bench_model_forward);
criterion_main!(benches);
