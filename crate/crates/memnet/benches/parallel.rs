//! Compares the batch helpers in `memnet::par` against inline sequential
//! loops over the same public APIs. Build with the default features to
//! measure the rayon backend, and with `--no-default-features` to measure
//! the sequential fallback — the bench names carry the active backend so
//! the two runs line up in criterion's reports.
//!
//! The workloads are the crate's real data-parallel batches: per-sequence
//! gradient computation (the inner loop of training and of multi-seed
//! sweeps) and the randomized gradient-check battery.

use criterion::{criterion_group, criterion_main, Criterion};
use memnet::model::{Dims, MemNetModel};
use memnet::par;
use memnet::seq_model::SequenceModel;
use memnet::tasks::copy::gen_copy;
use memnet::tasks::TaskInstance;
use memnet::train::gradcheck::{gradcheck_batch, CheckModel, DEFAULT_TOLERANCE};
use std::hint::black_box;

fn batch(n: usize) -> (MemNetModel, Vec<TaskInstance>) {
    let dims = Dims::new(10, 16, 8, 32).unwrap();
    let model = MemNetModel::new(dims, 2.0, 7).unwrap();
    let tasks = (0..n).map(|i| gen_copy(12, 8, i as u64).unwrap()).collect();
    (model, tasks)
}

fn bench_batch_gradients(c: &mut Criterion) {
    let (model, tasks) = batch(32);
    let mut g = c.benchmark_group("batch_sequence_grad");
    g.bench_function(format!("shim_{}", par::backend()), |b| {
        b.iter(|| {
            let grads = par::try_map_slice(&tasks, |t| model.sequence_grad(t)).unwrap();
            black_box(grads)
        })
    });
    g.bench_function("inline_sequential", |b| {
        b.iter(|| {
            let grads: Result<Vec<_>, _> = tasks.iter().map(|t| model.sequence_grad(t)).collect();
            black_box(grads.unwrap())
        })
    });
    g.finish();
}

fn bench_batch_loss(c: &mut Criterion) {
    let (model, tasks) = batch(64);
    let mut g = c.benchmark_group("batch_sequence_loss");
    g.bench_function(format!("shim_{}", par::backend()), |b| {
        b.iter(|| {
            let losses = par::try_map_slice(&tasks, |t| model.sequence_loss(t)).unwrap();
            black_box(losses)
        })
    });
    g.bench_function("inline_sequential", |b| {
        b.iter(|| {
            let losses: Result<Vec<_>, _> = tasks.iter().map(|t| model.sequence_loss(t)).collect();
            black_box(losses.unwrap())
        })
    });
    g.finish();
}

fn bench_gradcheck(c: &mut Criterion) {
    let mut g = c.benchmark_group("gradcheck_battery");
    g.sample_size(10);
    g.bench_function(format!("memnet16_{}", par::backend()), |b| {
        b.iter(|| black_box(gradcheck_batch(CheckModel::MemNet, 16, 1234, DEFAULT_TOLERANCE).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, bench_batch_gradients, bench_batch_loss, bench_gradcheck);
criterion_main!(benches);
