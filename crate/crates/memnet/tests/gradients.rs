//! The load-bearing gradient gate: hand-derived backpropagation through
//! time held against the central-difference oracle over large batches of
//! randomized instances, plus targeted single-regime checks so a failure
//! points at the broken regime instead of a batch index.

use memnet::baselines::{LstmModel, RnnModel};
use memnet::train::{
    fd_flat, fd_gradient, gradcheck_batch, relative_error, CheckModel, DEFAULT_TOLERANCE,
};
use memnet::{Dims, MemNetModel, SequenceModel, TaskInstance};
use std::time::Instant;

/// The headline gate: at least 100 random small MemNet instances spanning
/// full and partly empty memories, gated and ungated writes, and partial
/// loss masks. Every instance must agree with central differences to a
/// worst-case relative error below 1e-5, and the whole batch must finish
/// in under a minute.
#[test]
fn memnet_gradient_gate_100_instances_under_a_minute() {
    let start = Instant::now();
    let report = gradcheck_batch(CheckModel::MemNet, 100, 0x6d65_6d6e, DEFAULT_TOLERANCE).unwrap();
    let elapsed = start.elapsed();

    assert_eq!(report.per_instance.len(), 100);
    assert!(
        report.passed(),
        "worst relative error {:.3e} at instance {} exceeds {:.0e}",
        report.max_rel_err,
        report.worst_instance,
        report.tolerance,
    );
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "gradient gate took {:.1}s, budget is 60s",
        elapsed.as_secs_f64(),
    );
}

/// A second seed, so the gate cannot pass by luck of one draw.
#[test]
fn memnet_gradient_gate_second_seed() {
    let report = gradcheck_batch(CheckModel::MemNet, 100, 777, DEFAULT_TOLERANCE).unwrap();
    assert!(
        report.passed(),
        "worst relative error {:.3e} at instance {}",
        report.max_rel_err,
        report.worst_instance,
    );
}

fn memnet_err(model: &MemNetModel, task: &TaskInstance) -> f64 {
    let (_, analytic) = model.sequence_grad(task).unwrap();
    let numeric = fd_gradient(task, &model.params, model.sigma, model.dims.n_mem, 1e-6)
        .unwrap()
        .flatten();
    relative_error(&analytic, &numeric)
}

fn ramp_task(t_len: usize, n_x: usize, n_o: usize, writes: Vec<bool>) -> TaskInstance {
    let inputs: Vec<Vec<f64>> = (0..t_len)
        .map(|t| (0..n_x).map(|j| ((t * n_x + j) as f64 * 0.37).sin()).collect())
        .collect();
    let targets: Vec<Vec<f64>> = (0..t_len)
        .map(|t| (0..n_o).map(|j| ((t * n_o + j) as f64 * 0.53).cos()).collect())
        .collect();
    TaskInstance::new("regime", 0, inputs, targets, vec![true; t_len], writes).unwrap()
}

/// Memory never fills: T < capacity, so empty slots are read at every step
/// and no event is ever evicted.
#[test]
fn regime_memory_never_full() {
    let dims = Dims::new(2, 3, 2, 10).unwrap();
    let model = MemNetModel::new(dims, 1.0, 11).unwrap();
    let task = ramp_task(4, 2, 2, vec![true; 4]);
    let err = memnet_err(&model, &task);
    assert!(err < DEFAULT_TOLERANCE, "partial-memory regime error {err:.3e}");
}

/// Heavy eviction: T far beyond capacity, so most events are overwritten
/// and the gradient paths through evicted events must vanish correctly.
#[test]
fn regime_heavy_eviction() {
    let dims = Dims::new(2, 3, 2, 2).unwrap();
    let model = MemNetModel::new(dims, 2.0, 12).unwrap();
    let task = ramp_task(8, 2, 2, vec![true; 8]);
    let err = memnet_err(&model, &task);
    assert!(err < DEFAULT_TOLERANCE, "eviction regime error {err:.3e}");
}

/// Write gating: several steps compute their (k, v) but never store it, so
/// those events must contribute nothing to any later read's gradient.
#[test]
fn regime_gated_writes() {
    let dims = Dims::new(2, 3, 2, 3).unwrap();
    let model = MemNetModel::new(dims, 1.0, 13).unwrap();
    let task = ramp_task(7, 2, 2, vec![true, false, true, false, false, true, true]);
    let err = memnet_err(&model, &task);
    assert!(err < DEFAULT_TOLERANCE, "gated regime error {err:.3e}");
}

/// The boundary case T == capacity: the memory fills on the final step's
/// push but nothing is ever evicted.
#[test]
fn regime_exactly_full() {
    let dims = Dims::new(1, 2, 1, 5).unwrap();
    let model = MemNetModel::new(dims, 0.5, 14).unwrap();
    let task = ramp_task(5, 1, 1, vec![true; 5]);
    let err = memnet_err(&model, &task);
    assert!(err < DEFAULT_TOLERANCE, "exactly-full regime error {err:.3e}");
}

/// Capacity one: every step evicts the previous event, the tightest FIFO.
#[test]
fn regime_single_slot() {
    let dims = Dims::new(1, 1, 1, 1).unwrap();
    let model = MemNetModel::new(dims, 1.0, 15).unwrap();
    let task = ramp_task(6, 1, 1, vec![true; 6]);
    let err = memnet_err(&model, &task);
    assert!(err < DEFAULT_TOLERANCE, "single-slot regime error {err:.3e}");
}

/// Large sigma flattens the kernel toward 1, small sigma sharpens it toward
/// a delta; both ends must still differentiate cleanly.
#[test]
fn regime_sigma_extremes() {
    for &sigma in &[0.25f64, 16.0] {
        let dims = Dims::new(2, 2, 1, 3).unwrap();
        let model = MemNetModel::new(dims, sigma, 16).unwrap();
        let task = ramp_task(6, 2, 1, vec![true; 6]);
        let err = memnet_err(&model, &task);
        assert!(err < DEFAULT_TOLERANCE, "sigma={sigma} error {err:.3e}");
    }
}

/// The same oracle discipline for the vanilla RNN baseline.
#[test]
fn rnn_gradient_battery() {
    let report = gradcheck_batch(CheckModel::Rnn, 50, 2024, DEFAULT_TOLERANCE).unwrap();
    assert!(
        report.passed(),
        "RNN worst relative error {:.3e} at instance {}",
        report.max_rel_err,
        report.worst_instance,
    );
}

/// And for the LSTM baseline.
#[test]
fn lstm_gradient_battery() {
    let report = gradcheck_batch(CheckModel::Lstm, 50, 2025, DEFAULT_TOLERANCE).unwrap();
    assert!(
        report.passed(),
        "LSTM worst relative error {:.3e} at instance {}",
        report.max_rel_err,
        report.worst_instance,
    );
}

/// Baselines through the generic trait-level oracle on a fixed instance,
/// so a trait-plumbing regression (flatten order, set/get mismatch) fails
/// here even if the batched battery were skipped.
#[test]
fn baseline_trait_oracle_fixed_instances() {
    let task = ramp_task(6, 2, 2, vec![true; 6]);

    let rnn = RnnModel::new(2, 3, 2, 71).unwrap();
    let (_, analytic) = rnn.sequence_grad(&task).unwrap();
    let mut scratch = rnn.clone();
    let numeric = fd_flat(&rnn.flat_params(), 1e-6, |w| {
        scratch.set_flat_params(w)?;
        scratch.sequence_loss(&task)
    })
    .unwrap();
    let err = relative_error(&analytic, &numeric);
    assert!(err < DEFAULT_TOLERANCE, "RNN fixed-instance error {err:.3e}");

    let lstm = LstmModel::new(2, 3, 2, 72).unwrap();
    let (_, analytic) = lstm.sequence_grad(&task).unwrap();
    let mut scratch = lstm.clone();
    let numeric = fd_flat(&lstm.flat_params(), 1e-6, |w| {
        scratch.set_flat_params(w)?;
        scratch.sequence_loss(&task)
    })
    .unwrap();
    let err = relative_error(&analytic, &numeric);
    assert!(err < DEFAULT_TOLERANCE, "LSTM fixed-instance error {err:.3e}");
}
