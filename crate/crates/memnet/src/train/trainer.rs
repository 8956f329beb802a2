//! Per-sequence training loop shared by every model behind
//! [`SequenceModel`]: one Adam update per sequence, fresh state for every
//! sequence, seeded shuffling, per-epoch history.

use crate::error::{Error, Result};
use crate::seq_model::SequenceModel;
use crate::tasks::TaskInstance;
use crate::train::adam::AdamState;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Seed for the epoch shuffles (parameter init is seeded separately,
    /// by whoever built the model).
    pub seed: u64,
    /// Visit sequences in a fresh random order each epoch; with `false`
    /// the given order is kept.
    pub shuffle: bool,
    /// Optional global-norm gradient clip. Off by default.
    pub clip_norm: Option<f64>,
    /// Evaluate `metric` every this many epochs (and always on the last);
    /// steps in between repeat the previous value. 1 = every epoch.
    pub metric_every: usize,
}

impl TrainConfig {
    pub fn new(lr: f64, epochs: usize, seed: u64) -> Self {
        TrainConfig { lr, epochs, seed, shuffle: true, clip_norm: None, metric_every: 1 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStat {
    pub epoch: usize,
    /// Mean loss per masked step over the epoch's sequences (as visited,
    /// i.e. pre-update for each sequence).
    pub mean_loss: f64,
    /// Task-level metric from the caller's closure (NaN if never computed).
    pub metric: f64,
}

#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStat>,
    /// Set when a loss or parameter went non-finite; training keeps the
    /// last finite parameters and stops early.
    pub diverged: bool,
}

impl TrainHistory {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map(|e| e.mean_loss).unwrap_or(f64::NAN)
    }

    pub fn final_metric(&self) -> f64 {
        self.epochs.last().map(|e| e.metric).unwrap_or(f64::NAN)
    }

    /// `epoch,mean_loss,task_metric` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,task_metric\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{},{}", e.epoch, e.mean_loss, e.metric);
        }
        s
    }
}

/// Train `model` on `tasks`: each epoch visits every sequence (shuffled if
/// configured) and applies one Adam update per sequence from its exact
/// gradient. `metric` is evaluated on the model between epochs for the
/// history's third column — pass `|_| f64::NAN` if there is no task metric.
///
/// Divergence (non-finite loss, gradient, or parameter) rolls the model
/// back to the last finite parameters, flags the history, and returns it;
/// the caller decides what to do with the run.
pub fn train_sequences<M: SequenceModel>(
    model: &mut M,
    tasks: &[TaskInstance],
    cfg: &TrainConfig,
    mut metric: impl FnMut(&M) -> f64,
) -> Result<TrainHistory> {
    if tasks.is_empty() {
        return Err(Error::InvalidParam("no training sequences given".into()));
    }
    if cfg.metric_every == 0 {
        return Err(Error::InvalidParam("metric_every must be at least 1".into()));
    }
    let mut adam = AdamState::new(model.n_params(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    let total_masked: usize = tasks.iter().map(|t| t.masked_steps()).sum();

    let mut history = TrainHistory { epochs: Vec::with_capacity(cfg.epochs), diverged: false };
    let mut params = model.flat_params();
    let mut last_good = params.clone();
    let mut last_metric = f64::NAN;

    'epochs: for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        for &i in &order {
            let (loss, mut grad) = model.sequence_grad(&tasks[i])?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                history.diverged = true;
                model.set_flat_params(&last_good)?;
                break 'epochs;
            }
            loss_sum += loss;
            if let Some(max_norm) = cfg.clip_norm {
                clip_global_norm(&mut grad, max_norm);
            }
            adam.update(&mut params, &grad)?;
            if params.iter().any(|p| !p.is_finite()) {
                history.diverged = true;
                model.set_flat_params(&last_good)?;
                break 'epochs;
            }
            model.set_flat_params(&params)?;
        }
        last_good.copy_from_slice(&params);
        let mean_loss = loss_sum / total_masked as f64;
        if epoch % cfg.metric_every == 0 || epoch + 1 == cfg.epochs {
            last_metric = metric(model);
        }
        history.epochs.push(EpochStat { epoch, mean_loss, metric: last_metric });
    }
    Ok(history)
}

fn clip_global_norm(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dims, MemNetModel};

    fn tiny_tasks() -> Vec<TaskInstance> {
        // Predict the previous input — solvable through Wo_h·h with h
        // remembering x, or through the memory; either way trainable.
        (0..4u64)
            .map(|s| {
                let xs: Vec<Vec<f64>> =
                    (0..6).map(|i| vec![((i as f64) + s as f64 * 0.3).sin()]).collect();
                let ds: Vec<Vec<f64>> = (0..6)
                    .map(|i| if i == 0 { vec![0.0] } else { xs[i - 1].clone() })
                    .collect();
                TaskInstance::dense(format!("lag-{s}"), s, xs, ds).unwrap()
            })
            .collect()
    }

    #[test]
    fn loss_decreases_and_history_lines_up() {
        let dims = Dims::new(1, 4, 1, 8).unwrap();
        let mut model = MemNetModel::new(dims, 1.0, 3).unwrap();
        let tasks = tiny_tasks();
        let cfg = TrainConfig::new(0.01, 40, 7);
        let hist = train_sequences(&mut model, &tasks, &cfg, |_| f64::NAN).unwrap();
        assert_eq!(hist.epochs.len(), 40);
        assert!(!hist.diverged);
        let first = hist.epochs[0].mean_loss;
        let last = hist.final_loss();
        assert!(last < 0.5 * first, "no progress: {first} → {last}");
        // CSV: header plus one row per epoch.
        let csv = hist.to_csv();
        assert_eq!(csv.lines().count(), 41);
        assert!(csv.starts_with("epoch,mean_loss,task_metric\n"));
    }

    #[test]
    fn same_seed_same_run() {
        let dims = Dims::new(1, 3, 1, 4).unwrap();
        let tasks = tiny_tasks();
        let cfg = TrainConfig::new(0.02, 10, 42);
        let mut a = MemNetModel::new(dims, 1.0, 9).unwrap();
        let mut b = MemNetModel::new(dims, 1.0, 9).unwrap();
        let ha = train_sequences(&mut a, &tasks, &cfg, |_| 0.0).unwrap();
        let hb = train_sequences(&mut b, &tasks, &cfg, |_| 0.0).unwrap();
        assert_eq!(a.params, b.params, "training must be bit-reproducible");
        let la: Vec<f64> = ha.epochs.iter().map(|e| e.mean_loss).collect();
        let lb: Vec<f64> = hb.epochs.iter().map(|e| e.mean_loss).collect();
        assert_eq!(la, lb);
    }

    #[test]
    fn divergence_is_flagged_not_fatal() {
        let dims = Dims::new(1, 2, 1, 2).unwrap();
        let mut model = MemNetModel::new(dims, 1e-300, 1).unwrap();
        // An absurd learning rate on a stiff loss blows the run up; sigma
        // near denormal range makes similarity gradients explosive.
        let xs = vec![vec![1e3], vec![-1e3], vec![1e3]];
        let ds = vec![vec![-1e3], vec![1e3], vec![-1e3]];
        let tasks = vec![TaskInstance::dense("boom", 0, xs, ds).unwrap()];
        let cfg = TrainConfig { lr: 1e280, ..TrainConfig::new(0.0, 50, 0) };
        let hist = train_sequences(&mut model, &tasks, &cfg, |_| f64::NAN).unwrap();
        assert!(hist.diverged, "expected the run to be flagged as diverged");
        assert!(model.flat_params().iter().all(|p| p.is_finite()), "model must stay finite");
    }

    #[test]
    fn metric_every_skips_evaluations() {
        let dims = Dims::new(1, 2, 1, 2).unwrap();
        let mut model = MemNetModel::new(dims, 1.0, 2).unwrap();
        let tasks = tiny_tasks();
        let mut calls = 0;
        let cfg = TrainConfig { metric_every: 5, ..TrainConfig::new(0.01, 11, 1) };
        let hist = train_sequences(&mut model, &tasks, &cfg, |_| {
            calls += 1;
            calls as f64
        })
        .unwrap();
        // Epochs 0, 5, 10 — and 10 is also the final epoch.
        assert_eq!(calls, 3);
        assert_eq!(hist.epochs[4].metric, 1.0, "gap epochs repeat the last value");
        assert_eq!(hist.final_metric(), 3.0);
    }

    #[test]
    fn rejects_empty_task_list() {
        let dims = Dims::new(1, 2, 1, 2).unwrap();
        let mut model = MemNetModel::new(dims, 1.0, 0).unwrap();
        let cfg = TrainConfig::new(0.01, 1, 0);
        assert!(train_sequences(&mut model, &[], &cfg, |_| 0.0).is_err());
    }
}
