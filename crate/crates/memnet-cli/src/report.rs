//! Run reports: the JSON artifact a run writes. Everything except the
//! wall-clock field is a pure function of (config, seeds), so identical
//! runs produce identical report bodies.

use crate::config::RunConfig;
use serde::{Deserialize, Serialize};

/// Map non-finite numbers to `None` so the JSON stays round-trippable
/// (JSON has no NaN/Inf literals).
pub fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub n_params: usize,
    pub seeds: Vec<SeedReport>,
    /// Seed with the best (lowest) final task metric among non-diverged
    /// seeds; absent if every seed diverged before the first metric.
    pub best_seed: Option<u64>,
    /// Not part of the deterministic report body.
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    /// Training hit a non-finite loss/gradient/parameter and rolled back
    /// to the last finite parameters.
    pub diverged: bool,
    /// Mean training loss per masked step in the last completed epoch;
    /// absent when no epoch ran.
    pub final_train_loss: Option<f64>,
    /// Final task metric (lower is better); absent when never computed.
    pub final_metric: Option<f64>,
    pub eval: EvalSummary,
    /// Files this seed wrote, relative to the output directory.
    pub artifacts: Vec<String>,
}

/// Task-level evaluation of the trained model. Metrics are mean squared
/// error per scalar output, bit accuracy, or QA error rate depending on
/// the task.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum EvalSummary {
    Henon {
        train_mse: Option<f64>,
        val_mse: Option<f64>,
    },
    Airline {
        train_mse: Option<f64>,
        val_mse: Option<f64>,
    },
    CopyReverse {
        /// Mean fraction of correct bits over the probe set.
        probe_bit_accuracy: Option<f64>,
        /// Number of probe sequences reproduced bit-exactly.
        probe_exact: usize,
        probe_total: usize,
    },
    Babi {
        dev_error_rate: Option<f64>,
        test_error_rate: Option<f64>,
    },
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
