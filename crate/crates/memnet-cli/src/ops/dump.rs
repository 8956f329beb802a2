//! Inspection artifacts for a memory model run: the per-step similarity
//! profile over every slot (the raw material for a memory-access heatmap)
//! and the final key/value matrices, newest slot first.

use anyhow::Result;
use memnet::{step_gated, MemNetModel};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryDump {
    /// `sims[t][slot]`: similarity of step `t + 1`'s query against each
    /// memory slot at read time (before that step's own write).
    pub sims: Vec<Vec<f64>>,
    /// Final key matrix, one row per slot, slot 0 newest.
    pub final_keys: Vec<Vec<f64>>,
    /// Final value matrix, same layout.
    pub final_values: Vec<Vec<f64>>,
}

impl MemoryDump {
    pub fn n_mem(&self) -> usize {
        self.final_keys.len()
    }

    /// Heatmap CSV: one row per step, one column per slot.
    pub fn sims_csv(&self) -> String {
        let mut out = String::from("step");
        for s in 0..self.n_mem() {
            let _ = write!(out, ",slot{s}");
        }
        out.push('\n');
        for (t, row) in self.sims.iter().enumerate() {
            let _ = write!(out, "{}", t + 1);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn keys_csv(&self) -> String {
        matrix_csv(&self.final_keys)
    }

    pub fn values_csv(&self) -> String {
        matrix_csv(&self.final_values)
    }
}

/// CSV for a slot-per-row matrix: header `slot,h0..h{n−1}`.
fn matrix_csv(rows: &[Vec<f64>]) -> String {
    let width = rows.first().map_or(0, Vec::len);
    let mut out = String::from("slot");
    for c in 0..width {
        let _ = write!(out, ",h{c}");
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Run `model` over `inputs` from fresh state and capture the similarity
/// trace plus the final memory contents.
pub fn dump_memory_artifacts(
    model: &MemNetModel,
    inputs: &[Vec<f64>],
    writes: &[bool],
) -> Result<MemoryDump> {
    anyhow::ensure!(
        writes.len() == inputs.len(),
        "write gates ({}) must match inputs ({})",
        writes.len(),
        inputs.len(),
    );
    let mut state = model.fresh_state();
    let mut sims = Vec::with_capacity(inputs.len());
    for (x, &w) in inputs.iter().zip(writes) {
        let (_, trace) = step_gated(&mut state, x, &model.params, model.sigma, w)?;
        sims.push(trace.sims);
    }
    let n_mem = model.dims.n_mem;
    let final_keys = (0..n_mem).map(|s| state.memory.keys.row(s).to_vec()).collect();
    let final_values = (0..n_mem).map(|s| state.memory.values.row(s).to_vec()).collect();
    Ok(MemoryDump { sims, final_keys, final_values })
}
