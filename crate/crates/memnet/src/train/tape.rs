//! Forward pass with recording. The tape keeps every step's trace plus the
//! bookkeeping needed to map memory slots back to the steps that produced
//! them, which is what lets the backward pass route read gradients into
//! earlier time steps.

use crate::error::{Error, Result};
use crate::model::{step_gated, ModelParams, StepState, StepTrace};
use crate::tasks::TaskInstance;

/// Record of one full sequence pass.
#[derive(Debug, Clone)]
pub struct ComputationTape {
    pub steps: Vec<StepTrace>,
    pub targets: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    /// Step indices that pushed an event, in push order. Slot i of the
    /// memory as step t read it was produced by step
    /// `push_steps[pushes_before[t] − 1 − i]`.
    pub push_steps: Vec<usize>,
    /// Pushes performed before each step began, i.e. the write count the
    /// step's read saw.
    pub pushes_before: Vec<usize>,
    /// Memory capacity the pass ran with.
    pub n_mem: usize,
}

impl ComputationTape {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The step that wrote slot `slot` as step `t` read it, or `None` if
    /// that slot was still empty.
    pub fn producer(&self, t: usize, slot: usize) -> Option<usize> {
        let before = self.pushes_before[t];
        if slot >= before.min(self.n_mem) {
            return None;
        }
        Some(self.push_steps[before - 1 - slot])
    }
}

/// Half squared error `½‖d − o‖²` for one step.
pub fn mse_loss(o: &[f64], d: &[f64]) -> Result<f64> {
    if o.len() != d.len() {
        return Err(Error::DimMismatch { what: "loss operands", expected: d.len(), got: o.len() });
    }
    Ok(0.5 * o.iter().zip(d).map(|(oi, di)| (oi - di) * (oi - di)).sum::<f64>())
}

/// Run the sequence from a fresh state with memory capacity `n_mem`,
/// recording every step. Returns the tape and the total masked loss
/// `Σ_t mask[t] · ½‖d_t − o_t‖²`.
pub fn forward_record(
    task: &TaskInstance,
    params: &ModelParams,
    sigma: f64,
    n_mem: usize,
) -> Result<(ComputationTape, f64)> {
    let n_o = params.wo_r.rows;
    if task.target_dim() != n_o {
        return Err(Error::DimMismatch { what: "target width", expected: n_o, got: task.target_dim() });
    }
    if n_mem == 0 {
        return Err(Error::InvalidParam("memory capacity must be at least 1".into()));
    }
    let mut state = StepState::new(&params.dims_with_mem(n_mem));
    let t_total = task.len();
    let mut steps = Vec::with_capacity(t_total);
    let mut push_steps = Vec::new();
    let mut pushes_before = Vec::with_capacity(t_total);
    let mut loss = 0.0;
    for t in 0..t_total {
        pushes_before.push(state.memory.write_count);
        let (o, trace) = step_gated(&mut state, &task.inputs[t], params, sigma, task.writes[t])?;
        if task.mask[t] {
            loss += mse_loss(&o, &task.targets[t])?;
        }
        if trace.write_enabled {
            push_steps.push(t);
        }
        steps.push(trace);
    }
    let tape = ComputationTape {
        steps,
        targets: task.targets.clone(),
        mask: task.mask.clone(),
        push_steps,
        pushes_before,
        n_mem,
    };
    Ok((tape, loss))
}

/// Plain forward loss without recording: the exact quantity
/// [`forward_record`] reports, computed with the same step function. The
/// finite-difference oracle perturbs parameters through this entry point.
pub fn sequence_loss(task: &TaskInstance, params: &ModelParams, sigma: f64, n_mem: usize) -> Result<f64> {
    let mut state = StepState::new(&params.dims_with_mem(n_mem));
    let mut loss = 0.0;
    for t in 0..task.len() {
        let (o, _) = step_gated(&mut state, &task.inputs[t], params, sigma, task.writes[t])?;
        if task.mask[t] {
            loss += mse_loss(&o, &task.targets[t])?;
        }
    }
    Ok(loss)
}
