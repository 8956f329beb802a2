//! A common face for every trainable sequence model in the crate, so the
//! trainer, the gradient checker, and the CLI treat MemNet and the
//! baselines identically: flat parameters in, masked sequence loss and
//! flat gradients out.

use crate::error::Result;
use crate::model::MemNetModel;
use crate::tasks::TaskInstance;
use crate::train::backward::backward;
use crate::train::tape::{forward_record, sequence_loss};

pub trait SequenceModel {
    fn n_params(&self) -> usize;
    fn flat_params(&self) -> Vec<f64>;
    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()>;
    /// Total masked loss `Σ_t mask[t]·½‖d_t − o_t‖²` from a fresh state.
    fn sequence_loss(&self, task: &TaskInstance) -> Result<f64>;
    /// Loss plus its exact gradient in flat form (same order as
    /// [`flat_params`](Self::flat_params)).
    fn sequence_grad(&self, task: &TaskInstance) -> Result<(f64, Vec<f64>)>;
    /// Fresh-state forward pass honoring the task's write gates; returns
    /// the per-step outputs.
    fn run_outputs(&self, task_inputs: &[Vec<f64>], writes: &[bool]) -> Result<Vec<Vec<f64>>>;
}

impl SequenceModel for MemNetModel {
    fn n_params(&self) -> usize {
        self.dims.param_count()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.params.flatten()
    }

    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        self.params.set_from_flat(flat)
    }

    fn sequence_loss(&self, task: &TaskInstance) -> Result<f64> {
        sequence_loss(task, &self.params, self.sigma, self.dims.n_mem)
    }

    fn sequence_grad(&self, task: &TaskInstance) -> Result<(f64, Vec<f64>)> {
        let (tape, loss) = forward_record(task, &self.params, self.sigma, self.dims.n_mem)?;
        let grads = backward(&tape, &self.params, self.sigma)?;
        Ok((loss, grads.flatten()))
    }

    fn run_outputs(&self, inputs: &[Vec<f64>], writes: &[bool]) -> Result<Vec<Vec<f64>>> {
        self.run_gated(inputs, writes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dims;

    #[test]
    fn trait_and_free_functions_agree() {
        let dims = Dims::new(2, 3, 1, 4).unwrap();
        let model = MemNetModel::new(dims, 1.0, 5).unwrap();
        let task = TaskInstance::dense(
            "t",
            0,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![vec![0.5], vec![-0.5], vec![0.0]],
        )
        .unwrap();
        let (loss, grad) = model.sequence_grad(&task).unwrap();
        assert_eq!(loss, model.sequence_loss(&task).unwrap());
        assert_eq!(grad.len(), model.n_params());

        let mut clone = model.clone();
        clone.set_flat_params(&model.flat_params()).unwrap();
        assert_eq!(clone.params, model.params);
    }
}
