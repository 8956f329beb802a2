//! Central-difference gradient oracle.
//!
//! This is the independent check the analytic backward pass is held to: it
//! knows nothing about the chain rule, it only perturbs one weight at a
//! time and re-runs the forward loss. Slow (two forward passes per
//! parameter) and deliberately simple.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::tasks::TaskInstance;
use crate::train::backward::Gradients;
use crate::train::tape::sequence_loss;

/// Central differences over a flat parameter vector. The step for weight i
/// is `epsilon · max(1, |w_i|)`, so tiny and huge weights both get a
/// sensibly scaled perturbation. The divisor uses the actually realized
/// `w⁺ − w⁻` to cancel representation rounding.
pub fn fd_flat(
    base: &[f64],
    epsilon: f64,
    mut eval: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParam(format!("fd epsilon must be positive, got {epsilon}")));
    }
    let mut work = base.to_vec();
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let w = base[i];
        let h = epsilon * w.abs().max(1.0);
        let w_plus = w + h;
        let w_minus = w - h;
        work[i] = w_plus;
        let j_plus = eval(&work)?;
        work[i] = w_minus;
        let j_minus = eval(&work)?;
        work[i] = w;
        grad.push((j_plus - j_minus) / (w_plus - w_minus));
    }
    Ok(grad)
}

/// Finite-difference gradient of the masked sequence loss with respect to
/// every weight, shaped like [`Gradients`].
pub fn fd_gradient(
    task: &TaskInstance,
    params: &ModelParams,
    sigma: f64,
    n_mem: usize,
    epsilon: f64,
) -> Result<Gradients> {
    let base = params.flatten();
    let mut scratch = params.clone();
    let flat = fd_flat(&base, epsilon, |w| {
        scratch.set_from_flat(w)?;
        sequence_loss(task, &scratch, sigma, n_mem)
    })?;
    let mut grads = Gradients::zeros(&params.dims_with_mem(n_mem));
    grads.set_from_flat(&flat)?;
    Ok(grads)
}
