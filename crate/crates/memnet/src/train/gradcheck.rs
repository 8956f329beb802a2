//! Randomized gradient verification: analytic backpropagation against the
//! central-difference oracle over batches of small random instances.
//!
//! Instances deliberately cover the regimes where the memory bookkeeping
//! can go wrong: sequences longer than the memory (eviction in play),
//! sequences shorter than it (empty slots in play), write-gated steps, and
//! partially masked losses.

use crate::baselines::{LstmModel, RnnModel};
use crate::error::{Error, Result};
use crate::model::{Dims, MemNetModel};
use crate::seq_model::SequenceModel;
use crate::tasks::TaskInstance;
use crate::train::fd::{fd_flat, fd_gradient};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_TOLERANCE: f64 = 1e-5;
const FD_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckModel {
    MemNet,
    Rnn,
    Lstm,
}

impl CheckModel {
    pub fn name(self) -> &'static str {
        match self {
            CheckModel::MemNet => "memnet",
            CheckModel::Rnn => "rnn",
            CheckModel::Lstm => "lstm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub model: CheckModel,
    pub tolerance: f64,
    /// Worst relative error of each instance.
    pub per_instance: Vec<f64>,
    pub max_rel_err: f64,
    pub worst_instance: usize,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

/// Worst-case elementwise relative error between two gradient vectors:
/// `max_i |a_i − b_i| / max(|a_i|, |b_i|, floor)`. The floor keeps
/// structurally zero entries from dividing rounding noise by itself; it is
/// scaled to the instance's largest gradient component.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    debug_assert_eq!(analytic.len(), numeric.len());
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-4 * scale.max(1.0);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Run `n_instances` randomized comparisons for one model family and
/// report the worst relative error seen. Deterministic in `seed`.
pub fn gradcheck_batch(
    model: CheckModel,
    n_instances: usize,
    seed: u64,
    tolerance: f64,
) -> Result<GradcheckReport> {
    if n_instances == 0 {
        return Err(Error::InvalidParam("gradcheck needs at least one instance".into()));
    }
    let per_instance = crate::par::try_map_indexed(n_instances, |i| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
        match model {
            CheckModel::MemNet => memnet_instance_err(i, &mut rng),
            CheckModel::Rnn => rnn_instance_err(&mut rng),
            CheckModel::Lstm => lstm_instance_err(&mut rng),
        }
    })?;
    let (worst_instance, max_rel_err) = per_instance
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |(wi, we), (i, e)| if e > we { (i, e) } else { (wi, we) });
    Ok(GradcheckReport { model, tolerance, per_instance, max_rel_err, worst_instance })
}

fn random_task(
    rng: &mut ChaCha8Rng,
    t_len: usize,
    n_x: usize,
    n_o: usize,
    gate_writes: bool,
) -> TaskInstance {
    let unit = Uniform::new_inclusive(-1.0, 1.0);
    let inputs: Vec<Vec<f64>> =
        (0..t_len).map(|_| (0..n_x).map(|_| unit.sample(rng)).collect()).collect();
    let targets: Vec<Vec<f64>> =
        (0..t_len).map(|_| (0..n_o).map(|_| unit.sample(rng)).collect()).collect();
    let mut mask: Vec<bool> = (0..t_len).map(|_| rng.gen_bool(0.7)).collect();
    if !mask.iter().any(|&m| m) {
        mask[t_len - 1] = true;
    }
    let writes: Vec<bool> = if gate_writes {
        (0..t_len).map(|_| rng.gen_bool(0.75)).collect()
    } else {
        vec![true; t_len]
    };
    TaskInstance::new("gradcheck", 0, inputs, targets, mask, writes).unwrap()
}

/// MemNet: analytic tape gradient vs the dedicated parameter-space oracle.
/// Even instances force eviction (T > capacity); odd instances leave the
/// memory partially empty (T ≤ capacity); every third instance gates writes.
fn memnet_instance_err(i: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let n_x = rng.gen_range(1..=4);
    let n_h = rng.gen_range(1..=4);
    let n_o = rng.gen_range(1..=4);
    let (n_mem, t_len) = if i % 2 == 0 {
        let n_mem = rng.gen_range(1..=3);
        (n_mem, rng.gen_range(n_mem + 1..=8))
    } else {
        let n_mem = rng.gen_range(4..=8);
        (n_mem, rng.gen_range(2..=n_mem.min(8)))
    };
    let sigma = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
    let dims = Dims::new(n_x, n_h, n_o, n_mem)?;
    let model = MemNetModel::new(dims, sigma, rng.gen())?;
    let task = random_task(rng, t_len, n_x, n_o, i % 3 == 2);

    let (_, analytic) = model.sequence_grad(&task)?;
    let numeric = fd_gradient(&task, &model.params, sigma, n_mem, FD_EPSILON)?.flatten();
    Ok(relative_error(&analytic, &numeric))
}

fn rnn_instance_err(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n_x = rng.gen_range(1..=4);
    let n_h = rng.gen_range(1..=4);
    let n_o = rng.gen_range(1..=4);
    let t_len = rng.gen_range(2..=8);
    let model = RnnModel::new(n_x, n_h, n_o, rng.gen())?;
    let task = random_task(rng, t_len, n_x, n_o, false);
    trait_fd_err(&model, &task)
}

fn lstm_instance_err(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n_x = rng.gen_range(1..=4);
    let n_h = rng.gen_range(1..=4);
    let n_o = rng.gen_range(1..=4);
    let t_len = rng.gen_range(2..=8);
    let model = LstmModel::new(n_x, n_h, n_o, rng.gen())?;
    let task = random_task(rng, t_len, n_x, n_o, false);
    trait_fd_err(&model, &task)
}

/// Generic comparison used by the baselines: the analytic gradient against
/// central differences of the trait-level loss.
fn trait_fd_err<M: SequenceModel + Clone>(model: &M, task: &TaskInstance) -> Result<f64> {
    let (_, analytic) = model.sequence_grad(task)?;
    let base = model.flat_params();
    let mut scratch = model.clone();
    let numeric = fd_flat(&base, FD_EPSILON, |w| {
        scratch.set_flat_params(w)?;
        scratch.sequence_loss(task)
    })?;
    Ok(relative_error(&analytic, &numeric))
}
