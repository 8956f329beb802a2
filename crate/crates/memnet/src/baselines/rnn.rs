//! Vanilla Elman RNN: `h_t = tanh(W_x·x_t + W_h·h_{t−1} + b)`,
//! `o_t = W_o·h_t + b_o`. Unlike the memory model, the output reads the
//! *current* hidden state — the conventional choice for this architecture.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::seq_model::SequenceModel;
use crate::tasks::TaskInstance;
use crate::train::tape::mse_loss;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weights. Flat order: `w_x, w_h, b, w_o, b_o`, matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub w_x: Mat,
    pub w_h: Mat,
    pub b: Vec<f64>,
    pub w_o: Mat,
    pub b_o: Vec<f64>,
}

impl RnnParams {
    pub fn zeros(n_x: usize, n_h: usize, n_o: usize) -> Self {
        RnnParams {
            w_x: Mat::zeros(n_h, n_x),
            w_h: Mat::zeros(n_h, n_h),
            b: vec![0.0; n_h],
            w_o: Mat::zeros(n_o, n_h),
            b_o: vec![0.0; n_o],
        }
    }

    /// Matrices i.i.d. uniform ±1/√fan_in, biases zero.
    pub fn init(n_x: usize, n_h: usize, n_o: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(n_x, n_h, n_o);
        for m in [&mut p.w_x, &mut p.w_h, &mut p.w_o] {
            let bound = 1.0 / (m.cols as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for w in m.data.iter_mut() {
                *w = dist.sample(&mut rng);
            }
        }
        p
    }

    pub fn n_params(&self) -> usize {
        self.w_x.data.len() + self.w_h.data.len() + self.b.len() + self.w_o.data.len() + self.b_o.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(&self.w_x.data);
        out.extend_from_slice(&self.w_h.data);
        out.extend_from_slice(&self.b);
        out.extend_from_slice(&self.w_o.data);
        out.extend_from_slice(&self.b_o);
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.n_params();
        if flat.len() != expected {
            return Err(Error::DimMismatch { what: "rnn flat params", expected, got: flat.len() });
        }
        let mut off = 0;
        for chunk in [
            &mut self.w_x.data,
            &mut self.w_h.data,
            &mut self.b,
            &mut self.w_o.data,
            &mut self.b_o,
        ] {
            let n = chunk.len();
            chunk.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }
}

/// One step: returns `(h, o)`.
pub fn rnn_step(h_prev: &[f64], x: &[f64], params: &RnnParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let n_h = params.w_x.rows;
    if x.len() != params.w_x.cols {
        return Err(Error::DimMismatch { what: "rnn input", expected: params.w_x.cols, got: x.len() });
    }
    if h_prev.len() != n_h {
        return Err(Error::DimMismatch { what: "rnn hidden", expected: n_h, got: h_prev.len() });
    }
    let mut a = params.b.clone();
    params.w_x.matvec_add(x, &mut a);
    params.w_h.matvec_add(h_prev, &mut a);
    let h: Vec<f64> = a.iter().map(|v| v.tanh()).collect();
    let mut o = params.b_o.clone();
    params.w_o.matvec_add(&h, &mut o);
    Ok((h, o))
}

#[derive(Debug, Clone)]
pub struct RnnModel {
    pub n_x: usize,
    pub n_h: usize,
    pub n_o: usize,
    pub params: RnnParams,
}

impl RnnModel {
    pub fn new(n_x: usize, n_h: usize, n_o: usize, seed: u64) -> Result<Self> {
        for (name, v) in [("n_x", n_x), ("n_h", n_h), ("n_o", n_o)] {
            if v == 0 {
                return Err(Error::InvalidParam(format!("{name} must be at least 1")));
            }
        }
        Ok(RnnModel { n_x, n_h, n_o, params: RnnParams::init(n_x, n_h, n_o, seed) })
    }
}

impl SequenceModel for RnnModel {
    fn n_params(&self) -> usize {
        self.params.n_params()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.params.flatten()
    }

    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        self.params.set_from_flat(flat)
    }

    fn sequence_loss(&self, task: &TaskInstance) -> Result<f64> {
        let mut h = vec![0.0; self.n_h];
        let mut loss = 0.0;
        for t in 0..task.len() {
            let (h_new, o) = rnn_step(&h, &task.inputs[t], &self.params)?;
            h = h_new;
            if task.mask[t] {
                loss += mse_loss(&o, &task.targets[t])?;
            }
        }
        Ok(loss)
    }

    fn sequence_grad(&self, task: &TaskInstance) -> Result<(f64, Vec<f64>)> {
        let t_total = task.len();
        let p = &self.params;
        // Forward, keeping every hidden state and output.
        let mut hs: Vec<Vec<f64>> = Vec::with_capacity(t_total);
        let mut os: Vec<Vec<f64>> = Vec::with_capacity(t_total);
        let mut loss = 0.0;
        let mut h = vec![0.0; self.n_h];
        for t in 0..t_total {
            let (h_new, o) = rnn_step(&h, &task.inputs[t], p)?;
            if task.mask[t] {
                loss += mse_loss(&o, &task.targets[t])?;
            }
            h = h_new.clone();
            hs.push(h_new);
            os.push(o);
        }

        // Backward through time.
        let mut g = RnnParams::zeros(self.n_x, self.n_h, self.n_o);
        let zero_h = vec![0.0; self.n_h];
        let mut dh_next = vec![0.0; self.n_h];
        for t in (0..t_total).rev() {
            let h_prev = if t == 0 { &zero_h } else { &hs[t - 1] };
            let do_t: Vec<f64> = if task.mask[t] {
                os[t].iter().zip(&task.targets[t]).map(|(o, d)| o - d).collect()
            } else {
                vec![0.0; self.n_o]
            };
            g.w_o.add_outer(&do_t, &hs[t]);
            for (gb, d) in g.b_o.iter_mut().zip(&do_t) {
                *gb += d;
            }
            let mut dh = dh_next;
            p.w_o.tr_matvec_add(&do_t, &mut dh);
            // Through the tanh: da = dh ⊙ (1 − h²).
            let da: Vec<f64> = dh.iter().zip(&hs[t]).map(|(d, h)| d * (1.0 - h * h)).collect();
            g.w_x.add_outer(&da, &task.inputs[t]);
            g.w_h.add_outer(&da, h_prev);
            for (gb, d) in g.b.iter_mut().zip(&da) {
                *gb += d;
            }
            dh_next = vec![0.0; self.n_h];
            p.w_h.tr_matvec_add(&da, &mut dh_next);
        }
        Ok((loss, g.flatten()))
    }

    fn run_outputs(&self, inputs: &[Vec<f64>], _writes: &[bool]) -> Result<Vec<Vec<f64>>> {
        let mut h = vec![0.0; self.n_h];
        let mut outs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (h_new, o) = rnn_step(&h, x, &self.params)?;
            h = h_new;
            outs.push(o);
        }
        Ok(outs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::fd::fd_flat;
    use crate::train::gradcheck::relative_error;

    #[test]
    fn step_hand_values() {
        // n = 1 everywhere: w_x = 2, w_h = 0.5, b = 0.1, w_o = 3, b_o = −1.
        let mut p = RnnParams::zeros(1, 1, 1);
        p.w_x.data[0] = 2.0;
        p.w_h.data[0] = 0.5;
        p.b[0] = 0.1;
        p.w_o.data[0] = 3.0;
        p.b_o[0] = -1.0;
        let (h, o) = rnn_step(&[0.4], &[0.3], &p).unwrap();
        let a: f64 = 2.0 * 0.3 + 0.5 * 0.4 + 0.1;
        assert!((h[0] - a.tanh()).abs() < 1e-15);
        assert!((o[0] - (3.0 * a.tanh() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn output_reads_current_hidden_state() {
        // With w_x = w_o = 1 (rest zero), o₁ = tanh(x₁) ≠ 0 immediately.
        let mut p = RnnParams::zeros(1, 1, 1);
        p.w_x.data[0] = 1.0;
        p.w_o.data[0] = 1.0;
        let (_, o) = rnn_step(&[0.0], &[2.0], &p).unwrap();
        assert!((o[0] - 2.0f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn param_count_and_flat_round_trip() {
        let m = RnnModel::new(1, 12, 1, 0).unwrap();
        // n_h(n_x + n_h) + n_h + n_o·n_h + n_o = 12·13 + 12 + 12 + 1 = 181.
        assert_eq!(m.n_params(), 181);
        let flat = m.flat_params();
        let mut m2 = RnnModel::new(1, 12, 1, 1).unwrap();
        m2.set_flat_params(&flat).unwrap();
        assert_eq!(m2.params, m.params);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let model = RnnModel::new(2, 3, 2, 17).unwrap();
        let task = TaskInstance::new(
            "t",
            0,
            vec![vec![0.5, -1.0], vec![1.0, 0.2], vec![-0.3, 0.8], vec![0.0, -0.5]],
            vec![vec![0.1, 0.0], vec![-0.2, 0.4], vec![0.3, 0.3], vec![0.0, 1.0]],
            vec![true, false, true, true],
            vec![true; 4],
        )
        .unwrap();
        let (_, analytic) = model.sequence_grad(&task).unwrap();
        let base = model.flat_params();
        let mut scratch = model.clone();
        let numeric = fd_flat(&base, 1e-6, |w| {
            scratch.set_flat_params(w)?;
            scratch.sequence_loss(&task)
        })
        .unwrap();
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-6, "rnn gradient off by {err}");
    }
}
