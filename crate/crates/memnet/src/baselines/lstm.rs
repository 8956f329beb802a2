//! Standard LSTM with input/forget/output gates and a tanh candidate,
//! plus a linear readout, trained with hand-written BPTT. Also provides
//! the detrended recursive forecaster used for time-series baselines:
//! least-squares linear trend + LSTM on the residuals.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::seq_model::SequenceModel;
use crate::tasks::TaskInstance;
use crate::train::tape::mse_loss;
use crate::train::trainer::{train_sequences, TrainConfig};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Gate weights `w` (input), `u` (recurrent), `b` (bias) for i/f/g/o, then
/// the readout `w_y`, `b_y`. Flat order:
/// `w_i,u_i,b_i, w_f,u_f,b_f, w_g,u_g,b_g, w_o,u_o,b_o, w_y,b_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_i: Mat,
    pub u_i: Mat,
    pub b_i: Vec<f64>,
    pub w_f: Mat,
    pub u_f: Mat,
    pub b_f: Vec<f64>,
    pub w_g: Mat,
    pub u_g: Mat,
    pub b_g: Vec<f64>,
    pub w_o: Mat,
    pub u_o: Mat,
    pub b_o: Vec<f64>,
    pub w_y: Mat,
    pub b_y: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(n_x: usize, n_h: usize, n_o: usize) -> Self {
        LstmParams {
            w_i: Mat::zeros(n_h, n_x),
            u_i: Mat::zeros(n_h, n_h),
            b_i: vec![0.0; n_h],
            w_f: Mat::zeros(n_h, n_x),
            u_f: Mat::zeros(n_h, n_h),
            b_f: vec![0.0; n_h],
            w_g: Mat::zeros(n_h, n_x),
            u_g: Mat::zeros(n_h, n_h),
            b_g: vec![0.0; n_h],
            w_o: Mat::zeros(n_h, n_x),
            u_o: Mat::zeros(n_h, n_h),
            b_o: vec![0.0; n_h],
            w_y: Mat::zeros(n_o, n_h),
            b_y: vec![0.0; n_o],
        }
    }

    /// Matrices i.i.d. uniform ±1/√fan_in, all biases zero.
    pub fn init(n_x: usize, n_h: usize, n_o: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(n_x, n_h, n_o);
        for m in [
            &mut p.w_i, &mut p.u_i, &mut p.w_f, &mut p.u_f, &mut p.w_g, &mut p.u_g, &mut p.w_o,
            &mut p.u_o, &mut p.w_y,
        ] {
            let bound = 1.0 / (m.cols as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for w in m.data.iter_mut() {
                *w = dist.sample(&mut rng);
            }
        }
        p
    }

    fn chunks_mut(&mut self) -> [&mut Vec<f64>; 14] {
        [
            &mut self.w_i.data, &mut self.u_i.data, &mut self.b_i,
            &mut self.w_f.data, &mut self.u_f.data, &mut self.b_f,
            &mut self.w_g.data, &mut self.u_g.data, &mut self.b_g,
            &mut self.w_o.data, &mut self.u_o.data, &mut self.b_o,
            &mut self.w_y.data, &mut self.b_y,
        ]
    }

    fn chunks(&self) -> [&Vec<f64>; 14] {
        [
            &self.w_i.data, &self.u_i.data, &self.b_i,
            &self.w_f.data, &self.u_f.data, &self.b_f,
            &self.w_g.data, &self.u_g.data, &self.b_g,
            &self.w_o.data, &self.u_o.data, &self.b_o,
            &self.w_y.data, &self.b_y,
        ]
    }

    pub fn n_params(&self) -> usize {
        self.chunks().iter().map(|c| c.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for c in self.chunks() {
            out.extend_from_slice(c);
        }
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.n_params();
        if flat.len() != expected {
            return Err(Error::DimMismatch { what: "lstm flat params", expected, got: flat.len() });
        }
        let mut off = 0;
        for c in self.chunks_mut() {
            let n = c.len();
            c.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One LSTM step: returns `(c, h, y)`.
///
/// With all-zero parameters the gates sit at σ(0) = ½ and the candidate at
/// tanh(0) = 0, so `c = ½·c_prev` — a useful fixed point for testing.
pub fn lstm_step(
    c_prev: &[f64],
    h_prev: &[f64],
    x: &[f64],
    params: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (c, h, y, _) = lstm_step_traced(c_prev, h_prev, x, params)?;
    Ok((c, h, y))
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
struct LstmTrace {
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    hc: Vec<f64>,
    h: Vec<f64>,
    y: Vec<f64>,
}

fn lstm_step_traced(
    c_prev: &[f64],
    h_prev: &[f64],
    x: &[f64],
    p: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, LstmTrace)> {
    let n_h = p.w_i.rows;
    if x.len() != p.w_i.cols {
        return Err(Error::DimMismatch { what: "lstm input", expected: p.w_i.cols, got: x.len() });
    }
    if h_prev.len() != n_h || c_prev.len() != n_h {
        return Err(Error::DimMismatch { what: "lstm state", expected: n_h, got: h_prev.len().max(c_prev.len()) });
    }
    let gate = |w: &Mat, u: &Mat, b: &[f64]| {
        let mut z = b.to_vec();
        w.matvec_add(x, &mut z);
        u.matvec_add(h_prev, &mut z);
        z
    };
    let i: Vec<f64> = gate(&p.w_i, &p.u_i, &p.b_i).iter().map(|&z| sigmoid(z)).collect();
    let f: Vec<f64> = gate(&p.w_f, &p.u_f, &p.b_f).iter().map(|&z| sigmoid(z)).collect();
    let g: Vec<f64> = gate(&p.w_g, &p.u_g, &p.b_g).iter().map(|&z| z.tanh()).collect();
    let o: Vec<f64> = gate(&p.w_o, &p.u_o, &p.b_o).iter().map(|&z| sigmoid(z)).collect();
    let c: Vec<f64> = (0..n_h).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
    let hc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..n_h).map(|j| o[j] * hc[j]).collect();
    let mut y = p.b_y.clone();
    p.w_y.matvec_add(&h, &mut y);
    let trace = LstmTrace {
        i,
        f,
        g,
        o,
        c: c.clone(),
        hc,
        h: h.clone(),
        y: y.clone(),
    };
    Ok((c, h, y, trace))
}

#[derive(Debug, Clone)]
pub struct LstmModel {
    pub n_x: usize,
    pub n_h: usize,
    pub n_o: usize,
    pub params: LstmParams,
}

impl LstmModel {
    pub fn new(n_x: usize, n_h: usize, n_o: usize, seed: u64) -> Result<Self> {
        for (name, v) in [("n_x", n_x), ("n_h", n_h), ("n_o", n_o)] {
            if v == 0 {
                return Err(Error::InvalidParam(format!("{name} must be at least 1")));
            }
        }
        Ok(LstmModel { n_x, n_h, n_o, params: LstmParams::init(n_x, n_h, n_o, seed) })
    }
}

impl SequenceModel for LstmModel {
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
        let mut c = vec![0.0; self.n_h];
        let mut h = vec![0.0; self.n_h];
        let mut loss = 0.0;
        for t in 0..task.len() {
            let (c_new, h_new, y) = lstm_step(&c, &h, &task.inputs[t], &self.params)?;
            c = c_new;
            h = h_new;
            if task.mask[t] {
                loss += mse_loss(&y, &task.targets[t])?;
            }
        }
        Ok(loss)
    }

    fn sequence_grad(&self, task: &TaskInstance) -> Result<(f64, Vec<f64>)> {
        let t_total = task.len();
        let p = &self.params;
        let n_h = self.n_h;

        let mut traces: Vec<LstmTrace> = Vec::with_capacity(t_total);
        let mut loss = 0.0;
        let mut c = vec![0.0; n_h];
        let mut h = vec![0.0; n_h];
        for t in 0..t_total {
            let (c_new, h_new, y, tr) = lstm_step_traced(&c, &h, &task.inputs[t], p)?;
            if task.mask[t] {
                loss += mse_loss(&y, &task.targets[t])?;
            }
            c = c_new;
            h = h_new;
            traces.push(tr);
        }

        let mut grad = LstmParams::zeros(self.n_x, n_h, self.n_o);
        let zero = vec![0.0; n_h];
        let mut dh_next = vec![0.0; n_h];
        let mut dc_next = vec![0.0; n_h];
        for t in (0..t_total).rev() {
            let tr = &traces[t];
            let x = &task.inputs[t];
            let h_prev = if t == 0 { &zero } else { &traces[t - 1].h };
            let c_prev = if t == 0 { &zero } else { &traces[t - 1].c };

            let dy: Vec<f64> = if task.mask[t] {
                tr.y.iter().zip(&task.targets[t]).map(|(y, d)| y - d).collect()
            } else {
                vec![0.0; self.n_o]
            };
            grad.w_y.add_outer(&dy, &tr.h);
            for (gb, d) in grad.b_y.iter_mut().zip(&dy) {
                *gb += d;
            }
            let mut dh = dh_next;
            p.w_y.tr_matvec_add(&dy, &mut dh);

            // h = o ⊙ tanh(c); c = f ⊙ c_prev + i ⊙ g.
            let mut dzi = vec![0.0; n_h];
            let mut dzf = vec![0.0; n_h];
            let mut dzg = vec![0.0; n_h];
            let mut dzo = vec![0.0; n_h];
            let mut dc = vec![0.0; n_h];
            for j in 0..n_h {
                let doo = dh[j] * tr.hc[j];
                dzo[j] = doo * tr.o[j] * (1.0 - tr.o[j]);
                dc[j] = dh[j] * tr.o[j] * (1.0 - tr.hc[j] * tr.hc[j]) + dc_next[j];
                let df = dc[j] * c_prev[j];
                dzf[j] = df * tr.f[j] * (1.0 - tr.f[j]);
                let di = dc[j] * tr.g[j];
                dzi[j] = di * tr.i[j] * (1.0 - tr.i[j]);
                let dg = dc[j] * tr.i[j];
                dzg[j] = dg * (1.0 - tr.g[j] * tr.g[j]);
            }

            for (dz, (w, (u, b))) in [
                (&dzi, (&mut grad.w_i, (&mut grad.u_i, &mut grad.b_i))),
                (&dzf, (&mut grad.w_f, (&mut grad.u_f, &mut grad.b_f))),
                (&dzg, (&mut grad.w_g, (&mut grad.u_g, &mut grad.b_g))),
                (&dzo, (&mut grad.w_o, (&mut grad.u_o, &mut grad.b_o))),
            ] {
                w.add_outer(dz, x);
                u.add_outer(dz, h_prev);
                for (gb, d) in b.iter_mut().zip(dz) {
                    *gb += d;
                }
            }

            let mut dh_prev = vec![0.0; n_h];
            p.u_i.tr_matvec_add(&dzi, &mut dh_prev);
            p.u_f.tr_matvec_add(&dzf, &mut dh_prev);
            p.u_g.tr_matvec_add(&dzg, &mut dh_prev);
            p.u_o.tr_matvec_add(&dzo, &mut dh_prev);
            dh_next = dh_prev;
            dc_next = (0..n_h).map(|j| dc[j] * tr.f[j]).collect();
        }
        Ok((loss, grad.flatten()))
    }

    fn run_outputs(&self, inputs: &[Vec<f64>], _writes: &[bool]) -> Result<Vec<Vec<f64>>> {
        let mut c = vec![0.0; self.n_h];
        let mut h = vec![0.0; self.n_h];
        let mut outs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (c_new, h_new, y) = lstm_step(&c, &h, x, &self.params)?;
            c = c_new;
            h = h_new;
            outs.push(y);
        }
        Ok(outs)
    }
}

/// Least-squares straight line through `(t, series[t])`, t = 0, 1, …:
/// returns `(slope, intercept)`.
pub fn linear_trend(series: &[f64]) -> Result<(f64, f64)> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InvalidParam("trend fit needs at least two points".into()));
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0;
    let y_mean = series.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in series.iter().enumerate() {
        let dt = t as f64 - t_mean;
        num += dt * (y - y_mean);
        den += dt * dt;
    }
    let slope = num / den;
    Ok((slope, y_mean - slope * t_mean))
}

#[derive(Debug, Clone)]
pub struct DetrendConfig {
    pub n_h: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for DetrendConfig {
    fn default() -> Self {
        DetrendConfig { n_h: 12, lr: 0.01, epochs: 200, seed: 0 }
    }
}

/// Forecast `horizon` points past the end of `train`:
///
/// 1. fit a least-squares linear trend to `train`;
/// 2. train an LSTM one-step-ahead on the (unit-variance scaled)
///    residuals;
/// 3. warm the state up over the residual series, then free-run the model
///    on its own predictions for `horizon` steps;
/// 4. undo the scaling and add the extrapolated trend back.
///
/// The internal scaling is what makes step 2 trainable on raw-unit series
/// — tanh and sigmoid saturate if residuals in the hundreds hit the gates
/// directly.
pub fn lstm_detrended_forecast(train: &[f64], horizon: usize, cfg: &DetrendConfig) -> Result<Vec<f64>> {
    if train.len() < 3 {
        return Err(Error::InvalidParam("need at least three points to fit and train".into()));
    }
    let n = train.len();
    let (slope, intercept) = linear_trend(train)?;
    let resid: Vec<f64> = train.iter().enumerate().map(|(t, y)| y - (slope * t as f64 + intercept)).collect();
    let scale = {
        let var = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;
        let s = var.sqrt();
        if s < 1e-12 {
            1.0
        } else {
            s
        }
    };
    let z: Vec<f64> = resid.iter().map(|r| r / scale).collect();

    let inputs: Vec<Vec<f64>> = z[..n - 1].iter().map(|&v| vec![v]).collect();
    let targets: Vec<Vec<f64>> = z[1..].iter().map(|&v| vec![v]).collect();
    let task = TaskInstance::dense("detrended", cfg.seed, inputs, targets)?;
    let mut model = LstmModel::new(1, cfg.n_h, 1, cfg.seed)?;
    let tcfg = TrainConfig::new(cfg.lr, cfg.epochs, cfg.seed);
    train_sequences(&mut model, &[task], &tcfg, |_| f64::NAN)?;

    // Warm up over the full residual series; the last output is the first
    // out-of-sample prediction.
    let mut c = vec![0.0; cfg.n_h];
    let mut h = vec![0.0; cfg.n_h];
    let mut last_y = 0.0;
    for &v in &z {
        let (c_new, h_new, y) = lstm_step(&c, &h, &[v], &model.params)?;
        c = c_new;
        h = h_new;
        last_y = y[0];
    }
    let mut out = Vec::with_capacity(horizon);
    let mut pred = last_y;
    for j in 0..horizon {
        out.push(slope * (n + j) as f64 + intercept + scale * pred);
        if j + 1 < horizon {
            let (c_new, h_new, y) = lstm_step(&c, &h, &[pred], &model.params)?;
            c = c_new;
            h = h_new;
            pred = y[0];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::fd::fd_flat;
    use crate::train::gradcheck::relative_error;

    #[test]
    fn zero_params_halve_the_cell_state() {
        let p = LstmParams::zeros(1, 2, 1);
        let (c, h, y) = lstm_step(&[2.0, -4.0], &[0.3, 0.3], &[1.0], &p).unwrap();
        assert_eq!(c, vec![1.0, -2.0], "gates at ½, candidate 0 ⇒ c = ½·c_prev");
        assert!((h[0] - 0.5 * 1.0f64.tanh()).abs() < 1e-15);
        assert!((h[1] + 0.5 * 2.0f64.tanh()).abs() < 1e-15);
        assert_eq!(y, vec![0.0]);
    }

    #[test]
    fn param_count() {
        // 4·(n_h·n_x + n_h² + n_h) + n_o·n_h + n_o = 4·168 + 13 = 685.
        let m = LstmModel::new(1, 12, 1, 0).unwrap();
        assert_eq!(m.n_params(), 685);
        let flat = m.flat_params();
        let mut m2 = LstmModel::new(1, 12, 1, 9).unwrap();
        m2.set_flat_params(&flat).unwrap();
        assert_eq!(m2.params, m.params);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let model = LstmModel::new(2, 3, 1, 23).unwrap();
        let task = TaskInstance::new(
            "t",
            0,
            vec![vec![0.5, -1.0], vec![1.0, 0.2], vec![-0.3, 0.8], vec![0.9, 0.1], vec![-0.6, 0.4]],
            vec![vec![0.1], vec![-0.2], vec![0.3], vec![0.0], vec![0.5]],
            vec![true, true, false, true, true],
            vec![true; 5],
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
        assert!(err < 1e-6, "lstm gradient off by {err}");
    }

    #[test]
    fn trend_fit_recovers_an_exact_line() {
        let series: Vec<f64> = (0..20).map(|t| 3.0 * t as f64 + 2.0).collect();
        let (a, b) = linear_trend(&series).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
        assert!((b - 2.0).abs() < 1e-12);
        assert!(linear_trend(&[1.0]).is_err());
    }

    /// On a perfectly linear series the residuals are zero; with zero
    /// biases the LSTM then outputs exactly zero whatever its weights, so
    /// the forecast must be the extrapolated line itself.
    #[test]
    fn forecast_of_a_line_is_the_line()  {
        let series: Vec<f64> = (0..30).map(|t| 3.0 * t as f64 + 2.0).collect();
        let cfg = DetrendConfig { n_h: 4, lr: 0.01, epochs: 3, seed: 1 };
        let fc = lstm_detrended_forecast(&series, 5, &cfg).unwrap();
        assert_eq!(fc.len(), 5);
        for (j, v) in fc.iter().enumerate() {
            let want = 3.0 * (30 + j) as f64 + 2.0;
            assert!((v - want).abs() < 1e-9, "forecast[{j}] = {v}, want {want}");
        }
        assert_eq!(lstm_detrended_forecast(&series, 0, &cfg).unwrap(), Vec::<f64>::new());
    }
}
