//! The MemNet cell: linear controllers around an external FIFO key/value
//! memory.
//!
//! One step, in order:
//!
//! 1. project query/key/value from the input and previous hidden state:
//!    `q = Wq_x·x + Wq_h·h_prev` (k, v analogous);
//! 2. read the memory *as it stands before this step writes*: each slot i
//!    scores `sims[i] = exp(−‖q − keys[i]‖² / (2σ))` and the read vector is
//!    the plain weighted sum `r = Σ sims[i]·values[i]` — no normalization,
//!    no softmax;
//! 3. next hidden state `h = Wh_r·r + Wh_x·x + Wh_h·h_prev`;
//! 4. output `o = Wo_r·r + Wo_h·h_prev` (the *previous* hidden state feeds
//!    the output, not the one just computed);
//! 5. push `(k, v)` into the memory: slot 0 is always the newest event and
//!    the oldest falls off the end once capacity is reached;
//! 6. advance the step counter.
//!
//! There are no bias terms anywhere. The similarity exponent divides by
//! `2σ` — sigma acts like a variance, not a standard deviation.

use crate::error::{Error, Result};
use crate::linalg::{add_scaled, sq_dist, Mat};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Model dimensions. All four must be at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Input width.
    pub n_x: usize,
    /// Hidden width; queries, keys, values and reads all share it.
    pub n_h: usize,
    /// Output width.
    pub n_o: usize,
    /// Memory capacity in events.
    pub n_mem: usize,
}

impl Dims {
    pub fn new(n_x: usize, n_h: usize, n_o: usize, n_mem: usize) -> Result<Self> {
        for (name, v) in [("n_x", n_x), ("n_h", n_h), ("n_o", n_o), ("n_mem", n_mem)] {
            if v == 0 {
                return Err(Error::InvalidParam(format!("{name} must be at least 1")));
            }
        }
        Ok(Dims { n_x, n_h, n_o, n_mem })
    }

    /// Total trainable parameter count:
    /// `4·n_h·n_x + 5·n_h² + 2·n_o·n_h` (memory capacity adds none).
    pub fn param_count(&self) -> usize {
        4 * self.n_h * self.n_x + 5 * self.n_h * self.n_h + 2 * self.n_o * self.n_h
    }
}

/// The eleven weight matrices, named `W<target>_<source>`.
///
/// Canonical order — used everywhere a flat view exists (initialization
/// draw order, [`flatten`](Self::flatten), checkpoints): `wq_x, wq_h, wk_x,
/// wk_h, wv_x, wv_h, wh_r, wh_x, wh_h, wo_r, wo_h`, each row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub wq_x: Mat,
    pub wq_h: Mat,
    pub wk_x: Mat,
    pub wk_h: Mat,
    pub wv_x: Mat,
    pub wv_h: Mat,
    pub wh_r: Mat,
    pub wh_x: Mat,
    pub wh_h: Mat,
    pub wo_r: Mat,
    pub wo_h: Mat,
}

impl ModelParams {
    pub fn zeros(dims: &Dims) -> Self {
        let (n_x, n_h, n_o) = (dims.n_x, dims.n_h, dims.n_o);
        ModelParams {
            wq_x: Mat::zeros(n_h, n_x),
            wq_h: Mat::zeros(n_h, n_h),
            wk_x: Mat::zeros(n_h, n_x),
            wk_h: Mat::zeros(n_h, n_h),
            wv_x: Mat::zeros(n_h, n_x),
            wv_h: Mat::zeros(n_h, n_h),
            wh_r: Mat::zeros(n_h, n_h),
            wh_x: Mat::zeros(n_h, n_x),
            wh_h: Mat::zeros(n_h, n_h),
            wo_r: Mat::zeros(n_o, n_h),
            wo_h: Mat::zeros(n_o, n_h),
        }
    }

    /// Seeded initialization: every entry i.i.d. uniform on
    /// `[−1/√fan_in, +1/√fan_in]` where fan_in is the matrix's column count.
    /// The stream is deterministic: matrices are filled in canonical order,
    /// row-major, from a ChaCha8 generator seeded with `seed`.
    pub fn init(dims: &Dims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::zeros(dims);
        for m in p.mats_mut() {
            let bound = 1.0 / (m.cols as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for w in m.data.iter_mut() {
                *w = dist.sample(&mut rng);
            }
        }
        p
    }

    /// Matrices in canonical order.
    pub fn mats(&self) -> [&Mat; 11] {
        [
            &self.wq_x, &self.wq_h, &self.wk_x, &self.wk_h, &self.wv_x, &self.wv_h,
            &self.wh_r, &self.wh_x, &self.wh_h, &self.wo_r, &self.wo_h,
        ]
    }

    pub fn mats_mut(&mut self) -> [&mut Mat; 11] {
        [
            &mut self.wq_x, &mut self.wq_h, &mut self.wk_x, &mut self.wk_h, &mut self.wv_x,
            &mut self.wv_h, &mut self.wh_r, &mut self.wh_x, &mut self.wh_h, &mut self.wo_r,
            &mut self.wo_h,
        ]
    }

    pub fn n_params(&self) -> usize {
        self.mats().iter().map(|m| m.data.len()).sum()
    }

    /// Concatenate all matrices (canonical order, row-major) into one vector.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for m in self.mats() {
            out.extend_from_slice(&m.data);
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten); `flat` must have exactly
    /// `n_params` entries.
    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.n_params();
        if flat.len() != expected {
            return Err(Error::DimMismatch { what: "flat params", expected, got: flat.len() });
        }
        let mut off = 0;
        for m in self.mats_mut() {
            let n = m.data.len();
            m.data.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.mats().iter().fold(0.0, |acc, m| acc.max(m.max_abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.mats().iter().all(|m| m.data.iter().all(|v| v.is_finite()))
    }

    /// The dims these matrices imply (memory capacity is not recoverable
    /// from shapes, so the caller supplies it).
    pub fn dims_with_mem(&self, n_mem: usize) -> Dims {
        Dims { n_x: self.wq_x.cols, n_h: self.wq_x.rows, n_o: self.wo_r.rows, n_mem }
    }

    fn check_shapes(&self, dims: &Dims) -> Result<()> {
        let expect = [
            ("wq_x", dims.n_h, dims.n_x),
            ("wq_h", dims.n_h, dims.n_h),
            ("wk_x", dims.n_h, dims.n_x),
            ("wk_h", dims.n_h, dims.n_h),
            ("wv_x", dims.n_h, dims.n_x),
            ("wv_h", dims.n_h, dims.n_h),
            ("wh_r", dims.n_h, dims.n_h),
            ("wh_x", dims.n_h, dims.n_x),
            ("wh_h", dims.n_h, dims.n_h),
            ("wo_r", dims.n_o, dims.n_h),
            ("wo_h", dims.n_o, dims.n_h),
        ];
        for ((name, rows, cols), m) in expect.iter().zip(self.mats()) {
            if m.rows != *rows || m.cols != *cols {
                return Err(Error::InvalidParam(format!(
                    "{name} has shape {}x{}, expected {rows}x{cols}",
                    m.rows, m.cols
                )));
            }
        }
        Ok(())
    }
}

/// FIFO store of `(key, value)` events. Slot 0 always holds the newest
/// event; pushing when full discards the event in the last slot. Slots that
/// have never been written hold zero keys and zero values, so they
/// contribute `sims[i]·0` to every read.
#[derive(Debug, Clone, PartialEq)]
pub struct EventMemory {
    /// `capacity × n_h`, row i = key of slot i.
    pub keys: Mat,
    /// `capacity × n_h`, row i = value of slot i.
    pub values: Mat,
    /// Total pushes ever performed (monotone; not capped at capacity).
    pub write_count: usize,
}

impl EventMemory {
    pub fn new(capacity: usize, n_h: usize) -> Self {
        EventMemory { keys: Mat::zeros(capacity, n_h), values: Mat::zeros(capacity, n_h), write_count: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.keys.rows
    }

    pub fn n_h(&self) -> usize {
        self.keys.cols
    }

    /// Number of slots currently holding a real event.
    pub fn fill(&self) -> usize {
        self.write_count.min(self.capacity())
    }

    /// Insert `(k, v)` as the newest event, shifting every existing event
    /// one slot deeper and dropping the oldest if the memory is full.
    pub fn push(&mut self, k: &[f64], v: &[f64]) {
        let w = self.n_h();
        assert_eq!(k.len(), w, "push: key length");
        assert_eq!(v.len(), w, "push: value length");
        // Rotating right by one row moves row i to row i+1 and wraps the
        // last row to the front, where the new event overwrites it.
        self.keys.data.rotate_right(w);
        self.keys.data[..w].copy_from_slice(k);
        self.values.data.rotate_right(w);
        self.values.data[..w].copy_from_slice(v);
        self.write_count += 1;
    }

    /// Gaussian-similarity read over *all* slots: returns the read vector
    /// `r = Σ sims[i]·values[i]` and the raw scores. Scores are not
    /// normalized. Empty slots score against zero keys and add zero values.
    pub fn read(&self, q: &[f64], sigma: f64) -> (Vec<f64>, Vec<f64>) {
        debug_assert!(sigma > 0.0 && sigma.is_finite());
        assert_eq!(q.len(), self.n_h(), "read: query length");
        let n = self.capacity();
        let mut sims = Vec::with_capacity(n);
        let mut r = vec![0.0; self.n_h()];
        for i in 0..n {
            let s = (-sq_dist(q, self.keys.row(i)) / (2.0 * sigma)).exp();
            sims.push(s);
            add_scaled(&mut r, s, self.values.row(i));
        }
        (r, sims)
    }
}

/// Gaussian similarity `exp(−‖a − b‖² / (2σ))`. Equal vectors score exactly
/// 1; the score decays with squared distance at a rate set by `sigma`
/// (larger sigma, slower decay).
pub fn gaussian_similarity(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch { what: "similarity operands", expected: a.len(), got: b.len() });
    }
    check_sigma(sigma)?;
    Ok((-sq_dist(a, b) / (2.0 * sigma)).exp())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParam(format!("sigma must be positive and finite, got {sigma}")));
    }
    Ok(())
}

/// The three linear projections of one step:
/// `q = Wq_x·x + Wq_h·h_prev`, likewise for k and v.
pub fn project_qkv(
    x: &[f64],
    h_prev: &[f64],
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n_x = params.wq_x.cols;
    let n_h = params.wq_x.rows;
    if x.len() != n_x {
        return Err(Error::DimMismatch { what: "input x", expected: n_x, got: x.len() });
    }
    if h_prev.len() != n_h {
        return Err(Error::DimMismatch { what: "hidden state", expected: n_h, got: h_prev.len() });
    }
    let mut q = vec![0.0; n_h];
    params.wq_x.matvec_add(x, &mut q);
    params.wq_h.matvec_add(h_prev, &mut q);
    let mut k = vec![0.0; n_h];
    params.wk_x.matvec_add(x, &mut k);
    params.wk_h.matvec_add(h_prev, &mut k);
    let mut v = vec![0.0; n_h];
    params.wv_x.matvec_add(x, &mut v);
    params.wv_h.matvec_add(h_prev, &mut v);
    Ok((q, k, v))
}

/// Read `memory` with query `q`: `(r, sims)` as in [`EventMemory::read`].
/// `sigma` must already be validated positive.
pub fn read_memory(q: &[f64], memory: &EventMemory, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    memory.read(q, sigma)
}

/// Mutable per-sequence state: hidden vector, event memory, step counter.
#[derive(Debug, Clone)]
pub struct StepState {
    pub h: Vec<f64>,
    pub memory: EventMemory,
    /// Steps taken. Counts every step, including write-disabled ones, so it
    /// can run ahead of `memory.write_count` under gating.
    pub t: usize,
}

impl StepState {
    pub fn new(dims: &Dims) -> Self {
        StepState { h: vec![0.0; dims.n_h], memory: EventMemory::new(dims.n_mem, dims.n_h), t: 0 }
    }
}

/// Everything one step computed, recorded for backpropagation and for
/// inspection dumps.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    /// Memory read result (against the pre-push memory).
    pub r: Vec<f64>,
    /// Raw similarity per slot at read time.
    pub sims: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub h: Vec<f64>,
    pub o: Vec<f64>,
    /// Whether this step pushed its event.
    pub write_enabled: bool,
    /// Occupied slots at read time (before this step's own push).
    pub mem_fill: usize,
}

/// One full step with the memory write enabled. See the module docs for the
/// exact order of operations; the crucial details are that the read sees the
/// memory *before* this step's push (a step never retrieves its own event)
/// and that the output mixes the read with the *previous* hidden state.
pub fn step(state: &mut StepState, x: &[f64], params: &ModelParams, sigma: f64) -> Result<(Vec<f64>, StepTrace)> {
    step_gated(state, x, params, sigma, true)
}

/// [`step`] with a write gate: when `write` is false the `(k, v)` event is
/// computed but not stored. Everything else — read, hidden update, output,
/// step counter — behaves identically.
pub fn step_gated(
    state: &mut StepState,
    x: &[f64],
    params: &ModelParams,
    sigma: f64,
    write: bool,
) -> Result<(Vec<f64>, StepTrace)> {
    check_sigma(sigma)?;
    let n_h = params.wq_x.rows;
    let n_o = params.wo_r.rows;
    if state.h.len() != n_h {
        return Err(Error::DimMismatch { what: "state hidden", expected: n_h, got: state.h.len() });
    }
    if state.memory.n_h() != n_h {
        return Err(Error::DimMismatch { what: "memory width", expected: n_h, got: state.memory.n_h() });
    }

    let h_prev = std::mem::take(&mut state.h);
    let (q, k, v) = project_qkv(x, &h_prev, params)?;
    let mem_fill = state.memory.fill();
    let (r, sims) = state.memory.read(&q, sigma);

    let mut h = vec![0.0; n_h];
    params.wh_r.matvec_add(&r, &mut h);
    params.wh_x.matvec_add(x, &mut h);
    params.wh_h.matvec_add(&h_prev, &mut h);

    let mut o = vec![0.0; n_o];
    params.wo_r.matvec_add(&r, &mut o);
    params.wo_h.matvec_add(&h_prev, &mut o);

    if write {
        state.memory.push(&k, &v);
    }

    let trace = StepTrace {
        x: x.to_vec(),
        q,
        k,
        v,
        r,
        sims,
        h_prev,
        h: h.clone(),
        o: o.clone(),
        write_enabled: write,
        mem_fill,
    };
    state.h = h;
    state.t += 1;
    Ok((o, trace))
}

/// A complete model: dimensions, weights, and the similarity width. This is
/// the unit that checkpoints serialize and the trainer optimizes.
#[derive(Debug, Clone)]
pub struct MemNetModel {
    pub dims: Dims,
    pub params: ModelParams,
    pub sigma: f64,
}

impl MemNetModel {
    pub fn new(dims: Dims, sigma: f64, seed: u64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(MemNetModel { params: ModelParams::init(&dims, seed), dims, sigma })
    }

    pub fn from_parts(dims: Dims, params: ModelParams, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        params.check_shapes(&dims)?;
        Ok(MemNetModel { dims, params, sigma })
    }

    pub fn fresh_state(&self) -> StepState {
        StepState::new(&self.dims)
    }

    /// Run a fresh-state forward pass and return the per-step outputs.
    pub fn run_outputs(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let writes = vec![true; inputs.len()];
        self.run_gated(inputs, &writes)
    }

    /// Forward pass with an explicit per-step write gate.
    pub fn run_gated(&self, inputs: &[Vec<f64>], writes: &[bool]) -> Result<Vec<Vec<f64>>> {
        if writes.len() != inputs.len() {
            return Err(Error::DimMismatch { what: "write gates", expected: inputs.len(), got: writes.len() });
        }
        let mut state = self.fresh_state();
        let mut outs = Vec::with_capacity(inputs.len());
        for (x, &w) in inputs.iter().zip(writes) {
            let (o, _) = step_gated(&mut state, x, &self.params, self.sigma, w)?;
            outs.push(o);
        }
        Ok(outs)
    }
}
