//! Flat binary checkpoints. One format serves all three model families:
//!
//! ```text
//! "MEMN"            4-byte magic
//! version: u32 LE   currently 1
//! kind:    u8       0 = memory model, 1 = rnn, 2 = lstm
//! n_x, n_h, n_o, n_mem: u32 LE    (n_mem = 0 for the baselines)
//! sigma:   f64 LE                  (0.0 for the baselines)
//! count:   u64 LE   number of parameters
//! payload: count × f64 LE, in the model's canonical flat order
//! ```
//!
//! Round-trips are bit-exact: weights pass through `to_le_bytes`
//! untouched.

use crate::baselines::{LstmModel, LstmParams, RnnModel, RnnParams};
use crate::error::{Error, Result};
use crate::model::{Dims, MemNetModel, ModelParams};
use crate::seq_model::SequenceModel;
use std::path::Path;

const MAGIC: &[u8; 4] = b"MEMN";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub enum Checkpoint {
    MemNet(MemNetModel),
    Rnn(RnnModel),
    Lstm(LstmModel),
}

impl Checkpoint {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Checkpoint::MemNet(_) => "memnet",
            Checkpoint::Rnn(_) => "rnn",
            Checkpoint::Lstm(_) => "lstm",
        }
    }

    /// `(n_x, n_h, n_o, n_mem)`; `n_mem` is 0 for the baselines.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        match self {
            Checkpoint::MemNet(m) => (m.dims.n_x, m.dims.n_h, m.dims.n_o, m.dims.n_mem),
            Checkpoint::Rnn(m) => (m.n_x, m.n_h, m.n_o, 0),
            Checkpoint::Lstm(m) => (m.n_x, m.n_h, m.n_o, 0),
        }
    }

    fn kind_byte(&self) -> u8 {
        match self {
            Checkpoint::MemNet(_) => 0,
            Checkpoint::Rnn(_) => 1,
            Checkpoint::Lstm(_) => 2,
        }
    }
}

/// A checkpoint is usable directly as a model: every call delegates to the
/// wrapped concrete model, so callers holding "whatever was on disk" can
/// train and evaluate without matching on the kind.
impl crate::seq_model::SequenceModel for Checkpoint {
    fn n_params(&self) -> usize {
        match self {
            Checkpoint::MemNet(m) => m.n_params(),
            Checkpoint::Rnn(m) => m.n_params(),
            Checkpoint::Lstm(m) => m.n_params(),
        }
    }

    fn flat_params(&self) -> Vec<f64> {
        match self {
            Checkpoint::MemNet(m) => m.flat_params(),
            Checkpoint::Rnn(m) => m.flat_params(),
            Checkpoint::Lstm(m) => m.flat_params(),
        }
    }

    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        match self {
            Checkpoint::MemNet(m) => m.set_flat_params(flat),
            Checkpoint::Rnn(m) => m.set_flat_params(flat),
            Checkpoint::Lstm(m) => m.set_flat_params(flat),
        }
    }

    fn sequence_loss(&self, task: &crate::tasks::TaskInstance) -> Result<f64> {
        match self {
            Checkpoint::MemNet(m) => m.sequence_loss(task),
            Checkpoint::Rnn(m) => m.sequence_loss(task),
            Checkpoint::Lstm(m) => m.sequence_loss(task),
        }
    }

    fn sequence_grad(&self, task: &crate::tasks::TaskInstance) -> Result<(f64, Vec<f64>)> {
        match self {
            Checkpoint::MemNet(m) => m.sequence_grad(task),
            Checkpoint::Rnn(m) => m.sequence_grad(task),
            Checkpoint::Lstm(m) => m.sequence_grad(task),
        }
    }

    fn run_outputs(&self, inputs: &[Vec<f64>], writes: &[bool]) -> Result<Vec<Vec<f64>>> {
        match self {
            Checkpoint::MemNet(m) => SequenceModel::run_outputs(m, inputs, writes),
            Checkpoint::Rnn(m) => SequenceModel::run_outputs(m, inputs, writes),
            Checkpoint::Lstm(m) => SequenceModel::run_outputs(m, inputs, writes),
        }
    }
}

pub fn to_bytes(ckpt: &Checkpoint) -> Vec<u8> {
    let (dims, sigma, flat): ([u32; 4], f64, Vec<f64>) = match ckpt {
        Checkpoint::MemNet(m) => (
            [m.dims.n_x as u32, m.dims.n_h as u32, m.dims.n_o as u32, m.dims.n_mem as u32],
            m.sigma,
            m.params.flatten(),
        ),
        Checkpoint::Rnn(m) => {
            ([m.n_x as u32, m.n_h as u32, m.n_o as u32, 0], 0.0, m.params.flatten())
        }
        Checkpoint::Lstm(m) => {
            ([m.n_x as u32, m.n_h as u32, m.n_o as u32, 0], 0.0, m.params.flatten())
        }
    };
    let mut out = Vec::with_capacity(4 + 4 + 1 + 16 + 8 + 8 + flat.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(ckpt.kind_byte());
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&sigma.to_le_bytes());
    out.extend_from_slice(&(flat.len() as u64).to_le_bytes());
    for w in flat {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "checkpoint truncated at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a model checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let kind = r.take(1)?[0];
    let n_x = r.u32()? as usize;
    let n_h = r.u32()? as usize;
    let n_o = r.u32()? as usize;
    let n_mem = r.u32()? as usize;
    let sigma = r.f64()?;
    let count = r.u64()? as usize;
    let mut flat = Vec::with_capacity(count);
    for _ in 0..count {
        flat.push(r.f64()?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after payload", bytes.len() - r.pos)));
    }

    match kind {
        0 => {
            let dims = Dims::new(n_x, n_h, n_o, n_mem)?;
            if count != dims.param_count() {
                return Err(Error::Format(format!(
                    "payload has {count} weights, dims imply {}",
                    dims.param_count()
                )));
            }
            let mut params = ModelParams::zeros(&dims);
            params.set_from_flat(&flat)?;
            Ok(Checkpoint::MemNet(MemNetModel::from_parts(dims, params, sigma)?))
        }
        1 => {
            let mut params = RnnParams::zeros(n_x, n_h, n_o);
            if count != params.n_params() {
                return Err(Error::Format(format!(
                    "payload has {count} weights, rnn dims imply {}",
                    params.n_params()
                )));
            }
            params.set_from_flat(&flat)?;
            let mut m = RnnModel::new(n_x, n_h, n_o, 0)?;
            m.params = params;
            Ok(Checkpoint::Rnn(m))
        }
        2 => {
            let mut params = LstmParams::zeros(n_x, n_h, n_o);
            if count != params.n_params() {
                return Err(Error::Format(format!(
                    "payload has {count} weights, lstm dims imply {}",
                    params.n_params()
                )));
            }
            params.set_from_flat(&flat)?;
            let mut m = LstmModel::new(n_x, n_h, n_o, 0)?;
            m.params = params;
            Ok(Checkpoint::Lstm(m))
        }
        k => Err(Error::Format(format!("unknown model kind {k}"))),
    }
}

pub fn save_model(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(ckpt))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Checkpoint> {
    from_bytes(&std::fs::read(path)?)
}
