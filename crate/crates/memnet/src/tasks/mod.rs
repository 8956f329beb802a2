//! Task generators and loaders. Every task — generated or parsed — is
//! normalized into [`TaskInstance`]: one input vector per step, one target
//! vector per step, a loss mask, and a per-step memory write gate.

pub mod airline;
pub mod babi;
pub mod copy;
pub mod henon;
pub mod kv_demo;

pub use babi::one_hot;

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// One training/evaluation sequence.
///
/// `mask[t]` selects the steps whose output error enters the loss;
/// `writes[t]` gates the memory push at step t (always true for tasks that
/// don't control writing). All four per-step vectors have equal length, and
/// at least one mask entry is set.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub name: String,
    pub seed: u64,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub writes: Vec<bool>,
}

impl TaskInstance {
    pub fn new(
        name: impl Into<String>,
        seed: u64,
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        mask: Vec<bool>,
        writes: Vec<bool>,
    ) -> Result<Self> {
        let t = inputs.len();
        if t == 0 {
            return Err(Error::InvalidParam("task must have at least one step".into()));
        }
        for (what, len) in [("targets", targets.len()), ("mask", mask.len()), ("writes", writes.len())] {
            if len != t {
                return Err(Error::InvalidParam(format!("{what} has {len} steps, inputs have {t}")));
            }
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidParam("task mask selects no steps".into()));
        }
        let n_x = inputs[0].len();
        if inputs.iter().any(|x| x.len() != n_x) {
            return Err(Error::InvalidParam("ragged input vectors".into()));
        }
        let n_o = targets[0].len();
        if targets.iter().any(|d| d.len() != n_o) {
            return Err(Error::InvalidParam("ragged target vectors".into()));
        }
        Ok(TaskInstance { name: name.into(), seed, inputs, targets, mask, writes })
    }

    /// Convenience constructor for tasks that score every step and always
    /// write memory.
    pub fn dense(
        name: impl Into<String>,
        seed: u64,
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let t = inputs.len();
        Self::new(name, seed, inputs, targets, vec![true; t], vec![true; t])
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn target_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn masked_steps(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Render the sequence as CSV for external inspection: one row per step
    /// with columns `t, x0.., d0.., mask, write`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "t");
        for i in 0..self.input_dim() {
            let _ = write!(s, ",x{i}");
        }
        for i in 0..self.target_dim() {
            let _ = write!(s, ",d{i}");
        }
        s.push_str(",mask,write\n");
        for t in 0..self.len() {
            let _ = write!(s, "{t}");
            for v in &self.inputs[t] {
                let _ = write!(s, ",{v}");
            }
            for v in &self.targets[t] {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{},{}", self.mask[t] as u8, self.writes[t] as u8);
        }
        s
    }
}
