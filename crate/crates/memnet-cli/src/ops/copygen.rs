//! Length-generalization probe for the copy and reverse tasks: score a
//! trained model on freshly drawn sequences at a set of lengths, tracking
//! both bit-level accuracy and, per sequence, exactly which recall
//! positions came out right.

use anyhow::Result;
use memnet::tasks::copy::{bit_accuracy, gen_copy, gen_reverse};
use memnet::SequenceModel;
use std::fmt::Write as _;

/// Base for evaluation-set seeds. Training corpora draw from the range
/// below `1 << 48`, so evaluation sequences can never repeat a training
/// sequence.
pub const EVAL_SEED_BASE: u64 = 1 << 48;

/// Seed for evaluation sequence `i` at length `len`.
pub fn eval_seed(base: u64, len: usize, i: usize) -> u64 {
    base.wrapping_add((len as u64) << 32).wrapping_add(i as u64)
}

/// Scores for one probed length.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthResult {
    pub len: usize,
    /// Fraction of individual recalled bits correct, over all sequences.
    pub bit_accuracy: f64,
    /// Sequences recalled without a single bit error.
    pub exact_sequences: usize,
    pub total_sequences: usize,
    /// One row per sequence, one cell per recall position: whether the
    /// whole bit vector at that position was exact.
    pub grid: Vec<Vec<bool>>,
}

impl LengthResult {
    /// Correctness grid as CSV: rows are sequences, columns are recall
    /// positions, cells are 1 (exact) or 0.
    pub fn grid_csv(&self) -> String {
        let mut out = String::from("seq");
        for p in 1..=self.len {
            let _ = write!(out, ",p{p}");
        }
        out.push('\n');
        for (i, row) in self.grid.iter().enumerate() {
            let _ = write!(out, "{i}");
            for &c in row {
                out.push_str(if c { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopyGenReport {
    pub reverse: bool,
    pub n_bits: usize,
    pub lengths: Vec<LengthResult>,
}

impl CopyGenReport {
    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("length,bit_accuracy,exact,total\n");
        for r in &self.lengths {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.len, r.bit_accuracy, r.exact_sequences, r.total_sequences
            );
        }
        out
    }

    pub fn result_for(&self, len: usize) -> Option<&LengthResult> {
        self.lengths.iter().find(|r| r.len == len)
    }
}

/// Evaluate `model` on `per_length` fresh sequences at each probe length.
/// Sequences are drawn from the evaluation seed block, disjoint from any
/// training corpus.
pub fn copy_generalization(
    model: &impl SequenceModel,
    reverse: bool,
    lengths: &[usize],
    per_length: usize,
    n_bits: usize,
    base_seed: u64,
) -> Result<CopyGenReport> {
    anyhow::ensure!(per_length > 0, "need at least one sequence per length");
    let gen = if reverse { gen_reverse } else { gen_copy };
    let mut results = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let mut grid = Vec::with_capacity(per_length);
        let mut bits_right = 0.0;
        let mut exact = 0usize;
        for i in 0..per_length {
            let task = gen(len, n_bits, eval_seed(base_seed, len, i))?;
            let outs = model.run_outputs(&task.inputs, &task.writes)?;
            let (acc, positions) = bit_accuracy(&outs, &task)?;
            bits_right += acc;
            if positions.iter().all(|&p| p) {
                exact += 1;
            }
            grid.push(positions);
        }
        results.push(LengthResult {
            len,
            bit_accuracy: bits_right / per_length as f64,
            exact_sequences: exact,
            total_sequences: per_length,
            grid,
        });
    }
    Ok(CopyGenReport { reverse, n_bits, lengths: results })
}

/// Per grid row, the length of the correct prefix: the index of the first
/// wrong position, or the row length when the whole row is exact.
pub fn first_error_positions(grid: &[Vec<bool>]) -> Vec<usize> {
    grid.iter().map(|row| row.iter().position(|&c| !c).unwrap_or(row.len())).collect()
}

/// Median of a small list (average of the middle two for even lengths).
pub fn median(values: &[usize]) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}
