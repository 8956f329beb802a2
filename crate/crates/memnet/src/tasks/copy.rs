//! Copy and reverse tasks: present a sequence of random bit vectors, then a
//! delimiter, then ask the model to reproduce the sequence (in order, or
//! reversed) while it sees only a recall marker.
//!
//! Input layout (`n_bits + 2` channels): channels `0..n_bits` carry the
//! payload bits, channel `n_bits` is the delimiter flag (one step), channel
//! `n_bits + 1` is the recall marker, held at 1 during the whole answer
//! phase. Targets are `n_bits` wide and only the recall steps are scored.

use crate::error::{Error, Result};
use crate::tasks::TaskInstance;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_N_BITS: usize = 8;

pub fn gen_copy(len: usize, n_bits: usize, seed: u64) -> Result<TaskInstance> {
    gen(len, n_bits, seed, false)
}

pub fn gen_reverse(len: usize, n_bits: usize, seed: u64) -> Result<TaskInstance> {
    gen(len, n_bits, seed, true)
}

fn gen(len: usize, n_bits: usize, seed: u64, reverse: bool) -> Result<TaskInstance> {
    if len == 0 || n_bits == 0 {
        return Err(Error::InvalidParam("copy task needs len ≥ 1 and n_bits ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_x = n_bits + 2;
    let total = 2 * len + 1;
    let payload: Vec<Vec<f64>> = (0..len)
        .map(|_| (0..n_bits).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut inputs = Vec::with_capacity(total);
    let mut targets = vec![vec![0.0; n_bits]; total];
    let mut mask = vec![false; total];
    for bits in &payload {
        let mut x = vec![0.0; n_x];
        x[..n_bits].copy_from_slice(bits);
        inputs.push(x);
    }
    let mut delim = vec![0.0; n_x];
    delim[n_bits] = 1.0;
    inputs.push(delim);
    for i in 0..len {
        let mut x = vec![0.0; n_x];
        x[n_bits + 1] = 1.0;
        inputs.push(x);
        let src = if reverse { len - 1 - i } else { i };
        targets[len + 1 + i] = payload[src].clone();
        mask[len + 1 + i] = true;
    }

    let kind = if reverse { "reverse" } else { "copy" };
    TaskInstance::new(
        format!("{kind}-len{len}-seed{seed}"),
        seed,
        inputs,
        targets,
        mask,
        vec![true; total],
    )
}

/// Score thresholded outputs against the task's recall steps. Returns the
/// fraction of individual bits correct and, per recall position, whether
/// the whole vector was exact. A bit is read as 1 when the output is
/// ≥ 0.5.
pub fn bit_accuracy(outputs: &[Vec<f64>], task: &TaskInstance) -> Result<(f64, Vec<bool>)> {
    if outputs.len() != task.len() {
        return Err(Error::DimMismatch { what: "output steps", expected: task.len(), got: outputs.len() });
    }
    let mut bits_total = 0usize;
    let mut bits_right = 0usize;
    let mut positions = Vec::new();
    for t in 0..task.len() {
        if !task.mask[t] {
            continue;
        }
        if outputs[t].len() != task.target_dim() {
            return Err(Error::DimMismatch {
                what: "output width",
                expected: task.target_dim(),
                got: outputs[t].len(),
            });
        }
        let mut all = true;
        for (o, d) in outputs[t].iter().zip(&task.targets[t]) {
            let bit = if *o >= 0.5 { 1.0 } else { 0.0 };
            bits_total += 1;
            if bit == *d {
                bits_right += 1;
            } else {
                all = false;
            }
        }
        positions.push(all);
    }
    Ok((bits_right as f64 / bits_total as f64, positions))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_of_a_copy_instance() {
        let t = gen_copy(5, 8, 3).unwrap();
        assert_eq!(t.len(), 11, "len + delimiter + len");
        assert_eq!(t.input_dim(), 10);
        assert_eq!(t.target_dim(), 8);
        assert_eq!(t.masked_steps(), 5, "only recall steps are scored");
        // Present phase: no delimiter/recall flags, unmasked.
        for step in 0..5 {
            assert_eq!(t.inputs[step][8], 0.0);
            assert_eq!(t.inputs[step][9], 0.0);
            assert!(!t.mask[step]);
        }
        // Delimiter fires exactly once, at step 5.
        assert_eq!(t.inputs[5][8], 1.0);
        assert!(t.inputs[5][..8].iter().all(|&b| b == 0.0));
        // Recall phase: marker on, payload channels silent, masked, and
        // targets echo the presented bits in order.
        for i in 0..5 {
            let step = 6 + i;
            assert_eq!(t.inputs[step][9], 1.0);
            assert!(t.inputs[step][..9].iter().all(|&b| b == 0.0));
            assert!(t.mask[step]);
            assert_eq!(t.targets[step], t.inputs[i][..8].to_vec());
        }
        // Bits really are bits.
        assert!(t.inputs.iter().flatten().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn reverse_reverses() {
        let c = gen_copy(4, 3, 9).unwrap();
        let r = gen_reverse(4, 3, 9).unwrap();
        assert_eq!(c.inputs, r.inputs, "same payload, same presentation");
        for i in 0..4 {
            assert_eq!(r.targets[5 + i], c.targets[5 + (3 - i)]);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(gen_copy(6, 8, 1).unwrap(), gen_copy(6, 8, 1).unwrap());
        assert_ne!(gen_copy(6, 8, 1).unwrap().inputs, gen_copy(6, 8, 2).unwrap().inputs);
    }

    #[test]
    fn accuracy_thresholds_at_half() {
        let t = gen_copy(3, 2, 7).unwrap();
        // Perfect outputs: echo the targets exactly.
        let perfect: Vec<Vec<f64>> = t.targets.clone();
        let (acc, pos) = bit_accuracy(&perfect, &t).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(pos, vec![true, true, true]);
        // 0.5 counts as a 1: build outputs that are 0.5 where the bit is 1
        // and 0.49 where it is 0 — still perfect.
        let soft: Vec<Vec<f64>> = t
            .targets
            .iter()
            .map(|d| d.iter().map(|&b| if b == 1.0 { 0.5 } else { 0.49 }).collect())
            .collect();
        let (acc, _) = bit_accuracy(&soft, &t).unwrap();
        assert_eq!(acc, 1.0);
        // Break one bit of the middle recall step.
        let mut broken = perfect;
        let mid = 3 + 1 + 1; // second recall step
        broken[mid][0] = 1.0 - t.targets[mid][0];
        let (acc, pos) = bit_accuracy(&broken, &t).unwrap();
        assert_eq!(pos, vec![true, false, true]);
        assert!((acc - 5.0 / 6.0).abs() < 1e-12);
    }
}
