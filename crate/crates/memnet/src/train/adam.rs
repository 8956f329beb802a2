//! Adam over a flat parameter vector, with bias correction.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Completed update count (drives bias correction).
    pub step: u64,
    /// First-moment estimate, one entry per parameter.
    pub m: Vec<f64>,
    /// Second-moment estimate.
    pub v: Vec<f64>,
}

impl AdamState {
    /// Standard defaults: β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(n_params: usize, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// One Adam update in place:
    /// `m ← β₁m + (1−β₁)g`, `v ← β₂v + (1−β₂)g²`, then
    /// `w ← w − lr · m̂ / (√v̂ + ε)` with the usual `1 − βᵗ` corrections.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::DimMismatch { what: "adam params", expected: self.m.len(), got: params.len() });
        }
        if grads.len() != self.m.len() {
            return Err(Error::DimMismatch { what: "adam grads", expected: self.m.len(), got: grads.len() });
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two updates on J(w) = ½w² from w = 1, lr = 0.1, recomputed here
    /// step by step with scalar arithmetic.
    #[test]
    fn two_steps_match_scalar_recomputation() {
        let mut adam = AdamState::new(1, 0.1);
        let mut w = [1.0];

        // Hand recomputation.
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.1);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut w_ref = 1.0;
        for step in 1..=2u32 {
            let g = w_ref; // dJ/dw = w
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - pow_n(b1, step));
            let v_hat = v / (1.0 - pow_n(b2, step));
            w_ref -= lr * m_hat / (v_hat.sqrt() + eps);
        }

        let g1 = [w[0]];
        adam.update(&mut w, &g1).unwrap();
        assert!((w[0] - 0.9000000010).abs() < 1e-9, "first step: {}", w[0]);
        let g2 = [w[0]];
        adam.update(&mut w, &g2).unwrap();
        assert!((w[0] - w_ref).abs() < 1e-15, "got {}, reference {}", w[0], w_ref);
        assert!((w[0] - 0.80041).abs() < 1e-4, "second step lands near 0.8004: {}", w[0]);
        assert_eq!(adam.step, 2);
    }

    fn pow_n(b: f64, n: u32) -> f64 {
        (0..n).fold(1.0, |acc, _| acc * b)
    }

    /// Bias correction makes the very first update ≈ lr in magnitude no
    /// matter how large the gradient is — the signature Adam behavior.
    #[test]
    fn first_update_magnitude_is_learning_rate() {
        for &g in &[1e-3, 1.0, 1e6] {
            let mut adam = AdamState::new(1, 0.05);
            let mut w = [0.0];
            adam.update(&mut w, &[g]).unwrap();
            assert!(
                (w[0].abs() - 0.05).abs() < 1e-6,
                "gradient {g} produced first step {}",
                w[0]
            );
            assert!(w[0] < 0.0, "positive gradient must decrease the weight");
        }
    }

    #[test]
    fn converges_on_a_quadratic_bowl() {
        let mut adam = AdamState::new(3, 0.05);
        let mut w = [5.0, -3.0, 0.5];
        for _ in 0..600 {
            let g = w; // J = ½‖w‖²
            adam.update(&mut w, &g).unwrap();
        }
        for wi in w {
            assert!(wi.abs() < 1e-2, "failed to approach the minimum: {wi}");
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let mut adam = AdamState::new(2, 0.1);
        let mut w = [1.0];
        assert!(adam.update(&mut w, &[1.0]).is_err());
        let mut w2 = [1.0, 2.0];
        assert!(adam.update(&mut w2, &[1.0]).is_err());
    }
}
