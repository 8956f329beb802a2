//! Minimal key-value retrieval demo: four stored pairs
//! `(1, +1), (2, −1), (3, +1), (4, −1)` read back with the Gaussian
//! similarity kernel. Evaluating the read at a query x gives
//!
//! `f(x) = G_σ(x,1) − G_σ(x,2) + G_σ(x,3) − G_σ(x,4)`
//!
//! — a compact illustration of how sigma trades interpolation smoothness
//! against discrimination between neighboring keys.

use crate::error::Result;
use crate::model::{gaussian_similarity, EventMemory};

pub const DEMO_KEYS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
pub const DEMO_VALUES: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Evaluate the demo read at query `x`.
pub fn kv_demo_eval(x: f64, sigma: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (k, v) in DEMO_KEYS.iter().zip(DEMO_VALUES) {
        acc += v * gaussian_similarity(&[x], &[*k], sigma)?;
    }
    Ok(acc)
}

/// The same read performed through an [`EventMemory`], for checking that
/// the demo is literally the model's read operation.
pub fn kv_demo_memory(sigma: f64, x: f64) -> Result<f64> {
    let mut mem = EventMemory::new(DEMO_KEYS.len(), 1);
    for (k, v) in DEMO_KEYS.iter().zip(DEMO_VALUES) {
        mem.push(&[*k], &[v]);
    }
    // Validate sigma through the public kernel before the raw read.
    gaussian_similarity(&[0.0], &[0.0], sigma)?;
    let (r, _) = mem.read(&[x], sigma);
    Ok(r[0])
}
