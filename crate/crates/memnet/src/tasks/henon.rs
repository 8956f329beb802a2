//! Hénon map sequences for one-step-ahead prediction.
//!
//! The map: `x_{t+1} = 1 − 1.4·x_t² + y_t`, `y_{t+1} = 0.3·x_t`, classic
//! parameters. The prediction task feeds `x_t` and asks for `x_{t+1}`
//! (scalar in, scalar out); a variant also exposes the `y` coordinate on
//! input when the caller wants the full state visible.

use crate::error::{Error, Result};
use crate::tasks::TaskInstance;

pub const HENON_A: f64 = 1.4;
pub const HENON_B: f64 = 0.3;

/// Iterate the map `n` times from `(x0, y0)`, returning all n states
/// (the seed state itself is not included).
pub fn henon_generate(n: usize, x0: f64, y0: f64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParam("need at least one iterate".into()));
    }
    let mut out = Vec::with_capacity(n);
    let (mut x, mut y) = (x0, y0);
    for _ in 0..n {
        let x_next = 1.0 - HENON_A * x * x + y;
        let y_next = HENON_B * x;
        x = x_next;
        y = y_next;
        if !x.is_finite() {
            return Err(Error::InvalidParam(format!(
                "orbit diverged from ({x0}, {y0}); start inside the attractor basin"
            )));
        }
        out.push((x, y));
    }
    Ok(out)
}

/// Cut one long orbit into `windows` non-overlapping one-step-ahead
/// prediction sequences of length `window`. Inputs are `x_t` (plus `y_t`
/// as a second channel if `include_y`), targets are `x_{t+1}`. A burn-in
/// of 100 iterates lands the orbit on the attractor first.
pub fn henon_tasks(
    windows: usize,
    window: usize,
    x0: f64,
    y0: f64,
    include_y: bool,
) -> Result<Vec<TaskInstance>> {
    if windows == 0 || window < 2 {
        return Err(Error::InvalidParam("need at least one window of length ≥ 2".into()));
    }
    const BURN_IN: usize = 100;
    // One extra point per window supplies the final target.
    let orbit = henon_generate(BURN_IN + windows * window + 1, x0, y0)?;
    let pts = &orbit[BURN_IN..];
    let mut tasks = Vec::with_capacity(windows);
    for w in 0..windows {
        let seg = &pts[w * window..w * window + window + 1];
        let inputs: Vec<Vec<f64>> = seg[..window]
            .iter()
            .map(|&(x, y)| if include_y { vec![x, y] } else { vec![x] })
            .collect();
        let targets: Vec<Vec<f64>> = seg[1..].iter().map(|&(x, _)| vec![x]).collect();
        tasks.push(TaskInstance::dense(format!("henon-{w}"), w as u64, inputs, targets)?);
    }
    Ok(tasks)
}
