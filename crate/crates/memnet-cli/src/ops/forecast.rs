//! Recursive (free-run) forecasting: run a scalar model over a warmup
//! prefix to build up its hidden state and memory, then let it run free,
//! feeding each prediction back as the next input. The first forecast
//! value is the output the last warmup input produced; memory keeps
//! storing events during the free run.

use anyhow::{ensure, Result};
use memnet::{step, MemNetModel, SequenceModel};

/// A free-run forecast. `truncated` is set when a prediction came out
/// non-finite; `forecast` then holds only the finite prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOutcome {
    pub forecast: Vec<f64>,
    pub truncated: bool,
}

impl ForecastOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from("step,forecast\n");
        for (i, v) in self.forecast.iter().enumerate() {
            out.push_str(&format!("{},{v}\n", i + 1));
        }
        out
    }
}

/// Free-run forecast with incremental state updates. `horizon` values are
/// produced: the last warmup output, then `horizon − 1` feedback steps.
pub fn recursive_forecast(
    model: &MemNetModel,
    warmup: &[f64],
    horizon: usize,
) -> Result<ForecastOutcome> {
    ensure!(
        model.dims.n_x == 1 && model.dims.n_o == 1,
        "free-run forecasting needs a scalar model, got {} inputs and {} outputs",
        model.dims.n_x,
        model.dims.n_o,
    );
    ensure!(!warmup.is_empty(), "forecast needs at least one warmup value");

    let mut state = model.fresh_state();
    let mut next = 0.0;
    for &x in warmup {
        let (o, _) = step(&mut state, &[x], &model.params, model.sigma)?;
        next = o[0];
    }

    let mut forecast = Vec::with_capacity(horizon);
    let mut truncated = false;
    for i in 0..horizon {
        if !next.is_finite() {
            truncated = true;
            break;
        }
        forecast.push(next);
        if i + 1 < horizon {
            let (o, _) = step(&mut state, &[next], &model.params, model.sigma)?;
            next = o[0];
        }
    }
    Ok(ForecastOutcome { forecast, truncated })
}

/// Same forecast through the generic sequence interface: each prediction
/// re-runs the model over warmup-plus-predictions-so-far and takes the
/// final output. Slower, but works for any model kind and must agree
/// exactly with [`recursive_forecast`] on memory models.
pub fn recursive_forecast_replay(
    model: &impl SequenceModel,
    warmup: &[f64],
    horizon: usize,
) -> Result<ForecastOutcome> {
    ensure!(!warmup.is_empty(), "forecast needs at least one warmup value");
    let mut inputs: Vec<Vec<f64>> = warmup.iter().map(|&x| vec![x]).collect();
    let mut forecast = Vec::with_capacity(horizon);
    let mut truncated = false;
    for _ in 0..horizon {
        let writes = vec![true; inputs.len()];
        let outs = model.run_outputs(&inputs, &writes)?;
        let last = outs.last().expect("warmup is nonempty");
        ensure!(last.len() == 1, "free-run forecasting needs scalar outputs, got width {}", last.len());
        let p = last[0];
        if !p.is_finite() {
            truncated = true;
            break;
        }
        forecast.push(p);
        inputs.push(vec![p]);
    }
    Ok(ForecastOutcome { forecast, truncated })
}

/// Root-mean-square error of `forecast` against `actual`, normalized by
/// the range of `actual`.
pub fn nrmse(forecast: &[f64], actual: &[f64]) -> Result<f64> {
    ensure!(!actual.is_empty(), "nrmse needs at least one actual value");
    ensure!(
        forecast.len() == actual.len(),
        "forecast has {} values but actual has {}",
        forecast.len(),
        actual.len(),
    );
    let mse: f64 =
        forecast.iter().zip(actual).map(|(f, a)| (f - a) * (f - a)).sum::<f64>() / actual.len() as f64;
    let (lo, hi) = actual.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let range = hi - lo;
    ensure!(range > 0.0, "actual series is constant; nrmse is undefined");
    Ok(mse.sqrt() / range)
}
