//! Synchronization probe: start a model from completely fresh state and
//! memory on an unseen stretch of a series and watch the one-step
//! prediction error fall as the memory fills. The interesting comparison
//! is the mean error before versus after the warm-in window.

use anyhow::Result;
use memnet::SequenceModel;

/// Per-step absolute one-step errors of a fresh run over `series`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncOutcome {
    pub abs_errors: Vec<f64>,
}

impl SyncOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from("step,abs_error\n");
        for (i, e) in self.abs_errors.iter().enumerate() {
            out.push_str(&format!("{},{e}\n", i + 1));
        }
        out
    }
}

/// Run `model` from fresh state over `series` as a one-step predictor:
/// the prediction made after seeing `series[..=t]` is scored against
/// `series[t + 1]`. A series shorter than two points yields no errors.
pub fn synchronize_eval(model: &impl SequenceModel, series: &[f64]) -> Result<SyncOutcome> {
    if series.len() < 2 {
        return Ok(SyncOutcome { abs_errors: Vec::new() });
    }
    let inputs: Vec<Vec<f64>> = series[..series.len() - 1].iter().map(|&v| vec![v]).collect();
    let writes = vec![true; inputs.len()];
    let outs = model.run_outputs(&inputs, &writes)?;
    anyhow::ensure!(
        outs.first().map_or(true, |o| o.len() == 1),
        "synchronization needs a scalar model, got output width {}",
        outs[0].len(),
    );
    let abs_errors =
        outs.iter().zip(&series[1..]).map(|(o, &target)| (o[0] - target).abs()).collect();
    Ok(SyncOutcome { abs_errors })
}

/// Mean of the first `split` errors and mean of the rest. Either half may
/// be empty; its mean is then NaN.
pub fn split_means(errors: &[f64], split: usize) -> (f64, f64) {
    let split = split.min(errors.len());
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    (mean(&errors[..split]), mean(&errors[split..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use memnet::serialize::Checkpoint;
    use memnet::{Dims, MemNetModel, ModelParams};

    fn zero_model() -> Checkpoint {
        let dims = Dims::new(1, 2, 1, 4).unwrap();
        let p = ModelParams::zeros(&dims);
        Checkpoint::MemNet(MemNetModel::from_parts(dims, p, 1.0).unwrap())
    }

    #[test]
    fn short_series_yield_no_errors() {
        let m = zero_model();
        assert!(synchronize_eval(&m, &[]).unwrap().abs_errors.is_empty());
        assert!(synchronize_eval(&m, &[3.0]).unwrap().abs_errors.is_empty());
    }

    #[test]
    fn zero_weights_score_the_targets_themselves() {
        let m = zero_model();
        let out = synchronize_eval(&m, &[5.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(out.abs_errors, vec![2.0, 3.0, 0.5]);
    }

    #[test]
    fn delay_model_errors_by_hand() {
        // o_t = x_{t−1}: first prediction is 0, later ones lag two steps.
        let dims = Dims::new(1, 1, 1, 4).unwrap();
        let mut p = ModelParams::zeros(&dims);
        *p.wh_x.at_mut(0, 0) = 1.0;
        *p.wo_h.at_mut(0, 0) = 1.0;
        let m = Checkpoint::MemNet(MemNetModel::from_parts(dims, p, 1.0).unwrap());
        let out = synchronize_eval(&m, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(out.abs_errors, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn split_means_by_hand() {
        let (a, b) = split_means(&[1.0, 3.0, 10.0, 20.0, 30.0], 2);
        assert_eq!(a, 2.0);
        assert_eq!(b, 20.0);
        let (a, b) = split_means(&[1.0, 3.0], 5);
        assert_eq!(a, 2.0);
        assert!(b.is_nan(), "empty second half");
        let (a, _) = split_means(&[], 3);
        assert!(a.is_nan());
    }
}
