//! Monthly airline passenger counts, 1949–1960: 144 monthly totals (in
//! thousands), the standard benchmark series for trend-plus-seasonality
//! forecasting. The series ships with the crate; a loader accepts any CSV
//! in the same two-column layout.
//!
//! Split convention used throughout: the first 96 points (eight years) are
//! the training window, the last 24 of those form the validation window,
//! and the final 48 points (four years) are held out for testing. The
//! series is used raw — no normalization — so model hyperparameters (in
//! particular the similarity width) must cope with values in the hundreds.

use crate::error::{Error, Result};
use crate::tasks::TaskInstance;
use std::path::Path;

/// The bundled series as CSV (`month,passengers` header plus 144 rows).
pub const AIRLINE_CSV: &str = include_str!("../../data/airline.csv");

/// Points in the series.
pub const AIRLINE_LEN: usize = 144;
/// Training window: `[0, TRAIN_END)`.
pub const TRAIN_END: usize = 96;
/// Validation window: `[VAL_START, TRAIN_END)` — the last two training years.
pub const VAL_START: usize = 72;
/// Test window: `[TRAIN_END, AIRLINE_LEN)`.
pub const TEST_LEN: usize = AIRLINE_LEN - TRAIN_END;

/// Parse a `month,value` CSV with one header line.
pub fn parse_airline_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            // Header; sanity-check it looks like one rather than data.
            if line.split(',').nth(1).map_or(false, |v| v.trim().parse::<f64>().is_ok()) {
                return Err(Error::Parse { line: 1, msg: "expected a header line, found data".into() });
            }
            continue;
        }
        let mut cols = line.split(',');
        let _month = cols.next();
        let val = cols
            .next()
            .ok_or(Error::Parse { line: idx + 1, msg: "missing value column".into() })?;
        let v: f64 = val.trim().parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("bad value {val:?}"),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Format("no data rows in series CSV".into()));
    }
    Ok(out)
}

/// The bundled 144-point series.
pub fn airline_series() -> Vec<f64> {
    parse_airline_csv(AIRLINE_CSV).expect("bundled series is well-formed")
}

/// Load a series in the same CSV layout from disk.
pub fn load_airline(path: &Path) -> Result<Vec<f64>> {
    parse_airline_csv(&std::fs::read_to_string(path)?)
}

/// One-step-ahead prediction task over `series[start..end]`: inputs are
/// the points except the last, targets the points except the first.
pub fn one_step_task(series: &[f64], start: usize, end: usize, name: &str) -> Result<TaskInstance> {
    if start + 2 > end || end > series.len() {
        return Err(Error::InvalidParam(format!(
            "bad window [{start}, {end}) for a series of {} points",
            series.len()
        )));
    }
    let seg = &series[start..end];
    let inputs: Vec<Vec<f64>> = seg[..seg.len() - 1].iter().map(|&v| vec![v]).collect();
    let targets: Vec<Vec<f64>> = seg[1..].iter().map(|&v| vec![v]).collect();
    TaskInstance::dense(name, start as u64, inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_series_checks_out() {
        let s = airline_series();
        assert_eq!(s.len(), AIRLINE_LEN);
        assert_eq!(s[0], 112.0, "series starts in January 1949");
        assert_eq!(s[143], 432.0, "series ends in December 1960");
        assert_eq!(s.iter().sum::<f64>(), 40363.0, "known series total");
        // Peak is the famous July 1960 value.
        assert_eq!(s.iter().cloned().fold(f64::MIN, f64::max), 622.0);
    }

    #[test]
    fn test_window_extrema() {
        // The held-out four years range from 301 to 622 — the denominator
        // used by range-normalized error metrics.
        let s = airline_series();
        let test = &s[TRAIN_END..];
        assert_eq!(test.len(), TEST_LEN);
        assert_eq!(test.iter().cloned().fold(f64::MAX, f64::min), 301.0);
        assert_eq!(test.iter().cloned().fold(f64::MIN, f64::max), 622.0);
    }

    #[test]
    fn one_step_task_alignment() {
        let s = airline_series();
        let t = one_step_task(&s, 0, TRAIN_END, "train").unwrap();
        assert_eq!(t.len(), 95);
        assert_eq!(t.inputs[0], vec![112.0]);
        assert_eq!(t.targets[0], vec![118.0]);
        assert_eq!(t.targets[94], vec![s[95]]);
        assert!(one_step_task(&s, 0, 1, "x").is_err());
        assert!(one_step_task(&s, 0, 999, "x").is_err());
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!(parse_airline_csv("month,passengers\n1949-01,abc\n").is_err());
        assert!(parse_airline_csv("1,2\n3,4\n").is_err(), "missing header");
        assert!(parse_airline_csv("month,passengers\n").is_err(), "no rows");
    }
}
