//! Classic recurrent baselines — a vanilla (Elman) RNN and an LSTM — with
//! hand-written gradients held to the same finite-difference oracle as the
//! main model, plus the detrended LSTM forecaster used for time-series
//! comparisons.

pub mod lstm;
pub mod rnn;

pub use lstm::{linear_trend, lstm_detrended_forecast, lstm_step, DetrendConfig, LstmModel, LstmParams};
pub use rnn::{rnn_step, RnnModel, RnnParams};
