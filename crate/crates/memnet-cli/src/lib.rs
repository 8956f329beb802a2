//! Command-line harness for the memory-network crate: configuration
//! loading, training/evaluation runs over seed sets, free-run forecasting,
//! synchronization probes, copy-task generalization sweeps, story-QA
//! evaluation, and memory-inspection dumps. Every artifact the binary
//! writes is a pure function of the configuration and seed.

pub mod config;
pub mod ops;
pub mod report;
