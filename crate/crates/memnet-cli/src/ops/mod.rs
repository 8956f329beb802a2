//! Harness operations: everything the subcommands do, exposed as plain
//! functions so tests and other tooling can drive them without a process
//! boundary.

pub mod babi;
pub mod copygen;
pub mod dump;
pub mod forecast;
pub mod run;
pub mod sync;

pub use babi::{babi_eval, qa_error_rate, BabiEvalReport};
pub use copygen::{
    copy_generalization, eval_seed, first_error_positions, median, CopyGenReport, LengthResult,
    EVAL_SEED_BASE,
};
pub use dump::{dump_memory_artifacts, MemoryDump};
pub use forecast::{nrmse, recursive_forecast, recursive_forecast_replay, ForecastOutcome};
pub use run::{build_model, masked_mse, mean_bit_accuracy, run, TaskBundle};
pub use sync::{split_means, synchronize_eval, SyncOutcome};
