//! Training machinery: forward recording, exact backpropagation through
//! time, a central-difference gradient oracle, Adam, and a per-sequence
//! trainer shared by MemNet and the baselines.

pub mod adam;
pub mod backward;
pub mod fd;
pub mod gradcheck;
pub mod tape;
pub mod trainer;

pub use adam::AdamState;
pub use backward::{backward, backward_with_detail, BackwardDetail, Gradients};
pub use fd::{fd_flat, fd_gradient};
pub use gradcheck::{gradcheck_batch, relative_error, CheckModel, GradcheckReport, DEFAULT_TOLERANCE};
pub use tape::{forward_record, mse_loss, sequence_loss, ComputationTape};
pub use trainer::{train_sequences, EpochStat, TrainConfig, TrainHistory};
