//! MemNet: a recurrent network that stores a key/value event in an external
//! FIFO memory at every step and reads the memory back through a Gaussian
//! similarity kernel. All projections are linear and bias-free; the model's
//! only nonlinearities are the similarity scores themselves.
//!
//! The crate provides:
//!
//! * the model itself ([`model`]): step function, memory, parameter init;
//! * exact gradients ([`train`]): hand-derived backpropagation through time,
//!   including the paths that flow through stored memory events into earlier
//!   steps, checked against a central-difference oracle;
//! * classic recurrent baselines ([`baselines`]): a vanilla RNN and an LSTM,
//!   both with manual gradients held to the same oracle;
//! * task generators and loaders ([`tasks`]): Hénon map, monthly airline
//!   passenger counts, copy/reverse sequence tasks, bAbI-format stories;
//! * flat binary checkpoints ([`serialize`]) with bit-exact round-trips.
//!
//! Everything runs on `f64` and is deterministic given a seed. The `parallel`
//! feature (on by default) routes batch helpers through rayon; disabling it
//! swaps in sequential loops with identical results.

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod model;
pub mod par;
pub mod seq_model;
pub mod serialize;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
pub use model::{
    gaussian_similarity, project_qkv, read_memory, step, step_gated, Dims, EventMemory,
    MemNetModel, ModelParams, StepState, StepTrace,
};
pub use seq_model::SequenceModel;
pub use tasks::TaskInstance;
