//! Resizable mini-batch gradient descent.
//!
//! A bandit picks the mini-batch size for every epoch from a fixed set of
//! candidates. Each epoch trains with the chosen size, then compares the
//! validation loss against the previous epoch: a decrease costs 0, anything
//! else costs 1. The selector multiplies the chosen arm's probability by
//! `exp(-beta * cost / p)` and renormalizes.
//!
//! Modules:
//!
//! - [`bandit`]: arm set, probability state, sampling and the update rule.
//! - [`optim`]: flat parameter vectors, SGD / momentum / Adagrad / Adam, learning-rate schedules.
//! - [`model`]: multinomial logistic regression and a one-hidden-layer ReLU MLP with analytic gradients.
//! - [`data`]: in-memory splits, per-epoch shuffling and batching, Gaussian blobs, IDX files.
//! - [`trainer`]: the epoch loop, fixed-batch baseline, grid search, logs and checkpoints.
//! - [`regret`]: bandit-only simulator measuring regret against `2 sqrt(K ln K T)`.

pub mod bandit;
pub mod data;
pub mod error;
pub mod model;
pub mod optim;
pub mod regret;
pub mod rng;
pub mod trainer;

pub use bandit::{default_beta, ArmSet, BanditState, Cost};
pub use data::{Batch, BatchPlan, Dataset, Matrix, Split};
pub use error::{Error, Result};
pub use model::{ModelKind, ModelSpec};
pub use optim::{LearningRateSchedule, ModelParams, OptimizerConfig, OptimizerState};
pub use trainer::{EpochRecord, RunConfig};
