//! Feed-forward action-value approximation and double Q-learning.

mod checkpoint;
mod learner;
mod network;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use learner::{act, double_q_target, linear_network, td_loss, Learner, Optimizer, TargetNetwork, TrainConfig};
pub use network::{argmax, Activation, ConstantPolicy, Dense, ForwardCache, Gradients, Policy, QNetwork};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QError {
    #[error("observation has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty training batch")]
    EmptyBatch,
    #[error("non-finite value in forward pass: {0}")]
    NonFinite(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QError>;
