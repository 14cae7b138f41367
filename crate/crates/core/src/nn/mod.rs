//! Minimal CNN stack: layer kernels, network assembly, and checkpoint I/O.
//!
//! Everything is plain CPU code over [`crate::tensor::Tensor`]. The forward
//! pass records a trace that the backward pass consumes, so gradient flow is
//! explicit rather than hidden behind an autodiff graph.

pub mod checkpoint;
pub mod layers;
pub mod network;

pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint,
};
pub use layers::{
    conv2d, conv2d_backward, dense, dense_backward, dropout, dropout_backward, maxpool2d,
    maxpool2d_backward, relu, relu_backward, softmax,
};
pub use network::{
    network_backward, network_forward, Architecture, ForwardTrace, Grads, Hyperparams,
    NetworkParams, PoolSpec, OUTPUT_CLASSES, PARAM_NAMES,
};

/// Whether dropout is active (Train) or bypassed (Eval).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
