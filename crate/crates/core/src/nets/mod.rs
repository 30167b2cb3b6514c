//! Small numerical core: dense networks with hand-written backprop, a
//! categorical action distribution, and Adam. Everything is `f64`.

mod adam;
mod categorical;
mod checkpoint;
mod dense;
pub mod gradcheck;

pub use adam::{AdamConfig, AdamState};
pub use categorical::{argmax, log_softmax, Categorical};
pub use checkpoint::{Checkpoint, HeadKind, FORMAT_VERSION, MAGIC};
pub use dense::{Dense, DenseNet, ForwardCache, Gradients};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("{what} has width {found}, expected {expected}")]
    ShapeMismatch { what: &'static str, expected: usize, found: usize },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("forward cache is stale or belongs to another network")]
    StaleCache,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite logits")]
    NonFiniteLogits,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
