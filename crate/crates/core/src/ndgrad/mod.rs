//! Dense tensors, a reverse-mode autodiff tape and the ADAM optimizer.
//!
//! Every operation the Wave-U-Net needs is recorded on a [`Graph`] with an
//! exact backward pass. All arithmetic is in `f64`.

mod adam;
mod graph;
pub mod kernels;
mod tensor;

pub use adam::{AdamState, DEFAULT_EPSILON};
pub use graph::{BackwardFault, Graph, OpKind, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradError {
    #[error("shape {shape:?} needs {} values, got {len}", shape.iter().product::<usize>())]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("ragged rows: expected {expected} columns, found {found}")]
    RaggedRows { expected: usize, found: usize },
    #[error("{what} must have rank {expected}, got shape {shape:?}")]
    Rank {
        what: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("kernel expects {kernel} input channels but input has {input}")]
    ChannelMismatch { kernel: usize, input: usize },
    #[error("kernel width {0} is even; only odd widths keep the length")]
    EvenKernel(usize),
    #[error("{op} needs at least {min} samples, got {len}")]
    TooShort { op: &'static str, min: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{op}: shapes {left:?} and {right:?} differ")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{0} of an empty input")]
    Empty(&'static str),
    #[error("leaky ReLU slope {0} outside (0, 1)")]
    InvalidSlope(f64),
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("parameter {0} has no gradient")]
    MissingGradient(usize),
    #[error("optimizer tracks {expected} values but got {found}")]
    OptimizerMismatch { expected: usize, found: usize },
}
