//! The Wave-U-Net: `L` down blocks (conv, LeakyReLU, decimation), a
//! bottleneck, `L` up blocks (interpolation, skip concatenation, conv,
//! LeakyReLU) and a 1×1 output convolution with tanh producing one
//! waveform per source.
//!
//! Every convolution is zero padded so each block keeps its input length.
//! Source 0 is speech, source 1 the residual noise.

mod config;
mod net;
mod params;

pub use config::{ParamSpec, WaveUNetConfig};
pub use net::{enhance, forward, forward_on_graph, pad_for_model, register_params, separate, SourceEstimate, Trim};
pub(crate) use params::{read_f64, read_u32, read_u64};
pub use params::{ModelParams, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use thiserror::Error;

use crate::ndgrad::GradError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("input length {len} is not accepted by this network; nearest valid length is {nearest}")]
    IncompatibleLength { len: usize, nearest: usize },
    #[error("unexpected input shape {0:?}")]
    InputShape(Vec<usize>),
    #[error("expected a 16000 Hz clip, got {0} Hz (resample first)")]
    SampleRate(u32),
    #[error("parameter layout mismatch: {0}")]
    Layout(String),
    #[error(transparent)]
    Grad(#[from] GradError),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}
