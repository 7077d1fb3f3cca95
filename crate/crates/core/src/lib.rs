//! Time-domain speech enhancement with the Wave-U-Net.
//!
//! - [`ndgrad`]: tensors, reverse-mode autodiff and ADAM
//! - [`model`]: network construction, forward pass and checkpoints
//! - [`datapipe`]: WAV I/O, resampling, SNR mixing, manifests, synthetic corpus
//! - [`trainer`]: two-phase training with early stopping
//! - [`metrics`]: SSNR, LLR, WSS and the composite quality measures
//! - [`gradcheck`]: finite-difference verification of every differentiable op

pub mod datapipe;
pub mod gradcheck;
pub mod metrics;
pub mod model;
pub mod ndgrad;
pub mod trainer;

pub use datapipe::{AudioClip, Manifest, MixtureExample};
pub use model::{ModelParams, SourceEstimate, WaveUNetConfig};
pub use ndgrad::{AdamState, Graph, Tensor};
