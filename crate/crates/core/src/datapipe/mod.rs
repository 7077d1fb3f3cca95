//! Audio I/O, 48 kHz → 16 kHz resampling, SNR-controlled mixing, excerpt
//! sampling, corpus manifests and a synthetic desk-scale corpus.

mod clip;
mod excerpt;
mod manifest;
mod mix;
mod resample;
mod synth;
mod wav;

pub use clip::{AudioClip, MixtureExample};
pub use excerpt::{sample_excerpt, Excerpt};
pub use manifest::{Manifest, ManifestEntry, Split};
pub use mix::{measured_snr_db, mix_at_snr, mix_at_snr_with_offset, noise_scale, rms, CLIP_WARN_FRACTION};
pub use resample::{resample_48k_to_16k, resampler_taps, RESAMPLER_CUTOFF_HZ, RESAMPLER_TAPS};
pub use synth::{speech_surrogate, synth_corpus, NoiseKind, SynthCorpus, SynthSpec, TEST_SNRS_DB, TRAIN_SNRS_DB};
pub use wav::{read_wav, write_wav};

use std::path::PathBuf;

use thiserror::Error;

/// Rate the network is trained and evaluated at.
pub const MODEL_SAMPLE_RATE: u32 = 16_000;
/// Rate of the source recordings before downsampling.
pub const SOURCE_SAMPLE_RATE: u32 = 48_000;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed WAV: {detail}", path.display())]
    MalformedWav { path: PathBuf, detail: String },
    #[error("{}: unsupported codec: {detail}", path.display())]
    UnsupportedCodec { path: PathBuf, detail: String },
    #[error("{}: {channels} channels, only mono is supported", path.display())]
    MultiChannel { path: PathBuf, channels: u16 },
    #[error("{}: sample rate {rate} Hz, expected 16000 or 48000", path.display())]
    UnsupportedRate { path: PathBuf, rate: u32 },
    #[error("{}: float sample {value} outside [-1, 1]", path.display())]
    OutOfRange { path: PathBuf, value: f64 },
    #[error("sample {value} at index {index} outside [-1, 1]")]
    SampleRange { index: usize, value: f64 },
    #[error("expected {expected} Hz input, got {found} Hz")]
    WrongRate { expected: u32, found: u32 },
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("noise has {noise} samples after offset, clean needs {clean}")]
    NoiseTooShort { noise: usize, clean: usize },
    #[error("clean clip `{0}` is silent; SNR is undefined")]
    SilentClean(String),
    #[error("noise clip `{0}` is silent; cannot reach a finite SNR")]
    SilentNoise(String),
    #[error("clip lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("manifest line {line}: {detail}")]
    Manifest { line: usize, detail: String },
    #[error("manifest split check failed: {0}")]
    Splits(String),
    #[error("invalid synthesis spec: {0}")]
    Spec(String),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}
