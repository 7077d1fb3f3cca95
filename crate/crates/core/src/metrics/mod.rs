//! Objective speech-quality measures: segmental SNR, the LPC log-likelihood
//! ratio (LLR), the weighted spectral slope distance (WSS) and the composite
//! CSIG/CBAK/COVL regressions. PESQ is not computed here; per-file scores
//! from an external tool can be ingested and fed to the composites.

mod composite;
mod lpc;
mod report;
mod ssnr;
mod wss;

pub use composite::{composite, composite_unclamped, Composite, CBAK, COVL, CSIG};
pub use lpc::{llr, llr_frames, lpc_coeffs, Lpc};
pub use report::{
    evaluate_clip, evaluate_corpus, parse_pesq_table, read_pesq_table, CorpusEvaluation, FileMetrics, MetricReport,
    REPORT_HEADER,
};
pub use ssnr::{segment_snrs, ssnr};
pub use wss::{critical_bands, wss, wss_frames, CriticalBand, WSS_KLOCMAX, WSS_KMAX};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datapipe::{AudioClip, DataError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("clips differ in length: clean {clean}, test {test}")]
    LengthMismatch { clean: usize, test: usize },
    #[error("clips differ in sample rate: clean {clean} Hz, test {test} Hz")]
    RateMismatch { clean: u32, test: u32 },
    #[error("clip `{0}` is empty")]
    Empty(String),
    #[error("every frame of `{0}` is silent")]
    AllSilent(String),
    #[error("LPC analysis of a zero-energy frame")]
    ZeroEnergy,
    #[error("LPC order {order} needs frames longer than {order} samples, got {len}")]
    FrameTooShort { order: usize, len: usize },
    #[error("invalid frame config: {0}")]
    Config(String),
    #[error("PESQ table line {line}: {detail}")]
    PesqTable { line: usize, detail: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Framing and clamping parameters shared by all frame-based measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    /// Samples per frame (30 ms at 16 kHz).
    pub frame_length: usize,
    /// Fraction of a frame shared with the next one.
    pub overlap: f64,
    pub ssnr_floor: f64,
    pub ssnr_ceil: f64,
    /// Frames whose clean energy is below this fraction of the loudest
    /// clean frame are left out of the SSNR mean.
    pub silence_energy_floor: f64,
    pub lpc_order: usize,
    /// LLR and WSS average the lowest `trim_fraction` of their frame values.
    pub trim_fraction: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            frame_length: 480,
            overlap: 0.75,
            ssnr_floor: -10.0,
            ssnr_ceil: 35.0,
            silence_energy_floor: 1e-6,
            lpc_order: 16,
            trim_fraction: 0.95,
        }
    }
}

impl FrameConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: String| Err(MetricsError::Config(m));
        if self.frame_length < 2 {
            return bad(format!("frame_length {} < 2", self.frame_length));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return bad(format!("overlap {} outside [0, 1)", self.overlap));
        }
        if !(self.ssnr_floor < self.ssnr_ceil) {
            return bad(format!(
                "ssnr_floor {} not below ssnr_ceil {}",
                self.ssnr_floor, self.ssnr_ceil
            ));
        }
        if !(self.silence_energy_floor >= 0.0 && self.silence_energy_floor < 1.0) {
            return bad(format!(
                "silence_energy_floor {} outside [0, 1)",
                self.silence_energy_floor
            ));
        }
        if self.lpc_order >= self.frame_length {
            return bad(format!(
                "lpc_order {} ≥ frame_length {}",
                self.lpc_order, self.frame_length
            ));
        }
        if !(self.trim_fraction > 0.0 && self.trim_fraction <= 1.0) {
            return bad(format!("trim_fraction {} outside (0, 1]", self.trim_fraction));
        }
        Ok(())
    }

    pub fn hop(&self) -> usize {
        ((self.frame_length as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    /// Start offsets of every full frame. A clip shorter than one frame
    /// yields a single frame starting at 0 that covers the whole clip.
    pub fn frame_starts(&self, len: usize) -> Vec<usize> {
        if len < self.frame_length {
            return vec![0];
        }
        (0..=len - self.frame_length).step_by(self.hop()).collect()
    }

    fn frame<'a>(&self, x: &'a [f64], start: usize) -> &'a [f64] {
        &x[start..(start + self.frame_length).min(x.len())]
    }
}

/// Hann window `0.5·(1 − cos(2πk/(n+1)))`, k = 1..n, as used by the
/// reference toolkit (no zero end points).
pub(crate) fn analysis_window(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (n + 1) as f64).cos()))
        .collect()
}

pub(crate) fn check_pair(clean: &AudioClip, test: &AudioClip) -> Result<(), MetricsError> {
    if clean.sample_rate != test.sample_rate {
        return Err(MetricsError::RateMismatch {
            clean: clean.sample_rate,
            test: test.sample_rate,
        });
    }
    if clean.len() != test.len() {
        return Err(MetricsError::LengthMismatch {
            clean: clean.len(),
            test: test.len(),
        });
    }
    if clean.is_empty() {
        return Err(MetricsError::Empty(clean.id.clone()));
    }
    Ok(())
}

/// Mean of the smallest `fraction` of `values`, rounded to a count of at
/// least one.
pub(crate) fn trimmed_mean(values: &mut [f64], fraction: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let keep = ((values.len() as f64 * fraction).round() as usize).clamp(1, values.len());
    values[..keep].iter().sum::<f64>() / keep as f64
}
