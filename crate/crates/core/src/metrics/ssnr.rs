use super::{check_pair, FrameConfig, MetricsError};
use crate::datapipe::AudioClip;

/// Unclamped per-frame SNRs in dB for every non-silent frame, in frame
/// order. A frame with zero error gives `+∞`.
pub fn segment_snrs(clean: &AudioClip, test: &AudioClip, cfg: &FrameConfig) -> Result<Vec<f64>, MetricsError> {
    cfg.validate()?;
    check_pair(clean, test)?;
    let starts = cfg.frame_starts(clean.len());
    let energies: Vec<(f64, f64)> = starts
        .iter()
        .map(|&s| {
            let c = cfg.frame(&clean.samples, s);
            let t = cfg.frame(&test.samples, s);
            let signal: f64 = c.iter().map(|v| v * v).sum();
            let noise: f64 = c.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
            (signal, noise)
        })
        .collect();
    let loudest = energies.iter().fold(0.0f64, |m, e| m.max(e.0));
    if loudest == 0.0 {
        return Err(MetricsError::AllSilent(clean.id.clone()));
    }
    let threshold = cfg.silence_energy_floor * loudest;
    Ok(energies
        .into_iter()
        .filter(|&(signal, _)| signal > threshold)
        .map(|(signal, noise)| {
            if noise == 0.0 {
                f64::INFINITY
            } else {
                10.0 * (signal / noise).log10()
            }
        })
        .collect())
}

/// Segmental SNR: per-frame SNRs clamped to `[ssnr_floor, ssnr_ceil]` and
/// averaged over the non-silent frames.
pub fn ssnr(clean: &AudioClip, test: &AudioClip, cfg: &FrameConfig) -> Result<f64, MetricsError> {
    let frames = segment_snrs(clean, test, cfg)?;
    let sum: f64 = frames.iter().map(|s| s.clamp(cfg.ssnr_floor, cfg.ssnr_ceil)).sum();
    Ok(sum / frames.len() as f64)
}
