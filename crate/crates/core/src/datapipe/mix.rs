use log::warn;

use super::{AudioClip, DataError, MixtureExample};

/// Fraction of clipped samples above which mixing logs a warning.
pub const CLIP_WARN_FRACTION: f64 = 0.01;

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// `10·log10(Σ clean² / Σ noise²)` over whole clips.
pub fn measured_snr_db(clean: &[f64], noise: &[f64]) -> f64 {
    let s: f64 = clean.iter().map(|v| v * v).sum();
    let n: f64 = noise.iter().map(|v| v * v).sum();
    10.0 * (s / n).log10()
}

/// Gain that brings noise of RMS `noise_rms` to `snr_db` below speech of
/// RMS `clean_rms`.
pub fn noise_scale(clean_rms: f64, noise_rms: f64, snr_db: f64) -> f64 {
    clean_rms / (noise_rms * 10f64.powf(snr_db / 20.0))
}

/// Mixes `clean` with the first `clean.len()` samples of `noise` at the
/// requested full-clip SNR.
pub fn mix_at_snr(clean: &AudioClip, noise: &AudioClip, snr_db: f64) -> Result<MixtureExample, DataError> {
    mix_at_snr_with_offset(clean, noise, snr_db, 0)
}

/// As [`mix_at_snr`], cropping the noise at `offset`. The sum is hard
/// clipped to [−1, 1].
pub fn mix_at_snr_with_offset(
    clean: &AudioClip,
    noise: &AudioClip,
    snr_db: f64,
    offset: usize,
) -> Result<MixtureExample, DataError> {
    if clean.sample_rate != noise.sample_rate {
        return Err(DataError::RateMismatch(clean.sample_rate, noise.sample_rate));
    }
    let available = noise.len().saturating_sub(offset);
    if available < clean.len() {
        return Err(DataError::NoiseTooShort {
            noise: available,
            clean: clean.len(),
        });
    }
    let clean_rms = rms(&clean.samples);
    if clean_rms == 0.0 {
        return Err(DataError::SilentClean(clean.id.clone()));
    }
    let crop = &noise.samples[offset..offset + clean.len()];
    let noise_rms = rms(crop);
    if noise_rms == 0.0 {
        return Err(DataError::SilentNoise(noise.id.clone()));
    }
    let scale = noise_scale(clean_rms, noise_rms, snr_db);
    let scaled: Vec<f64> = crop.iter().map(|v| v * scale).collect();

    let mut clipped = 0usize;
    let noisy: Vec<f64> = clean
        .samples
        .iter()
        .zip(&scaled)
        .map(|(c, n)| {
            let s = c + n;
            if s.abs() > 1.0 {
                clipped += 1;
            }
            s.clamp(-1.0, 1.0)
        })
        .collect();
    let fraction = clipped as f64 / clean.len() as f64;
    if fraction > CLIP_WARN_FRACTION {
        warn!(
            "mixing `{}` at {snr_db} dB clipped {:.2}% of samples",
            clean.id,
            100.0 * fraction
        );
    }

    Ok(MixtureExample {
        noisy: AudioClip {
            samples: noisy,
            sample_rate: clean.sample_rate,
            id: clean.id.clone(),
        },
        clean: clean.clone(),
        noise: AudioClip {
            samples: scaled,
            sample_rate: clean.sample_rate,
            id: noise.id.clone(),
        },
        snr_db,
    })
}
