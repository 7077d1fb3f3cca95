use super::{AudioClip, DataError, MODEL_SAMPLE_RATE, SOURCE_SAMPLE_RATE};

pub const RESAMPLER_TAPS: usize = 121;
pub const RESAMPLER_CUTOFF_HZ: f64 = 7200.0;
const FACTOR: usize = 3;

/// Hann-windowed sinc low-pass at 48 kHz, normalized to unity DC gain.
pub fn resampler_taps() -> Vec<f64> {
    let fc = RESAMPLER_CUTOFF_HZ / SOURCE_SAMPLE_RATE as f64;
    let center = (RESAMPLER_TAPS - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..RESAMPLER_TAPS)
        .map(|n| {
            let t = n as f64 - center;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * std::f64::consts::PI * fc * t).sin() / (std::f64::consts::PI * t)
            };
            let window = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / (RESAMPLER_TAPS - 1) as f64).cos();
            sinc * window
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// 3:1 decimation through a zero-phase anti-aliasing filter. Output sample
/// `m` is centred on input sample `3m`; the input is zero outside its range.
pub fn resample_48k_to_16k(clip: &AudioClip) -> Result<AudioClip, DataError> {
    if clip.sample_rate != SOURCE_SAMPLE_RATE {
        return Err(DataError::WrongRate {
            expected: SOURCE_SAMPLE_RATE,
            found: clip.sample_rate,
        });
    }
    let taps = resampler_taps();
    let half = (RESAMPLER_TAPS - 1) / 2;
    let x = &clip.samples;
    let n_out = x.len() / FACTOR;
    let samples = (0..n_out)
        .map(|m| {
            let center = (m * FACTOR) as isize;
            let mut acc = 0.0;
            for (j, &h) in taps.iter().enumerate() {
                let idx = center + j as isize - half as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += h * x[idx as usize];
                }
            }
            acc.clamp(-1.0, 1.0)
        })
        .collect();
    Ok(AudioClip {
        samples,
        sample_rate: MODEL_SAMPLE_RATE,
        id: clip.id.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, amp: f64, n: usize) -> AudioClip {
        AudioClip {
            samples: (0..n)
                .map(|i| amp * (2.0 * PI * freq * i as f64 / 48000.0).sin())
                .collect(),
            sample_rate: 48000,
            id: "tone".into(),
        }
    }

    /// Amplitude at DFT bin `k`, computed by direct summation.
    fn dft_amplitude(x: &[f64], k: usize) -> f64 {
        let n = x.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in x.iter().enumerate() {
            let ph = 2.0 * PI * k as f64 * i as f64 / n;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        2.0 * (re * re + im * im).sqrt() / n
    }

    // Edge samples see a zero-padded input; steady-state checks skip them.
    const EDGE: usize = 30;

    #[test]
    fn passband_tone_keeps_amplitude() {
        let out = resample_48k_to_16k(&tone(1000.0, 0.5, 48000 * 2)).unwrap();
        assert_eq!(out.sample_rate, 16000);
        assert_eq!(out.len(), 32000);
        // 1600 samples at 16 kHz hold exactly 100 periods of 1 kHz.
        let window = &out.samples[EDGE..EDGE + 1600];
        let amp = dft_amplitude(window, 100);
        assert!((amp - 0.5).abs() / 0.5 < 0.01, "amplitude {amp}");
    }

    #[test]
    fn dc_has_unity_gain() {
        let clip = AudioClip {
            samples: vec![0.5; 3000],
            sample_rate: 48000,
            id: "dc".into(),
        };
        let out = resample_48k_to_16k(&clip).unwrap();
        for v in &out.samples[EDGE..out.len() - EDGE] {
            assert!((v - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn stopband_tone_is_rejected() {
        let input = tone(10_000.0, 0.5, 48000);
        let out = resample_48k_to_16k(&input).unwrap();
        let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        let ratio = rms(&out.samples[EDGE..out.len() - EDGE]) / rms(&input.samples);
        assert!(ratio < 0.01, "residual ratio {ratio}");
    }

    #[test]
    fn output_length_floors() {
        for n in [0, 1, 2, 3, 4, 301] {
            let clip = AudioClip {
                samples: vec![0.1; n],
                sample_rate: 48000,
                id: String::new(),
            };
            assert_eq!(resample_48k_to_16k(&clip).unwrap().len(), n / 3);
        }
    }

    #[test]
    fn other_rates_rejected() {
        let clip = AudioClip {
            samples: vec![0.0; 30],
            sample_rate: 16000,
            id: String::new(),
        };
        assert!(matches!(
            resample_48k_to_16k(&clip),
            Err(DataError::WrongRate { found: 16000, .. })
        ));
    }

    #[test]
    fn linear_and_shift_invariant() {
        let base = tone(440.0, 0.3, 3000);
        let noise: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 101) as f64 / 400.0 - 0.125).collect();
        let x = AudioClip {
            samples: base.samples.iter().zip(&noise).map(|(a, b)| a + b).collect(),
            ..base
        };
        let y = resample_48k_to_16k(&x).unwrap();
        let scaled = AudioClip {
            samples: x.samples.iter().map(|v| 0.5 * v).collect(),
            ..x.clone()
        };
        let ys = resample_48k_to_16k(&scaled).unwrap();
        for (a, b) in y.samples.iter().zip(&ys.samples) {
            assert!((0.5 * a - b).abs() < 1e-12);
        }
        let mut shifted = vec![0.0; 3];
        shifted.extend_from_slice(&x.samples);
        let yshift = resample_48k_to_16k(&AudioClip {
            samples: shifted,
            ..x.clone()
        })
        .unwrap();
        for m in EDGE..y.len() - EDGE {
            assert!((yshift.samples[m + 1] - y.samples[m]).abs() < 1e-12);
        }
    }
}
