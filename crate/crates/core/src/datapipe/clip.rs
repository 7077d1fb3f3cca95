use super::DataError;

/// A mono waveform with samples in [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub id: String,
}

impl AudioClip {
    /// Checked constructor: rejects samples outside [−1, 1] or non-finite.
    pub fn new(id: impl Into<String>, sample_rate: u32, samples: Vec<f64>) -> Result<Self, DataError> {
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && v.abs() <= 1.0))
        {
            return Err(DataError::SampleRange { index, value });
        }
        Ok(AudioClip {
            samples,
            sample_rate,
            id: id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// A noisy mixture together with the clean speech and the scaled noise that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureExample {
    pub noisy: AudioClip,
    pub clean: AudioClip,
    pub noise: AudioClip,
    pub snr_db: f64,
}

impl MixtureExample {
    /// Rebuilds an example from a clean/noisy pair, taking the noise as
    /// their difference. Used when only the mixture files are on disk.
    pub fn from_pair(clean: AudioClip, noisy: AudioClip, snr_db: f64) -> Result<Self, DataError> {
        if clean.sample_rate != noisy.sample_rate {
            return Err(DataError::RateMismatch(clean.sample_rate, noisy.sample_rate));
        }
        if clean.len() != noisy.len() {
            return Err(DataError::LengthMismatch(clean.len(), noisy.len()));
        }
        let noise = AudioClip {
            samples: noisy.samples.iter().zip(&clean.samples).map(|(n, c)| n - c).collect(),
            sample_rate: noisy.sample_rate,
            id: noisy.id.clone(),
        };
        Ok(MixtureExample {
            noisy,
            clean,
            noise,
            snr_db,
        })
    }

    pub fn len(&self) -> usize {
        self.noisy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noisy.is_empty()
    }

    pub fn id(&self) -> &str {
        &self.noisy.id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_enforced() {
        assert!(AudioClip::new("a", 16000, vec![0.5, -1.0, 1.0]).is_ok());
        assert!(matches!(
            AudioClip::new("a", 16000, vec![0.5, 1.01]),
            Err(DataError::SampleRange { index: 1, .. })
        ));
        assert!(AudioClip::new("a", 16000, vec![f64::NAN]).is_err());
    }

    #[test]
    fn pair_difference_is_noise() {
        let clean = AudioClip::new("c", 16000, vec![0.1, 0.2]).unwrap();
        let noisy = AudioClip::new("n", 16000, vec![0.15, 0.1]).unwrap();
        let ex = MixtureExample::from_pair(clean, noisy, 5.0).unwrap();
        assert!((ex.noise.samples[0] - 0.05).abs() < 1e-15);
        assert!((ex.noise.samples[1] + 0.1).abs() < 1e-15);
    }
}
