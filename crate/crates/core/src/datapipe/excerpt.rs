use log::debug;
use rand::Rng;

use super::MixtureExample;

/// Aligned windows cut from one [`MixtureExample`].
#[derive(Debug, Clone, PartialEq)]
pub struct Excerpt {
    pub noisy: Vec<f64>,
    pub clean: Vec<f64>,
    pub noise: Vec<f64>,
    pub offset: usize,
    /// Zero samples appended because the clip was shorter than requested.
    pub padding: usize,
}

/// Draws a window of `length` samples at a uniformly random offset shared by
/// all three signals. Clips shorter than `length` start at 0 and are zero
/// padded at the tail.
pub fn sample_excerpt<R: Rng + ?Sized>(example: &MixtureExample, length: usize, rng: &mut R) -> Excerpt {
    let n = example.len();
    let (offset, take) = if n > length {
        (rng.gen_range(0..=n - length), length)
    } else {
        (0, n)
    };
    let padding = length - take;
    if padding > 0 {
        debug!(
            "excerpt of `{}` padded with {padding} zeros ({n} < {length})",
            example.id()
        );
    }
    let cut = |x: &[f64]| {
        let mut w = x[offset..offset + take].to_vec();
        w.resize(length, 0.0);
        w
    };
    Excerpt {
        noisy: cut(&example.noisy.samples),
        clean: cut(&example.clean.samples),
        noise: cut(&example.noise.samples),
        offset,
        padding,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::AudioClip;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example(n: usize) -> MixtureExample {
        let clean: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin() * 0.3).collect();
        let noise: Vec<f64> = (0..n).map(|i| ((i * 31) % 17) as f64 / 170.0).collect();
        let noisy = clean.iter().zip(&noise).map(|(c, z)| c + z).collect();
        let clip = |s: Vec<f64>| AudioClip {
            samples: s,
            sample_rate: 16000,
            id: "e".into(),
        };
        MixtureExample {
            noisy: clip(noisy),
            clean: clip(clean),
            noise: clip(noise),
            snr_db: 5.0,
        }
    }

    #[test]
    fn full_length_forces_zero_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let e = sample_excerpt(&example(64), 64, &mut rng);
            assert_eq!(e.offset, 0);
            assert_eq!(e.padding, 0);
        }
    }

    #[test]
    fn windows_stay_aligned() {
        let ex = example(300);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let e = sample_excerpt(&ex, 40, &mut rng);
            for i in 0..40 {
                assert_eq!(e.noisy[i], e.clean[i] + e.noise[i]);
            }
            assert_eq!(e.clean[0], ex.clean.samples[e.offset]);
        }
    }

    #[test]
    fn short_clips_are_padded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = sample_excerpt(&example(10), 16, &mut rng);
        assert_eq!(e.padding, 6);
        assert_eq!(e.noisy.len(), 16);
        assert!(e.noisy[10..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn offsets_are_uniform() {
        // 10 possible offsets, 10k draws; chi-square with 9 degrees of
        // freedom has a p = 0.01 critical value of 21.666.
        let ex = example(109);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 10];
        let draws = 10_000;
        for _ in 0..draws {
            counts[sample_excerpt(&ex, 100, &mut rng).offset] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 21.666, "chi2 = {chi2}, counts {counts:?}");
    }
}
