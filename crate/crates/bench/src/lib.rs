//! Shared fixtures for the criterion benchmarks in `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveunet::AudioClip;

/// Uniform noise in `[-amp, amp)`.
pub fn signal(len: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-amp..amp)).collect()
}

pub fn clip(len: usize, rate: u32, seed: u64) -> AudioClip {
    AudioClip::new(format!("bench{seed}"), rate, signal(len, 0.5, seed)).expect("finite samples")
}

/// A clean clip and a noisier copy of it.
pub fn pair(len: usize, seed: u64) -> (AudioClip, AudioClip) {
    let clean = clip(len, 16000, seed);
    let noise = signal(len, 0.1, seed + 1);
    let samples = clean.samples.iter().zip(&noise).map(|(c, n)| c + n).collect();
    let test = AudioClip::new("test", 16000, samples).expect("finite samples");
    (clean, test)
}
