//! Synthetic stand-in for a speech/noise corpus: harmonic "syllables" with
//! amplitude envelopes as speech, white/pink/brown/band-limited noise, mixed
//! at fixed SNR sets with train and test conditions kept apart.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    mix_at_snr, resample_48k_to_16k, write_wav, AudioClip, DataError, Manifest, ManifestEntry, MixtureExample, Split,
    SOURCE_SAMPLE_RATE,
};

pub const TRAIN_SNRS_DB: [f64; 4] = [15.0, 10.0, 5.0, 0.0];
pub const TEST_SNRS_DB: [f64; 4] = [17.5, 12.5, 7.5, 2.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    White,
    Pink,
    Brown,
    /// White noise through a band-pass between the two edges, in Hz.
    Band {
        low_hz: u32,
        high_hz: u32,
    },
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::White => f.write_str("white"),
            NoiseKind::Pink => f.write_str("pink"),
            NoiseKind::Brown => f.write_str("brown"),
            NoiseKind::Band { low_hz, high_hz } => write!(f, "band-{low_hz}-{high_hz}"),
        }
    }
}

impl FromStr for NoiseKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "white" => Ok(NoiseKind::White),
            "pink" => Ok(NoiseKind::Pink),
            "brown" => Ok(NoiseKind::Brown),
            other => {
                let bad = || format!("unknown noise kind `{other}` (white, pink, brown, band-LOW-HIGH)");
                let rest = other.strip_prefix("band-").ok_or_else(bad)?;
                let (lo, hi) = rest.split_once('-').ok_or_else(bad)?;
                let low_hz: u32 = lo.parse().map_err(|_| bad())?;
                let high_hz: u32 = hi.parse().map_err(|_| bad())?;
                if low_hz >= high_hz || high_hz > 24_000 {
                    return Err(format!(
                        "band edges {low_hz}..{high_hz} Hz are not increasing below 24 kHz"
                    ));
                }
                Ok(NoiseKind::Band { low_hz, high_hz })
            }
        }
    }
}

impl Serialize for NoiseKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NoiseKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Corpus size and conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub train_clips: usize,
    pub validation_clips: usize,
    pub test_clips: usize,
    pub clip_seconds: f64,
    pub train_snrs_db: Vec<f64>,
    pub test_snrs_db: Vec<f64>,
    pub train_noises: Vec<NoiseKind>,
    pub test_noises: Vec<NoiseKind>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            train_clips: 48,
            validation_clips: 10,
            test_clips: 16,
            clip_seconds: 1.0,
            train_snrs_db: TRAIN_SNRS_DB.to_vec(),
            test_snrs_db: TEST_SNRS_DB.to_vec(),
            train_noises: vec![
                NoiseKind::White,
                NoiseKind::Brown,
                NoiseKind::Band {
                    low_hz: 1000,
                    high_hz: 3000,
                },
            ],
            test_noises: vec![
                NoiseKind::Pink,
                NoiseKind::Band {
                    low_hz: 3500,
                    high_hz: 7500,
                },
            ],
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::Spec(m));
        if self.train_clips == 0 || self.validation_clips == 0 || self.test_clips == 0 {
            return bad("every split needs at least one clip".into());
        }
        if !(self.clip_seconds > 0.01 && self.clip_seconds < 600.0) {
            return bad(format!("clip_seconds {} out of range", self.clip_seconds));
        }
        if self.train_snrs_db.is_empty() || self.test_snrs_db.is_empty() {
            return bad("SNR lists must be non-empty".into());
        }
        if self.train_noises.is_empty() || self.test_noises.is_empty() {
            return bad("noise lists must be non-empty".into());
        }
        if let Some(s) = self.test_snrs_db.iter().find(|s| self.train_snrs_db.contains(s)) {
            return bad(format!("SNR {s} dB used for both train and test"));
        }
        if let Some(n) = self.test_noises.iter().find(|n| self.train_noises.contains(n)) {
            return bad(format!("noise `{n}` used for both train and test"));
        }
        Ok(())
    }
}

/// Result of [`synth_corpus`]: the manifest written to disk and the
/// in-memory mixtures (before PCM16 quantization), in manifest order.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub root: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
    pub examples: Vec<MixtureExample>,
}

/// Harmonic tones with syllable-like envelopes and two formant bumps,
/// peak-normalized into [0.3, 0.5].
pub fn speech_surrogate<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut t = ((rng.gen_range(0.0..0.06) * rate) as usize).min(len / 4);
    while t < len {
        let syl = ((rng.gen_range(0.12..0.30) * rate) as usize).max(8);
        let f0_start: f64 = rng.gen_range(90.0..240.0);
        let f0_end = f0_start * rng.gen_range(0.8..1.2);
        let amp = rng.gen_range(0.4..1.0);
        let f1 = rng.gen_range(300.0..900.0);
        let f2 = rng.gen_range(900.0..2500.0);
        let harmonics = (3800.0 / f0_start.max(f0_end)).floor() as usize;
        let weights: Vec<f64> = (1..=harmonics)
            .map(|h| {
                let f = h as f64 * f0_start;
                (1.0 / h as f64)
                    * (1.0 + 2.0 * (-((f - f1) / 150.0).powi(2)).exp() + 1.5 * (-((f - f2) / 250.0).powi(2)).exp())
            })
            .collect();
        let mut phase = rng.gen_range(0.0..2.0 * PI);
        for i in 0..syl.min(len - t) {
            let frac = i as f64 / syl as f64;
            let f0 = f0_start + (f0_end - f0_start) * frac;
            phase += 2.0 * PI * f0 / rate;
            let env = (PI * frac).sin().powf(0.7);
            let s: f64 = weights
                .iter()
                .enumerate()
                .map(|(h, w)| w * ((h + 1) as f64 * phase).sin())
                .sum();
            out[t + i] += amp * env * s;
        }
        t += syl + (rng.gen_range(0.03..0.15) * rate) as usize;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let target = rng.gen_range(0.3..0.5);
        out.iter_mut().for_each(|v| *v *= target / peak);
    }
    out
}

fn band_pass_taps(low_hz: f64, high_hz: f64, rate: f64, taps: usize) -> Vec<f64> {
    let center = (taps - 1) as f64 / 2.0;
    let lp = |fc: f64, t: f64| {
        let fc = fc / rate;
        if t == 0.0 {
            2.0 * fc
        } else {
            (2.0 * PI * fc * t).sin() / (PI * t)
        }
    };
    (0..taps)
        .map(|n| {
            let t = n as f64 - center;
            let w = 0.5 - 0.5 * (2.0 * PI * n as f64 / (taps - 1) as f64).cos();
            (lp(high_hz, t) - lp(low_hz, t)) * w
        })
        .collect()
}

fn noise_signal<R: Rng + ?Sized>(kind: NoiseKind, len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let white = |rng: &mut R, n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let mut x = match kind {
        NoiseKind::White => white(rng, len),
        NoiseKind::Pink => {
            // Paul Kellet's refined pink filter.
            let mut b = [0.0f64; 7];
            white(rng, len)
                .into_iter()
                .map(|w| {
                    b[0] = 0.99886 * b[0] + w * 0.0555179;
                    b[1] = 0.99332 * b[1] + w * 0.0750759;
                    b[2] = 0.96900 * b[2] + w * 0.1538520;
                    b[3] = 0.86650 * b[3] + w * 0.3104856;
                    b[4] = 0.55000 * b[4] + w * 0.5329522;
                    b[5] = -0.7616 * b[5] - w * 0.0168980;
                    let y = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + w * 0.5362;
                    b[6] = w * 0.115926;
                    y
                })
                .collect()
        }
        NoiseKind::Brown => {
            let mut acc = 0.0;
            white(rng, len)
                .into_iter()
                .map(|w| {
                    acc = 0.995 * acc + 0.05 * w;
                    acc
                })
                .collect()
        }
        NoiseKind::Band { low_hz, high_hz } => {
            let taps = band_pass_taps(low_hz as f64, high_hz as f64, rate, 401);
            let half = taps.len() / 2;
            let w = white(rng, len + taps.len());
            (0..len)
                .map(|i| taps.iter().enumerate().map(|(j, h)| h * w[i + 2 * half - j]).sum())
                .collect()
        }
    };
    let mean = x.iter().sum::<f64>() / len.max(1) as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let rms = super::rms(&x);
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v *= 0.2 / rms);
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 1.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
    x
}

fn create_dir(path: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(path).map_err(|e| DataError::io(path, e))
}

/// Generates sources at 48 kHz, downsamples to 16 kHz, mixes every entry
/// at its condition and writes `clean/`, `noise/<kind>/`, `noisy/` and
/// `manifest.tsv` under `out_dir`. The manifest is written last.
pub fn synth_corpus(spec: &SynthSpec, seed: u64, out_dir: impl AsRef<Path>) -> Result<SynthCorpus, DataError> {
    spec.validate()?;
    let root = out_dir.as_ref().to_path_buf();
    create_dir(&root)?;
    create_dir(&root.join("clean"))?;
    create_dir(&root.join("noisy"))?;

    let rate = SOURCE_SAMPLE_RATE as f64;
    let len48 = (spec.clip_seconds * rate).round() as usize;
    let plan = [
        (Split::Train, spec.train_clips, &spec.train_snrs_db, &spec.train_noises),
        (
            Split::Validation,
            spec.validation_clips,
            &spec.train_snrs_db,
            &spec.train_noises,
        ),
        (Split::Test, spec.test_clips, &spec.test_snrs_db, &spec.test_noises),
    ];

    let mut manifest = Manifest {
        seed: Some(seed),
        entries: Vec::new(),
    };
    let mut examples = Vec::new();
    let mut stream = 0u64;
    for (split, count, snrs, noises) in plan {
        for i in 0..count {
            stream += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);

            let id = format!("{split}-{i:04}");
            let snr = snrs[i % snrs.len()];
            let kind = noises[(i / snrs.len()) % noises.len()];

            let clean48 = AudioClip {
                samples: speech_surrogate(len48, rate, &mut rng),
                sample_rate: SOURCE_SAMPLE_RATE,
                id: id.clone(),
            };
            let noise48 = AudioClip {
                samples: noise_signal(kind, len48, rate, &mut rng),
                sample_rate: SOURCE_SAMPLE_RATE,
                id: id.clone(),
            };
            let clean = resample_48k_to_16k(&clean48)?;
            let noise = resample_48k_to_16k(&noise48)?;
            let example = mix_at_snr(&clean, &noise, snr)?;

            let entry = ManifestEntry {
                split,
                clean: PathBuf::from("clean").join(format!("{id}.wav")),
                noise: PathBuf::from("noise").join(kind.to_string()).join(format!("{id}.wav")),
                snr_db: snr,
                noisy: PathBuf::from("noisy").join(format!("{id}.wav")),
            };
            create_dir(&root.join("noise").join(kind.to_string()))?;
            write_wav(&example.clean, root.join(&entry.clean))?;
            write_wav(&noise, root.join(&entry.noise))?;
            write_wav(&example.noisy, root.join(&entry.noisy))?;

            manifest.entries.push(entry);
            examples.push(example);
        }
    }

    let manifest_path = root.join("manifest.tsv");
    manifest.write(&manifest_path)?;
    Ok(SynthCorpus {
        root,
        manifest_path,
        manifest,
        examples,
    })
}
