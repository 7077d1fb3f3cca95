use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioClip, DataError, MODEL_SAMPLE_RATE, SOURCE_SAMPLE_RATE};

fn map_hound(path: &Path, err: hound::Error) -> DataError {
    let path = path.to_path_buf();
    match err {
        hound::Error::IoError(source) => DataError::Io { path, source },
        hound::Error::FormatError(detail) => DataError::MalformedWav {
            path,
            detail: detail.to_string(),
        },
        hound::Error::Unsupported => DataError::UnsupportedCodec {
            path,
            detail: "format not supported by the reader".into(),
        },
        other => DataError::UnsupportedCodec {
            path,
            detail: other.to_string(),
        },
    }
}

/// Reads a mono PCM16 or float32 WAV at 16 or 48 kHz. PCM16 maps to
/// `value / 32768`. The clip id is the file stem.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, DataError> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(DataError::MultiChannel {
            path: path.into(),
            channels: spec.channels,
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Float, 32) => {
            let samples: Vec<f64> = reader
                .into_samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?;
            if let Some(&value) = samples.iter().find(|v| !(v.is_finite() && v.abs() <= 1.0)) {
                return Err(DataError::OutOfRange {
                    path: path.into(),
                    value,
                });
            }
            samples
        }
        (format, bits) => {
            return Err(DataError::UnsupportedCodec {
                path: path.into(),
                detail: format!("{format:?} {bits}-bit"),
            })
        }
    };
    if spec.sample_rate != MODEL_SAMPLE_RATE && spec.sample_rate != SOURCE_SAMPLE_RATE {
        return Err(DataError::UnsupportedRate {
            path: path.into(),
            rate: spec.sample_rate,
        });
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(AudioClip {
        samples,
        sample_rate: spec.sample_rate,
        id,
    })
}

/// Writes a mono PCM16 WAV. Samples are rounded to the nearest step of
/// 1/32768 and saturated.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    {
        let mut w = writer.get_i16_writer(clip.samples.len() as u32);
        for &v in &clip.samples {
            let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            w.write_sample(q);
        }
        w.flush().map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write_raw_i16(path: &Path, rate: u32, channels: u16, values: &[i16]) {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &v in values {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn pcm16_extremes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        write_raw_i16(&p, 16000, 1, &[32767, -32768, 0]);
        let clip = read_wav(&p).unwrap();
        assert_eq!(clip.samples[0], 32767.0 / 32768.0);
        assert!((clip.samples[0] - 0.999_969_482_421_875).abs() < 1e-15);
        assert_eq!(clip.samples[1], -1.0);
        assert_eq!(clip.samples[2], 0.0);
        assert_eq!(clip.id, "x");
        assert_eq!(clip.sample_rate, 16000);
    }

    #[test]
    fn pcm16_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<i16> = (0..1000).map(|_| rng.gen()).collect();
        let a = dir.path().join("a.wav");
        let b = dir.path().join("b.wav");
        write_raw_i16(&a, 48000, 1, &values);
        let clip = read_wav(&a).unwrap();
        write_wav(&clip, &b).unwrap();
        let again = read_wav(&b).unwrap();
        assert_eq!(clip.samples, again.samples);
        let raw: Vec<i16> = WavReader::open(&b)
            .unwrap()
            .into_samples::<i16>()
            .map(Result::unwrap)
            .collect();
        assert_eq!(raw, values);
    }

    #[test]
    fn float32_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        for v in [0.25f32, -0.5, 1.0] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(read_wav(&p).unwrap().samples, vec![0.25, -0.5, 1.0]);
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();

        let stereo = dir.path().join("stereo.wav");
        write_raw_i16(&stereo, 16000, 2, &[1, 2, 3, 4]);
        assert!(matches!(
            read_wav(&stereo),
            Err(DataError::MultiChannel { channels: 2, .. })
        ));

        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"RIFX this is not a wave file at all").unwrap();
        assert!(matches!(read_wav(&junk), Err(DataError::MalformedWav { .. })));

        let pcm8 = dir.path().join("pcm8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&pcm8, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&pcm8), Err(DataError::UnsupportedCodec { .. })));

        let odd_rate = dir.path().join("rate.wav");
        write_raw_i16(&odd_rate, 44100, 1, &[0]);
        assert!(matches!(
            read_wav(&odd_rate),
            Err(DataError::UnsupportedRate { rate: 44100, .. })
        ));

        assert!(matches!(
            read_wav(dir.path().join("missing.wav")),
            Err(DataError::Io { .. })
        ));
    }
}
