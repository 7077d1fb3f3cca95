use std::sync::OnceLock;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{analysis_window, check_pair, trimmed_mean, FrameConfig, MetricsError};
use crate::datapipe::AudioClip;

/// Weight constant for distance from the frame's global spectral maximum.
pub const WSS_KMAX: f64 = 20.0;
/// Weight constant for distance from the nearest local spectral peak.
pub const WSS_KLOCMAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalBand {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
}

const BAND_TABLE: &str = include_str!("../../data/critical_bands.tsv");

/// The 25-band filter bank from `data/critical_bands.tsv`.
pub fn critical_bands() -> &'static [CriticalBand] {
    static BANDS: OnceLock<Vec<CriticalBand>> = OnceLock::new();
    BANDS.get_or_init(|| {
        BAND_TABLE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut f = l
                    .split('\t')
                    .map(|v| v.trim().parse::<f64>().expect("numeric band table"));
                CriticalBand {
                    center_hz: f.next().expect("center column"),
                    bandwidth_hz: f.next().expect("bandwidth column"),
                }
            })
            .collect()
    })
}

/// Gaussian-shaped band weights over the first `n_fft / 2` bins, cut off
/// below their −30 dB point and normalized to the narrowest band.
fn filter_bank(n_fft: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let bands = critical_bands();
    let half = n_fft / 2;
    let nyquist = sample_rate as f64 / 2.0;
    let bw_min = bands[0].bandwidth_hz;
    let min_factor = (-30.0 / (2.0 * 2.303f64)).exp();
    bands
        .iter()
        .map(|b| {
            let f0 = (b.center_hz / nyquist * half as f64).floor();
            let bw = b.bandwidth_hz / nyquist * half as f64;
            let norm = bw_min.ln() - b.bandwidth_hz.ln();
            (0..half)
                .map(|j| {
                    let w = (-11.0 * ((j as f64 - f0) / bw).powi(2) + norm).exp();
                    if w > min_factor {
                        w
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Band energies in dB for one windowed frame.
fn band_energies_db(spectrum: &[f64], bank: &[Vec<f64>]) -> Vec<f64> {
    bank.iter()
        .map(|w| {
            let e: f64 = w.iter().zip(spectrum).map(|(a, b)| a * b).sum();
            10.0 * e.max(1e-10).log10()
        })
        .collect()
}

/// For every band slope, the energy at the nearest spectral peak in the
/// direction the slope points, walked the same way as the reference
/// toolkit.
fn nearest_peaks(energy: &[f64], slope: &[f64]) -> Vec<f64> {
    let nb = energy.len();
    (0..nb - 1)
        .map(|i| {
            if slope[i] > 0.0 {
                let mut n = i;
                while n < nb - 1 && slope[n] > 0.0 {
                    n += 1;
                }
                energy[n - 1]
            } else {
                let mut n = i as isize;
                while n >= 0 && slope[n as usize] <= 0.0 {
                    n -= 1;
                }
                energy[(n + 1) as usize]
            }
        })
        .collect()
}

fn frame_distance(clean: &[f64], test: &[f64]) -> f64 {
    let nb = clean.len();
    let slope = |e: &[f64]| -> Vec<f64> { (0..nb - 1).map(|i| e[i + 1] - e[i]).collect() };
    let (cs, ts) = (slope(clean), slope(test));
    let (cp, tp) = (nearest_peaks(clean, &cs), nearest_peaks(test, &ts));
    let cmax = clean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tmax = test.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..nb - 1 {
        let wc = WSS_KMAX / (WSS_KMAX + cmax - clean[i]) * WSS_KLOCMAX / (WSS_KLOCMAX + cp[i] - clean[i]);
        let wt = WSS_KMAX / (WSS_KMAX + tmax - test[i]) * WSS_KLOCMAX / (WSS_KLOCMAX + tp[i] - test[i]);
        let w = 0.5 * (wc + wt);
        num += w * (cs[i] - ts[i]).powi(2);
        den += w;
    }
    num / den
}

/// Weighted spectral slope distance of every frame.
pub fn wss_frames(clean: &AudioClip, test: &AudioClip, cfg: &FrameConfig) -> Result<Vec<f64>, MetricsError> {
    cfg.validate()?;
    check_pair(clean, test)?;
    let n_fft = (2 * cfg.frame_length).next_power_of_two();
    let bank = filter_bank(n_fft, clean.sample_rate);
    let window = analysis_window(cfg.frame_length);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut power = |x: &[f64]| -> Vec<f64> {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for ((b, v), w) in buf.iter_mut().zip(x).zip(&window) {
            b.re = v * w;
        }
        fft.process(&mut buf);
        buf[..n_fft / 2].iter().map(|c| c.norm_sqr()).collect()
    };
    Ok(cfg
        .frame_starts(clean.len())
        .into_iter()
        .map(|s| {
            let ce = band_energies_db(&power(cfg.frame(&clean.samples, s)), &bank);
            let te = band_energies_db(&power(cfg.frame(&test.samples, s)), &bank);
            frame_distance(&ce, &te)
        })
        .collect())
}

/// Mean WSS over the lowest `trim_fraction` of frames.
pub fn wss(clean: &AudioClip, test: &AudioClip, cfg: &FrameConfig) -> Result<f64, MetricsError> {
    let mut frames = wss_frames(clean, test, cfg)?;
    Ok(trimmed_mean(&mut frames, cfg.trim_fraction))
}
