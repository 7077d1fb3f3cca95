//! Straight-line reference implementations used as test oracles. Nothing
//! here calls into the library's numeric code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveunet::{AudioClip, ModelParams};

type Signal = Vec<Vec<f64>>;

fn conv_same(x: &Signal, kernel: &[f64], bias: &[f64], width: usize) -> Signal {
    let ci = x.len();
    let n = x[0].len();
    let half = (width / 2) as isize;
    (0..bias.len())
        .map(|o| {
            (0..n)
                .map(|t| {
                    let mut acc = bias[o];
                    for (i, row) in x.iter().enumerate() {
                        for w in 0..width {
                            let s = t as isize + w as isize - half;
                            if s >= 0 && (s as usize) < n {
                                acc += kernel[(o * ci + i) * width + w] * row[s as usize];
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn leaky(x: Signal, alpha: f64) -> Signal {
    x.into_iter()
        .map(|r| r.into_iter().map(|v| if v > 0.0 { v } else { alpha * v }).collect())
        .collect()
}

fn upsample(x: &Signal) -> Signal {
    x.iter()
        .map(|r| {
            let mut out = Vec::with_capacity(2 * r.len() - 1);
            for i in 0..r.len() {
                out.push(r[i]);
                if i + 1 < r.len() {
                    out.push(0.5 * (r[i] + r[i + 1]));
                }
            }
            out
        })
        .collect()
}

/// Wave-U-Net forward written with plain loops over nested vectors.
/// `mixture` must already have a valid length. Returns `[K·C][n]`.
pub fn reference_forward(params: &ModelParams, mixture: &[Vec<f64>]) -> Signal {
    let cfg = params.config();
    let t = params.tensors();
    let mut idx = 0;
    let mut layer = |x: &Signal| {
        let k = &t[idx];
        let b = &t[idx + 1];
        idx += 2;
        conv_same(x, k.data(), b.data(), k.shape()[2])
    };
    let mut cur: Signal = mixture.to_vec();
    let mut skips = Vec::new();
    for _ in 0..cfg.num_layers {
        let h = leaky(layer(&cur), cfg.leaky_alpha);
        cur = h.iter().map(|r| r.iter().step_by(2).copied().collect()).collect();
        skips.push(h);
    }
    cur = leaky(layer(&cur), cfg.leaky_alpha);
    while let Some(skip) = skips.pop() {
        let mut joined = upsample(&cur);
        joined.extend(skip);
        cur = leaky(layer(&joined), cfg.leaky_alpha);
    }
    cur.extend(mixture.iter().cloned());
    layer(&cur)
        .into_iter()
        .map(|r| r.into_iter().map(f64::tanh).collect())
        .collect()
}

/// Fixed clean/degraded pair: a vowel-like harmonic signal with a
/// syllabic envelope over a faint noise floor, and the same signal
/// low-passed, with noise and a silent gap.
pub fn synthetic_pair(len: usize, seed: u64) -> (AudioClip, AudioClip) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = 16000.0;
    let clean: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / fs;
            let env = (PI * t * 3.0).sin().abs();
            let f0 = 130.0 + 20.0 * (2.0 * PI * 1.5 * t).sin();
            let mut v = 0.0;
            for h in 1..=12 {
                let fh = f0 * h as f64;
                let formant = (-((fh - 700.0) / 300.0).powi(2)).exp() + 0.5 * (-((fh - 1800.0) / 400.0).powi(2)).exp();
                v += (0.05 + formant) * (2.0 * PI * fh * t).sin() / h as f64;
            }
            0.3 * env * v + 0.003 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    let mut prev = 0.0;
    let test: Vec<f64> = clean
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            prev = 0.6 * prev + 0.4 * c;
            let gap = (len / 3..len / 3 + 600).contains(&i);
            if gap {
                0.0
            } else {
                prev + 0.02 * rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    (
        AudioClip::new("clean", 16000, clean).unwrap(),
        AudioClip::new("test", 16000, test).unwrap(),
    )
}

pub fn hann(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / (n as f64 + 1.0)).cos()))
        .collect()
}

pub fn frames(x: &[f64], len: usize, hop: usize) -> Vec<Vec<f64>> {
    if x.len() < len {
        return vec![x.to_vec()];
    }
    let mut out = Vec::new();
    let mut s = 0;
    while s + len <= x.len() {
        out.push(x[s..s + len].to_vec());
        s += hop;
    }
    out
}

pub fn trimmed_mean(mut v: Vec<f64>, keep_fraction: f64) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let keep = ((v.len() as f64 * keep_fraction).round() as usize).max(1);
    v[..keep].iter().sum::<f64>() / keep as f64
}

/// Solves `m·x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}

fn autocorr(x: &[f64], order: usize) -> Vec<f64> {
    (0..=order)
        .map(|k| (0..x.len() - k).map(|i| x[i] * x[i + k]).sum())
        .collect()
}

fn toeplitz(r: &[f64], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| r[(i as isize - j as isize).unsigned_abs()]).collect())
        .collect()
}

/// Inverse filter `[1, −a]` from the normal equations `R·a = r`.
fn inverse_filter(r: &[f64], order: usize) -> Vec<f64> {
    let a = solve(toeplitz(r, order), r[1..=order].to_vec());
    std::iter::once(1.0).chain(a.into_iter().map(|v| -v)).collect()
}

fn quad(p: &[f64], m: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            s += p[i] * m[i][j] * p[j];
        }
    }
    s
}

pub fn llr_oracle(clean: &[f64], test: &[f64], frame_len: usize, hop: usize, order: usize) -> f64 {
    let w = hann(frame_len);
    let mut d = Vec::new();
    for (c, t) in frames(clean, frame_len, hop).iter().zip(frames(test, frame_len, hop)) {
        let c: Vec<f64> = c.iter().zip(&w).map(|(a, b)| a * b).collect();
        let t: Vec<f64> = t.iter().zip(&w).map(|(a, b)| a * b).collect();
        let rc = autocorr(&c, order);
        let rt = autocorr(&t, order);
        if rc[0] == 0.0 || rt[0] == 0.0 {
            continue;
        }
        let ac = inverse_filter(&rc, order);
        let at = inverse_filter(&rt, order);
        let big = toeplitz(&rc, order + 1);
        d.push((quad(&at, &big) / quad(&ac, &big)).ln().max(0.0));
    }
    trimmed_mean(d, 0.95)
}

/// `|DFT|²` of the zero-padded frame over the first `n/2` bins, by direct
/// summation.
pub fn dft_power(x: &[f64], n: usize) -> Vec<f64> {
    let cos: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin()).collect();
    (0..n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                let idx = (k * i) % n;
                re += v * cos[idx];
                im -= v * sin[idx];
            }
            re * re + im * im
        })
        .collect()
}

/// Centre frequency and bandwidth (Hz) of the 25 critical bands.
pub const CRITICAL_BANDS: [(f64, f64); 25] = [
    (50.0, 70.0),
    (120.0, 70.0),
    (190.0, 70.0),
    (260.0, 70.0),
    (330.0, 70.0),
    (400.0, 70.0),
    (470.0, 70.0),
    (540.0, 77.3724),
    (617.372, 86.0056),
    (703.378, 95.3398),
    (798.717, 105.411),
    (904.128, 116.256),
    (1020.38, 127.914),
    (1148.3, 140.423),
    (1288.72, 153.823),
    (1442.54, 168.154),
    (1610.7, 183.457),
    (1794.16, 199.776),
    (1993.93, 217.153),
    (2211.08, 235.631),
    (2446.71, 255.255),
    (2701.97, 276.072),
    (2978.04, 298.126),
    (3276.17, 321.465),
    (3597.63, 346.136),
];

fn band_db(power: &[f64], n_fft: usize, fs: f64) -> Vec<f64> {
    let half = n_fft / 2;
    let nyq = fs / 2.0;
    let min_factor = (-30.0 / (2.0 * 2.303f64)).exp();
    CRITICAL_BANDS
        .iter()
        .map(|&(fc, bw_hz)| {
            let f0 = (fc / nyq * half as f64).floor();
            let bw = bw_hz / nyq * half as f64;
            let mut e = 0.0;
            for (j, p) in power.iter().enumerate() {
                let g = (-11.0 * ((j as f64 - f0) / bw).powi(2) + (70.0f64.ln() - bw_hz.ln())).exp();
                if g > min_factor {
                    e += g * p;
                }
            }
            10.0 * e.max(1e-10).log10()
        })
        .collect()
}

/// Peak energies as the reference toolkit's search produces them,
/// transcribed with 1-based indices.
fn loc_peaks(energy: &[f64], slope: &[f64]) -> Vec<f64> {
    let num_crit = energy.len();
    let e = |i: usize| energy[i - 1];
    let s = |i: usize| slope[i - 1];
    (1..num_crit)
        .map(|i| {
            if s(i) > 0.0 {
                let mut n = i;
                while n < num_crit && s(n) > 0.0 {
                    n += 1;
                }
                e(n - 1)
            } else {
                let mut n = i;
                while n > 0 && s(n) <= 0.0 {
                    n -= 1;
                }
                e(n + 1)
            }
        })
        .collect()
}

pub fn wss_oracle(clean: &[f64], test: &[f64], frame_len: usize, hop: usize, fs: f64) -> f64 {
    let n_fft = (2 * frame_len).next_power_of_two();
    let w = hann(frame_len);
    let (kmax, klocmax) = (20.0, 1.0);
    let mut d = Vec::new();
    for (c, t) in frames(clean, frame_len, hop).iter().zip(frames(test, frame_len, hop)) {
        let c: Vec<f64> = c.iter().zip(&w).map(|(a, b)| a * b).collect();
        let t: Vec<f64> = t.iter().zip(&w).map(|(a, b)| a * b).collect();
        let ec = band_db(&dft_power(&c, n_fft), n_fft, fs);
        let et = band_db(&dft_power(&t, n_fft), n_fft, fs);
        let sc: Vec<f64> = ec.windows(2).map(|p| p[1] - p[0]).collect();
        let st: Vec<f64> = et.windows(2).map(|p| p[1] - p[0]).collect();
        let pc = loc_peaks(&ec, &sc);
        let pt = loc_peaks(&et, &st);
        let mc = ec.iter().cloned().fold(f64::MIN, f64::max);
        let mt = et.iter().cloned().fold(f64::MIN, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..sc.len() {
            let wc = kmax / (kmax + mc - ec[i]) * klocmax / (klocmax + pc[i] - ec[i]);
            let wt = kmax / (kmax + mt - et[i]) * klocmax / (klocmax + pt[i] - et[i]);
            let wgt = (wc + wt) / 2.0;
            num += wgt * (sc[i] - st[i]).powi(2);
            den += wgt;
        }
        d.push(num / den);
    }
    trimmed_mean(d, 0.95)
}

pub fn ssnr_oracle(clean: &[f64], test: &[f64], frame_len: usize, hop: usize) -> f64 {
    let fc = frames(clean, frame_len, hop);
    let ft = frames(test, frame_len, hop);
    let energies: Vec<f64> = fc.iter().map(|f| f.iter().map(|v| v * v).sum()).collect();
    let loudest = energies.iter().cloned().fold(0.0, f64::max);
    let mut vals = Vec::new();
    for ((c, t), e) in fc.iter().zip(&ft).zip(&energies) {
        if *e <= 1e-6 * loudest {
            continue;
        }
        let noise: f64 = c.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum();
        let snr = if noise == 0.0 { 35.0 } else { 10.0 * (e / noise).log10() };
        vals.push(snr.clamp(-10.0, 35.0));
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}
