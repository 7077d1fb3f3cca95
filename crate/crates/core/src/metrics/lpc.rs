use super::{analysis_window, check_pair, trimmed_mean, FrameConfig, MetricsError};
use crate::datapipe::AudioClip;

/// All-pole model of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Lpc {
    /// Predictor coefficients `a_1..a_p` with `x[n] ≈ Σ a_k·x[n−k]`.
    pub coeffs: Vec<f64>,
    /// Autocorrelation `R_0..R_p`.
    pub autocorr: Vec<f64>,
    pub reflection: Vec<f64>,
    /// Final prediction error energy.
    pub error: f64,
}

impl Lpc {
    /// Inverse filter `[1, −a_1, …, −a_p]`.
    pub fn polynomial(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.coeffs.iter().map(|a| -a)).collect()
    }
}

/// Levinson–Durbin solution of the autocorrelation normal equations of
/// `frame` (which the caller is expected to have windowed).
pub fn lpc_coeffs(frame: &[f64], order: usize) -> Result<Lpc, MetricsError> {
    if frame.len() <= order {
        return Err(MetricsError::FrameTooShort {
            order,
            len: frame.len(),
        });
    }
    let n = frame.len();
    let r: Vec<f64> = (0..=order)
        .map(|k| frame[..n - k].iter().zip(&frame[k..]).map(|(a, b)| a * b).sum())
        .collect();
    if r[0] <= 0.0 {
        return Err(MetricsError::ZeroEnergy);
    }
    let mut a = vec![0.0; order];
    let mut reflection = vec![0.0; order];
    let mut err = r[0];
    for i in 0..order {
        if err <= 0.0 {
            break;
        }
        let acc: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = (r[i + 1] - acc) / err;
        reflection[i] = k;
        let prev = a.clone();
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        err *= 1.0 - k * k;
    }
    Ok(Lpc {
        coeffs: a,
        autocorr: r,
        reflection,
        error: err.max(0.0),
    })
}

/// `p·T(r)·pᵀ` with `T(r)` the symmetric Toeplitz matrix built from `r`.
fn toeplitz_form(p: &[f64], r: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, pi) in p.iter().enumerate() {
        for (j, pj) in p.iter().enumerate() {
            total += pi * pj * r[i.abs_diff(j)];
        }
    }
    total
}

/// Per-frame log-likelihood ratios `ln(a_t·R_c·a_tᵀ / a_c·R_c·a_cᵀ)`, where
/// `a_c`, `a_t` are the clean and test inverse filters and `R_c` the clean
/// autocorrelation matrix. Frames where either signal has zero energy are
/// skipped.
pub fn llr_frames(clean: &AudioClip, test: &AudioClip, cfg: &FrameConfig) -> Result<Vec<f64>, MetricsError> {
    cfg.validate()?;
    check_pair(clean, test)?;
    let starts = cfg.frame_starts(clean.len());
    let window = analysis_window(cfg.frame_length);
    let mut out = Vec::with_capacity(starts.len());
    let mut cf = Vec::with_capacity(cfg.frame_length);
    let mut tf = Vec::with_capacity(cfg.frame_length);
    for s in starts {
        cf.clear();
        tf.clear();
        cf.extend(cfg.frame(&clean.samples, s).iter().zip(&window).map(|(x, w)| x * w));
        tf.extend(cfg.frame(&test.samples, s).iter().zip(&window).map(|(x, w)| x * w));
        let order = cfg.lpc_order.min(cf.len().saturating_sub(1));
        let (c, t) = match (lpc_coeffs(&cf, order), lpc_coeffs(&tf, order)) {
            (Ok(c), Ok(t)) => (c, t),
            (Err(MetricsError::ZeroEnergy), _) | (_, Err(MetricsError::ZeroEnergy)) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let num = toeplitz_form(&t.polynomial(), &c.autocorr);
        let den = toeplitz_form(&c.polynomial(), &c.autocorr);
        // The clean inverse filter minimizes the form, so the ratio is ≥ 1
        // up to rounding.
        out.push((num / den).ln().max(0.0));
    }
    if out.is_empty() {
        return Err(MetricsError::AllSilent(clean.id.clone()));
    }
    Ok(out)
}

/// Mean LLR over the lowest `trim_fraction` of frames.
pub fn llr(clean: &AudioClip, test: &AudioClip, cfg: &FrameConfig) -> Result<f64, MetricsError> {
    let mut frames = llr_frames(clean, test, cfg)?;
    Ok(trimmed_mean(&mut frames, cfg.trim_fraction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn white_noise_has_small_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lpc = lpc_coeffs(&x, 16).unwrap();
        assert!(lpc.coeffs.iter().all(|a| a.abs() < 0.1), "{:?}", lpc.coeffs);
        assert!(lpc.error > 0.0);
    }

    #[test]
    fn ar1_coefficient_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = vec![0.0f64; 10_000];
        for n in 1..x.len() {
            x[n] = 0.9 * x[n - 1] + rng.gen_range(-1.0..1.0);
        }
        let lpc = lpc_coeffs(&x, 16).unwrap();
        assert!((lpc.coeffs[0] - 0.9).abs() < 0.02, "{}", lpc.coeffs[0]);
    }

    #[test]
    fn order_zero_is_gain_only() {
        let lpc = lpc_coeffs(&[0.5, -0.5, 1.0], 0).unwrap();
        assert!(lpc.coeffs.is_empty());
        assert_eq!(lpc.polynomial(), vec![1.0]);
        assert_eq!(lpc.error, 1.5);
    }

    #[test]
    fn zero_frame_rejected() {
        assert!(matches!(lpc_coeffs(&[0.0; 20], 4), Err(MetricsError::ZeroEnergy)));
        assert!(matches!(
            lpc_coeffs(&[1.0; 4], 4),
            Err(MetricsError::FrameTooShort { .. })
        ));
    }
}
