/// Regression coefficients `[intercept, pesq, llr, wss, ssnr]` of the
/// composite measures (Hu & Loizou, 2008).
pub const CSIG: [f64; 5] = [3.093, 0.603, -1.029, -0.009, 0.0];
pub const CBAK: [f64; 5] = [1.634, 0.478, 0.0, -0.007, 0.063];
pub const COVL: [f64; 5] = [1.594, 0.805, -0.512, -0.007, 0.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composite {
    /// Predicted signal distortion rating.
    pub csig: f64,
    /// Predicted background intrusiveness rating.
    pub cbak: f64,
    /// Predicted overall quality.
    pub covl: f64,
}

fn apply(c: &[f64; 5], pesq: f64, llr: f64, wss: f64, ssnr: f64) -> f64 {
    c[0] + c[1] * pesq + c[2] * llr + c[3] * wss + c[4] * ssnr
}

/// The three regressions without clamping.
pub fn composite_unclamped(pesq: f64, llr: f64, wss: f64, ssnr: f64) -> Composite {
    Composite {
        csig: apply(&CSIG, pesq, llr, wss, ssnr),
        cbak: apply(&CBAK, pesq, llr, wss, ssnr),
        covl: apply(&COVL, pesq, llr, wss, ssnr),
    }
}

/// Composite ratings clamped to the 1–5 opinion scale.
pub fn composite(pesq: f64, llr: f64, wss: f64, ssnr: f64) -> Composite {
    let c = composite_unclamped(pesq, llr, wss, ssnr);
    Composite {
        csig: c.csig.clamp(1.0, 5.0),
        cbak: c.cbak.clamp(1.0, 5.0),
        covl: c.covl.clamp(1.0, 5.0),
    }
}
