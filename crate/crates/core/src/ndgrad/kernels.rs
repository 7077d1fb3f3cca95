//! Slice-level forward and backward kernels behind the graph operations.
//!
//! Layouts are row-major: signals are `[channels × length]`, convolution
//! kernels `[out × in × width]`.

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results are deterministic.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn pad_rows(input: &[f64], channels: usize, length: usize, pad: usize) -> Vec<f64> {
    let padded_len = length + 2 * pad;
    let mut padded = vec![0.0; channels * padded_len];
    for c in 0..channels {
        padded[c * padded_len + pad..c * padded_len + pad + length]
            .copy_from_slice(&input[c * length..(c + 1) * length]);
    }
    padded
}

/// Same-length convolution with symmetric zero padding of `(width - 1) / 2`.
pub fn conv1d_forward(
    input: &[f64],
    in_ch: usize,
    length: usize,
    kernel: &[f64],
    bias: &[f64],
    out_ch: usize,
    width: usize,
) -> Vec<f64> {
    let pad = (width - 1) / 2;
    let padded_len = length + 2 * pad;
    let padded = pad_rows(input, in_ch, length, pad);
    let mut out = vec![0.0; out_ch * length];
    for o in 0..out_ch {
        let row = &mut out[o * length..(o + 1) * length];
        row.fill(bias[o]);
        for i in 0..in_ch {
            let x = &padded[i * padded_len..(i + 1) * padded_len];
            let taps = &kernel[(o * in_ch + i) * width..(o * in_ch + i + 1) * width];
            for (w, &k) in taps.iter().enumerate() {
                axpy(k, &x[w..w + length], row);
            }
        }
    }
    out
}

/// Gradients of [`conv1d_forward`] with respect to input, kernel and bias.
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
pub fn conv1d_backward(
    upstream: &[f64],
    input: &[f64],
    in_ch: usize,
    length: usize,
    kernel: &[f64],
    out_ch: usize,
    width: usize,
    want_input: bool,
    want_params: bool,
) -> (Option<Vec<f64>>, Option<Vec<f64>>, Option<Vec<f64>>) {
    let pad = (width - 1) / 2;
    let padded_len = length + 2 * pad;

    let (d_kernel, d_bias) = if want_params {
        let padded = pad_rows(input, in_ch, length, pad);
        let mut dk = vec![0.0; kernel.len()];
        let mut db = vec![0.0; out_ch];
        for o in 0..out_ch {
            let g = &upstream[o * length..(o + 1) * length];
            db[o] = g.iter().sum();
            for i in 0..in_ch {
                let x = &padded[i * padded_len..(i + 1) * padded_len];
                let base = (o * in_ch + i) * width;
                for w in 0..width {
                    dk[base + w] = dot(g, &x[w..w + length]);
                }
            }
        }
        (Some(dk), Some(db))
    } else {
        (None, None)
    };

    let d_input = want_input.then(|| {
        let mut dpad = vec![0.0; in_ch * padded_len];
        for o in 0..out_ch {
            let g = &upstream[o * length..(o + 1) * length];
            for i in 0..in_ch {
                let dx = &mut dpad[i * padded_len..(i + 1) * padded_len];
                let taps = &kernel[(o * in_ch + i) * width..(o * in_ch + i + 1) * width];
                for (w, &k) in taps.iter().enumerate() {
                    axpy(k, g, &mut dx[w..w + length]);
                }
            }
        }
        let mut dx = vec![0.0; in_ch * length];
        for i in 0..in_ch {
            dx[i * length..(i + 1) * length]
                .copy_from_slice(&dpad[i * padded_len + pad..i * padded_len + pad + length]);
        }
        dx
    });

    (d_input, d_kernel, d_bias)
}

pub fn decimate2_forward(input: &[f64], channels: usize, length: usize) -> Vec<f64> {
    let out_len = length.div_ceil(2);
    let mut out = Vec::with_capacity(channels * out_len);
    for c in 0..channels {
        out.extend(input[c * length..(c + 1) * length].iter().step_by(2));
    }
    out
}

pub fn decimate2_backward(upstream: &[f64], channels: usize, length: usize) -> Vec<f64> {
    let out_len = length.div_ceil(2);
    let mut dx = vec![0.0; channels * length];
    for c in 0..channels {
        for j in 0..out_len {
            dx[c * length + 2 * j] = upstream[c * out_len + j];
        }
    }
    dx
}

/// Linear interpolation to `2 * length - 1` samples.
pub fn upsample2_forward(input: &[f64], channels: usize, length: usize) -> Vec<f64> {
    let out_len = 2 * length - 1;
    let mut out = vec![0.0; channels * out_len];
    for c in 0..channels {
        let x = &input[c * length..(c + 1) * length];
        let y = &mut out[c * out_len..(c + 1) * out_len];
        for j in 0..length {
            y[2 * j] = x[j];
        }
        for j in 0..length - 1 {
            y[2 * j + 1] = 0.5 * (x[j] + x[j + 1]);
        }
    }
    out
}

pub fn upsample2_backward(upstream: &[f64], channels: usize, length: usize) -> Vec<f64> {
    let out_len = 2 * length - 1;
    let mut dx = vec![0.0; channels * length];
    for c in 0..channels {
        let g = &upstream[c * out_len..(c + 1) * out_len];
        let d = &mut dx[c * length..(c + 1) * length];
        for j in 0..length {
            d[j] += g[2 * j];
        }
        for j in 0..length - 1 {
            let half = 0.5 * g[2 * j + 1];
            d[j] += half;
            d[j + 1] += half;
        }
    }
    dx
}
