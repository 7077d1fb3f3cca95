use super::kernels;
use super::{GradError, Tensor};

/// Largest `f64` below 1.
const TANH_LIMIT: f64 = 1.0 - f64::EPSILON / 2.0;

/// Handle to a value recorded in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Kind of a recorded operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Leaf,
    Conv1d,
    LeakyRelu,
    Tanh,
    Decimate2,
    Upsample2,
    Concat,
    Trim,
    Mse,
    Add,
    Scale,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Leaf => "leaf",
            OpKind::Conv1d => "conv1d",
            OpKind::LeakyRelu => "leaky_relu",
            OpKind::Tanh => "tanh",
            OpKind::Decimate2 => "decimate2",
            OpKind::Upsample2 => "linear_upsample2",
            OpKind::Concat => "concat_channels",
            OpKind::Trim => "trim_time",
            OpKind::Mse => "mse_loss",
            OpKind::Add => "add",
            OpKind::Scale => "scale",
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv1d { input: Var, kernel: Var, bias: Var },
    LeakyRelu { x: Var, alpha: f64 },
    Tanh { x: Var },
    Decimate2 { x: Var },
    Upsample2 { x: Var },
    Concat { a: Var, b: Var },
    Trim { x: Var },
    Mse { pred: Var, target: Var },
    Add { a: Var, b: Var },
    Scale { x: Var, factor: f64 },
}

impl Op {
    fn kind(&self) -> OpKind {
        match self {
            Op::Leaf => OpKind::Leaf,
            Op::Conv1d { .. } => OpKind::Conv1d,
            Op::LeakyRelu { .. } => OpKind::LeakyRelu,
            Op::Tanh { .. } => OpKind::Tanh,
            Op::Decimate2 { .. } => OpKind::Decimate2,
            Op::Upsample2 { .. } => OpKind::Upsample2,
            Op::Concat { .. } => OpKind::Concat,
            Op::Trim { .. } => OpKind::Trim,
            Op::Mse { .. } => OpKind::Mse,
            Op::Add { .. } => OpKind::Add,
            Op::Scale { .. } => OpKind::Scale,
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Multiplies every gradient leaving a given op kind by `factor` during
/// backward. Only used to demonstrate that gradient checking catches a
/// broken backward pass.
#[doc(hidden)]
#[derive(Debug, Clone, Copy)]
pub struct BackwardFault {
    pub op: OpKind,
    pub factor: f64,
}

/// Tape of recorded operations. Forward values are computed eagerly when an
/// op is recorded; [`Graph::backward`] replays the tape in reverse.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    fault: Option<BackwardFault>,
}

fn dims2(t: &Tensor, what: &'static str) -> Result<(usize, usize), GradError> {
    match t.shape() {
        &[c, n] => Ok((c, n)),
        other => Err(GradError::Rank {
            what,
            expected: 2,
            shape: other.to_vec(),
        }),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[doc(hidden)]
    pub fn inject_backward_fault(&mut self, fault: Option<BackwardFault>) {
        self.fault = fault;
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Records a leaf. Its `requires_grad` flag decides whether backward
    /// fills its gradient.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        let rg = tensor.requires_grad();
        self.push(Op::Leaf, tensor, rg)
    }

    pub fn param(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor.with_requires_grad(true))
    }

    pub fn constant(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor.with_requires_grad(false))
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    /// Gradient accumulated on a leaf by previous backward passes.
    pub fn grad(&self, var: Var) -> Option<&[f64]> {
        self.nodes[var.0].value.grad()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.value.zero_grad();
        }
    }

    pub fn kind(&self, var: Var) -> OpKind {
        self.nodes[var.0].op.kind()
    }

    /// Signs of every LeakyReLU input recorded so far, in recording order.
    /// Finite-difference checks compare these to detect kink crossings.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let mut bits = Vec::new();
        for node in &self.nodes {
            if let Op::LeakyRelu { x, .. } = node.op {
                bits.extend(self.nodes[x.0].value.data().iter().map(|&v| v > 0.0));
            }
        }
        bits
    }

    pub fn conv1d(&mut self, input: Var, kernel: Var, bias: Var) -> Result<Var, GradError> {
        let (in_ch, length) = dims2(self.value(input), "conv1d input")?;
        let (out_ch, k_in, width) = match self.value(kernel).shape() {
            &[o, i, w] => (o, i, w),
            other => {
                return Err(GradError::Rank {
                    what: "conv1d kernel",
                    expected: 3,
                    shape: other.to_vec(),
                })
            }
        };
        if k_in != in_ch {
            return Err(GradError::ChannelMismatch {
                kernel: k_in,
                input: in_ch,
            });
        }
        if width % 2 == 0 {
            return Err(GradError::EvenKernel(width));
        }
        if length == 0 {
            return Err(GradError::TooShort {
                op: "conv1d",
                min: 1,
                len: 0,
            });
        }
        if self.value(bias).shape() != [out_ch] {
            return Err(GradError::ShapeMismatch {
                op: "conv1d bias",
                left: self.value(bias).shape().to_vec(),
                right: vec![out_ch],
            });
        }
        let out = kernels::conv1d_forward(
            self.value(input).data(),
            in_ch,
            length,
            self.value(kernel).data(),
            self.value(bias).data(),
            out_ch,
            width,
        );
        let value = Tensor::new(vec![out_ch, length], out)?;
        let rg = self.needs(&[input, kernel, bias]);
        Ok(self.push(Op::Conv1d { input, kernel, bias }, value, rg))
    }

    pub fn leaky_relu(&mut self, x: Var, alpha: f64) -> Result<Var, GradError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GradError::InvalidSlope(alpha));
        }
        let src = self.value(x);
        let data = src
            .data()
            .iter()
            .map(|&v| if v > 0.0 { v } else { alpha * v })
            .collect();
        let value = Tensor::new(src.shape().to_vec(), data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(Op::LeakyRelu { x, alpha }, value, rg))
    }

    /// Hyperbolic tangent, kept strictly inside (−1, 1): values that round
    /// to ±1 become the nearest representable value short of it.
    pub fn tanh(&mut self, x: Var) -> Result<Var, GradError> {
        let src = self.value(x);
        let data = src
            .data()
            .iter()
            .map(|v| v.tanh().clamp(-TANH_LIMIT, TANH_LIMIT))
            .collect();
        let value = Tensor::new(src.shape().to_vec(), data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(Op::Tanh { x }, value, rg))
    }

    /// Keeps the samples at even time indices.
    pub fn decimate2(&mut self, x: Var) -> Result<Var, GradError> {
        let (c, n) = dims2(self.value(x), "decimate2 input")?;
        if n < 2 {
            return Err(GradError::TooShort {
                op: "decimate2",
                min: 2,
                len: n,
            });
        }
        let data = kernels::decimate2_forward(self.value(x).data(), c, n);
        let value = Tensor::new(vec![c, n.div_ceil(2)], data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(Op::Decimate2 { x }, value, rg))
    }

    /// Linear interpolation doubling the time resolution: `n` samples in,
    /// `2n - 1` out.
    pub fn upsample2(&mut self, x: Var) -> Result<Var, GradError> {
        let (c, n) = dims2(self.value(x), "upsample2 input")?;
        if n < 2 {
            return Err(GradError::TooShort {
                op: "linear_upsample2",
                min: 2,
                len: n,
            });
        }
        let data = kernels::upsample2_forward(self.value(x).data(), c, n);
        let value = Tensor::new(vec![c, 2 * n - 1], data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(Op::Upsample2 { x }, value, rg))
    }

    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let (ca, na) = dims2(self.value(a), "concat input")?;
        let (cb, nb) = dims2(self.value(b), "concat input")?;
        if na != nb {
            return Err(GradError::LengthMismatch { left: na, right: nb });
        }
        let mut data = Vec::with_capacity((ca + cb) * na);
        data.extend_from_slice(self.value(a).data());
        data.extend_from_slice(self.value(b).data());
        let value = Tensor::new(vec![ca + cb, na], data)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(Op::Concat { a, b }, value, rg))
    }

    /// Keeps the first `length` samples of every channel.
    pub fn trim_time(&mut self, x: Var, length: usize) -> Result<Var, GradError> {
        let (c, n) = dims2(self.value(x), "trim input")?;
        if length > n {
            return Err(GradError::TooShort {
                op: "trim_time",
                min: length,
                len: n,
            });
        }
        let src = self.value(x).data();
        let mut data = Vec::with_capacity(c * length);
        for ch in 0..c {
            data.extend_from_slice(&src[ch * n..ch * n + length]);
        }
        let value = Tensor::new(vec![c, length], data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(Op::Trim { x }, value, rg))
    }

    /// Mean of squared differences over every element.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var, GradError> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(GradError::ShapeMismatch {
                op: "mse_loss",
                left: p.shape().to_vec(),
                right: t.shape().to_vec(),
            });
        }
        if p.is_empty() {
            return Err(GradError::Empty("mse_loss"));
        }
        let sum: f64 = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        let value = Tensor::scalar(sum / p.len() as f64);
        let rg = self.needs(&[pred, target]);
        Ok(self.push(Op::Mse { pred, target }, value, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(GradError::ShapeMismatch {
                op: "add",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(Op::Add { a, b }, value, rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var, GradError> {
        let src = self.value(x);
        let data = src.data().iter().map(|v| v * factor).collect();
        let value = Tensor::new(src.shape().to_vec(), data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(Op::Scale { x, factor }, value, rg))
    }

    /// Arithmetic mean of equally-shaped values, recorded as adds and a scale.
    pub fn mean(&mut self, vars: &[Var]) -> Result<Var, GradError> {
        let (&first, rest) = vars.split_first().ok_or(GradError::Empty("mean"))?;
        let mut acc = first;
        for &v in rest {
            acc = self.add(acc, v)?;
        }
        self.scale(acc, 1.0 / vars.len() as f64)
    }

    /// Reverse pass from a single-element `loss`. Gradients are added to the
    /// leaves that require them, so repeated calls accumulate.
    pub fn backward(&mut self, loss: Var) -> Result<(), GradError> {
        let root = &self.nodes[loss.0];
        if root.value.len() != 1 {
            return Err(GradError::NotScalar(root.value.shape().to_vec()));
        }
        for node in self.nodes.iter_mut() {
            if matches!(node.op, Op::Leaf) && node.requires_grad && node.value.grad().is_none() {
                let n = node.value.len();
                node.value.set_grad(Some(vec![0.0; n]));
            }
        }
        let mut adjoints: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adjoints[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(mut g) = adjoints[idx].take() else {
                continue;
            };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let op = self.nodes[idx].op.clone();
            if let Some(fault) = self.fault {
                if fault.op == op.kind() {
                    g.iter_mut().for_each(|v| *v *= fault.factor);
                }
            }
            match op {
                Op::Leaf => {
                    self.nodes[idx].value.accumulate_grad(&g);
                }
                Op::Conv1d { input, kernel, bias } => {
                    let x = &self.nodes[input.0];
                    let k = &self.nodes[kernel.0];
                    let (in_ch, length) = (x.value.shape()[0], x.value.shape()[1]);
                    let (out_ch, width) = (k.value.shape()[0], k.value.shape()[2]);
                    let want_params = k.requires_grad || self.nodes[bias.0].requires_grad;
                    let (dx, dk, db) = kernels::conv1d_backward(
                        &g,
                        x.value.data(),
                        in_ch,
                        length,
                        k.value.data(),
                        out_ch,
                        width,
                        x.requires_grad,
                        want_params,
                    );
                    if let Some(dx) = dx {
                        accumulate(&mut adjoints, input, dx);
                    }
                    if let Some(dk) = dk {
                        accumulate(&mut adjoints, kernel, dk);
                    }
                    if let Some(db) = db {
                        accumulate(&mut adjoints, bias, db);
                    }
                }
                Op::LeakyRelu { x, alpha } => {
                    let src = self.nodes[x.0].value.data();
                    let dx = g
                        .iter()
                        .zip(src)
                        .map(|(g, &v)| if v > 0.0 { *g } else { alpha * g })
                        .collect();
                    accumulate(&mut adjoints, x, dx);
                }
                Op::Tanh { x } => {
                    let out = self.nodes[idx].value.data();
                    let dx = g.iter().zip(out).map(|(g, y)| g * (1.0 - y * y)).collect();
                    accumulate(&mut adjoints, x, dx);
                }
                Op::Decimate2 { x } => {
                    let s = self.nodes[x.0].value.shape();
                    let dx = kernels::decimate2_backward(&g, s[0], s[1]);
                    accumulate(&mut adjoints, x, dx);
                }
                Op::Upsample2 { x } => {
                    let s = self.nodes[x.0].value.shape();
                    let dx = kernels::upsample2_backward(&g, s[0], s[1]);
                    accumulate(&mut adjoints, x, dx);
                }
                Op::Concat { a, b } => {
                    let split = self.nodes[a.0].value.len();
                    let gb = g.split_off(split);
                    accumulate(&mut adjoints, a, g);
                    accumulate(&mut adjoints, b, gb);
                }
                Op::Trim { x } => {
                    let s = self.nodes[x.0].value.shape();
                    let (c, n) = (s[0], s[1]);
                    let keep = g.len() / c.max(1);
                    let mut dx = vec![0.0; c * n];
                    for ch in 0..c {
                        dx[ch * n..ch * n + keep].copy_from_slice(&g[ch * keep..(ch + 1) * keep]);
                    }
                    accumulate(&mut adjoints, x, dx);
                }
                Op::Mse { pred, target } => {
                    let p = self.nodes[pred.0].value.data();
                    let t = self.nodes[target.0].value.data();
                    let coef = 2.0 * g[0] / p.len() as f64;
                    let dp: Vec<f64> = p.iter().zip(t).map(|(a, b)| coef * (a - b)).collect();
                    if self.nodes[target.0].requires_grad {
                        let dt = dp.iter().map(|v| -v).collect();
                        accumulate(&mut adjoints, target, dt);
                    }
                    accumulate(&mut adjoints, pred, dp);
                }
                Op::Add { a, b } => {
                    accumulate(&mut adjoints, b, g.clone());
                    accumulate(&mut adjoints, a, g);
                }
                Op::Scale { x, factor } => {
                    g.iter_mut().for_each(|v| *v *= factor);
                    accumulate(&mut adjoints, x, g);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(adjoints: &mut [Option<Vec<f64>>], var: Var, delta: Vec<f64>) {
    match &mut adjoints[var.0] {
        Some(existing) => existing.iter_mut().zip(&delta).for_each(|(e, d)| *e += d),
        slot @ None => *slot = Some(delta),
    }
}
