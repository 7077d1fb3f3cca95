//! Central finite-difference verification of the autodiff tape.
//!
//! Every differentiable op is checked on several randomized shapes, and the
//! whole network is checked on a sample of its weights. Probes whose ±h
//! perturbation flips the sign of any LeakyReLU input are discarded, since
//! the finite difference straddles a kink there.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{forward_on_graph, ModelError, ModelParams, WaveUNetConfig};
use crate::ndgrad::{BackwardFault, GradError, Graph, Tensor, Var};

pub const FD_STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor of [`relative_error`].
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// One coordinate of one input tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub input: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    pub probe: Probe,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// Builds a scalar loss from leaves holding `inputs`.
pub trait LossFn: Fn(&mut Graph, &[Var]) -> Result<Var, GradError> {}
impl<F: Fn(&mut Graph, &[Var]) -> Result<Var, GradError>> LossFn for F {}

fn evaluate<F: LossFn>(inputs: &[Tensor], build: &F) -> Result<(f64, Vec<bool>), GradError> {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let loss = build(&mut g, &vars)?;
    let value = g
        .value(loss)
        .item()
        .ok_or_else(|| GradError::NotScalar(g.value(loss).shape().to_vec()))?;
    Ok((value, g.activation_pattern()))
}

/// Analytic gradients of the loss with respect to every input.
pub fn analytic_gradients<F: LossFn>(
    inputs: &[Tensor],
    build: &F,
    fault: Option<BackwardFault>,
) -> Result<(Vec<Vec<f64>>, Vec<bool>), GradError> {
    let mut g = Graph::new();
    g.inject_backward_fault(fault);
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let loss = build(&mut g, &vars)?;
    g.backward(loss)?;
    let grads = vars
        .iter()
        .map(|&v| {
            g.grad(v)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; g.value(v).len()])
        })
        .collect();
    Ok((grads, g.activation_pattern()))
}

/// Central difference at `probe`, or `None` when the perturbation crosses a
/// LeakyReLU kink.
pub fn numeric_gradient<F: LossFn>(
    inputs: &[Tensor],
    build: &F,
    probe: Probe,
    pattern: &[bool],
) -> Result<Option<f64>, GradError> {
    let mut shifted = inputs.to_vec();
    let x0 = inputs[probe.input].data()[probe.index];
    shifted[probe.input].data_mut()[probe.index] = x0 + FD_STEP;
    let (plus, p_plus) = evaluate(&shifted, build)?;
    shifted[probe.input].data_mut()[probe.index] = x0 - FD_STEP;
    let (minus, p_minus) = evaluate(&shifted, build)?;
    if p_plus != pattern || p_minus != pattern {
        return Ok(None);
    }
    Ok(Some((plus - minus) / (2.0 * FD_STEP)))
}

/// Checks `probes` (or every coordinate when `None`), skipping kink
/// crossings. Returns the checked probes and the number skipped.
pub fn check<F: LossFn>(
    inputs: &[Tensor],
    build: &F,
    probes: Option<&[Probe]>,
    fault: Option<BackwardFault>,
) -> Result<(Vec<ProbeResult>, usize), GradError> {
    let (grads, pattern) = analytic_gradients(inputs, build, fault)?;
    let all: Vec<Probe>;
    let probes = match probes {
        Some(p) => p,
        None => {
            all = inputs
                .iter()
                .enumerate()
                .flat_map(|(i, t)| (0..t.len()).map(move |index| Probe { input: i, index }))
                .collect();
            &all
        }
    };
    let mut results = Vec::with_capacity(probes.len());
    let mut skipped = 0;
    for &probe in probes {
        match numeric_gradient(inputs, build, probe, &pattern)? {
            Some(numeric) => {
                let analytic = grads[probe.input][probe.index];
                results.push(ProbeResult {
                    probe,
                    analytic,
                    numeric,
                    rel_error: relative_error(analytic, numeric),
                });
            }
            None => skipped += 1,
        }
    }
    Ok((results, skipped))
}

/// Outcome for one op (or the whole network) across its test cases.
#[derive(Debug, Clone, PartialEq)]
pub struct OpReport {
    pub name: String,
    pub cases: usize,
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl OpReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel_error < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub ops: Vec<OpReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        !self.ops.is_empty() && self.ops.iter().all(OpReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OpReport> {
        self.ops.iter().filter(|o| !o.passed())
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:>5} {:>7} {:>7} {:>13}  result",
            "op", "cases", "checked", "skipped", "max_rel_err"
        )?;
        for op in &self.ops {
            writeln!(
                f,
                "{:<18} {:>5} {:>7} {:>7} {:>13.3e}  {}",
                op.name,
                op.cases,
                op.checked,
                op.skipped,
                op.max_rel_error,
                if op.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-scale..scale)).collect()).expect("shape and data agree")
}

/// Inputs and loss builder for one op case. Non-scalar outputs are reduced
/// with an MSE against a random target, passed as the last input.
type LossBuilder = Box<dyn Fn(&mut Graph, &[Var]) -> Result<Var, GradError>>;
type Case = (Vec<Tensor>, LossBuilder);

fn against_target(op: impl Fn(&mut Graph, &[Var]) -> Result<Var, GradError> + 'static) -> LossBuilder {
    Box::new(move |g: &mut Graph, v: &[Var]| {
        let (target, args) = v.split_last().expect("target present");
        let out = op(g, args)?;
        g.mse_loss(out, *target)
    })
}

fn op_cases(name: &str, rng: &mut ChaCha8Rng) -> Vec<Case> {
    let mut cases: Vec<Case> = Vec::new();
    match name {
        "conv1d" => {
            for &(ci, n, co, w) in &[(1, 8, 1, 3), (2, 8, 3, 5), (3, 17, 2, 15)] {
                cases.push((
                    vec![
                        random(rng, &[ci, n], 1.0),
                        random(rng, &[co, ci, w], 0.5),
                        random(rng, &[co], 0.5),
                        random(rng, &[co, n], 1.0),
                    ],
                    against_target(|g, v| g.conv1d(v[0], v[1], v[2])),
                ));
            }
        }
        "leaky_relu" => {
            for shape in [[1, 7], [2, 8], [3, 16]] {
                cases.push((
                    vec![random(rng, &shape, 1.0), random(rng, &shape, 1.0)],
                    against_target(|g, v| g.leaky_relu(v[0], 0.3)),
                ));
            }
        }
        "tanh" => {
            for shape in [[1, 5], [2, 8], [4, 9]] {
                cases.push((
                    vec![random(rng, &shape, 2.0), random(rng, &shape, 1.0)],
                    against_target(|g, v| g.tanh(v[0])),
                ));
            }
        }
        "decimate2" => {
            for (c, n) in [(1, 2), (2, 7), (3, 16)] {
                cases.push((
                    vec![random(rng, &[c, n], 1.0), random(rng, &[c, n.div_ceil(2)], 1.0)],
                    against_target(|g, v| g.decimate2(v[0])),
                ));
            }
        }
        "linear_upsample2" => {
            for (c, n) in [(1, 2), (2, 5), (3, 9)] {
                cases.push((
                    vec![random(rng, &[c, n], 1.0), random(rng, &[c, 2 * n - 1], 1.0)],
                    against_target(|g, v| g.upsample2(v[0])),
                ));
            }
        }
        "concat_channels" => {
            for (ca, cb, n) in [(1, 1, 4), (1, 2, 6), (3, 2, 5)] {
                cases.push((
                    vec![
                        random(rng, &[ca, n], 1.0),
                        random(rng, &[cb, n], 1.0),
                        random(rng, &[ca + cb, n], 1.0),
                    ],
                    against_target(|g, v| g.concat_channels(v[0], v[1])),
                ));
            }
        }
        "trim_time" => {
            for (c, n, keep) in [(1, 5, 3), (2, 9, 9), (3, 8, 1)] {
                cases.push((
                    vec![random(rng, &[c, n], 1.0), random(rng, &[c, keep], 1.0)],
                    against_target(move |g, v| g.trim_time(v[0], keep)),
                ));
            }
        }
        "mse_loss" => {
            for shape in [vec![1], vec![2, 3], vec![2, 1, 7]] {
                cases.push((
                    vec![random(rng, &shape, 1.0), random(rng, &shape, 1.0)],
                    Box::new(|g: &mut Graph, v: &[Var]| g.mse_loss(v[0], v[1])),
                ));
            }
        }
        "add" => {
            for shape in [[1, 3], [2, 4], [3, 5]] {
                cases.push((
                    vec![
                        random(rng, &shape, 1.0),
                        random(rng, &shape, 1.0),
                        random(rng, &shape, 1.0),
                    ],
                    against_target(|g, v| g.add(v[0], v[1])),
                ));
            }
        }
        "scale" => {
            for (shape, k) in [([1, 3], 0.5), ([2, 4], -2.0), ([3, 5], 3.0)] {
                cases.push((
                    vec![random(rng, &shape, 1.0), random(rng, &shape, 1.0)],
                    against_target(move |g, v| g.scale(v[0], k)),
                ));
            }
        }
        _ => unreachable!("unknown op {name}"),
    }
    cases
}

pub const OP_NAMES: [&str; 10] = [
    "conv1d",
    "leaky_relu",
    "tanh",
    "decimate2",
    "linear_upsample2",
    "concat_channels",
    "trim_time",
    "mse_loss",
    "add",
    "scale",
];

fn check_op(name: &str, rng: &mut ChaCha8Rng, fault: Option<BackwardFault>) -> Result<OpReport, GradError> {
    let cases = op_cases(name, rng);
    let mut report = OpReport {
        name: name.to_string(),
        cases: cases.len(),
        checked: 0,
        skipped: 0,
        max_rel_error: 0.0,
        tolerance: TOLERANCE,
    };
    for (inputs, build) in cases {
        let (results, skipped) = check(&inputs, &build, None, fault)?;
        report.checked += results.len();
        report.skipped += skipped;
        for r in results {
            report.max_rel_error = report.max_rel_error.max(r.rel_error);
        }
    }
    Ok(report)
}

/// Finite-difference check of `probes_wanted` random weights of a whole
/// network on a random mixture against random targets.
pub fn check_model(
    config: WaveUNetConfig,
    length: usize,
    probes_wanted: usize,
    seed: u64,
    fault: Option<BackwardFault>,
) -> Result<OpReport, ModelError> {
    if !config.is_valid_length(length) {
        return Err(ModelError::IncompatibleLength {
            len: length,
            nearest: config.valid_length(length),
        });
    }
    let params = ModelParams::init(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut inputs: Vec<Tensor> = params.tensors().to_vec();
    // Zero biases would leave every bias probe sitting on a trivially flat
    // region; random biases exercise their gradients too.
    for t in inputs.iter_mut().filter(|t| t.rank() == 1) {
        t.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
    }
    let n_params = inputs.len();
    inputs.push(random(&mut rng, &[config.num_channels, length], 0.9));
    inputs.push(random(&mut rng, &[config.output_channels(), length], 0.5));

    let cfg = config;
    let build = move |g: &mut Graph, v: &[Var]| -> Result<Var, GradError> {
        let out = match forward_on_graph(g, &cfg, &v[..n_params], v[n_params]) {
            Ok(out) => out,
            Err(ModelError::Grad(e)) => return Err(e),
            Err(other) => unreachable!("config and length validated up front: {other}"),
        };
        g.mse_loss(out, v[n_params + 1])
    };

    let mut candidates: Vec<Probe> = (0..n_params)
        .flat_map(|i| (0..inputs[i].len()).map(move |index| Probe { input: i, index }))
        .collect();
    candidates.shuffle(&mut rng);

    let (grads, pattern) = analytic_gradients(&inputs, &build, fault)?;
    let mut report = OpReport {
        name: format!("wave_u_net(L={})", config.num_layers),
        cases: 1,
        checked: 0,
        skipped: 0,
        max_rel_error: 0.0,
        tolerance: TOLERANCE,
    };
    for probe in candidates {
        if report.checked == probes_wanted {
            break;
        }
        match numeric_gradient(&inputs, &build, probe, &pattern)? {
            Some(numeric) => {
                let e = relative_error(grads[probe.input][probe.index], numeric);
                report.max_rel_error = report.max_rel_error.max(e);
                report.checked += 1;
            }
            None => report.skipped += 1,
        }
    }
    Ok(report)
}

/// Default network for the model check: three levels, otherwise the
/// standard architecture.
pub fn suite_model_config() -> WaveUNetConfig {
    WaveUNetConfig::default().with_layers(3)
}

/// Runs every op check plus the L=3 network check on 20 weights.
pub fn run_suite(seed: u64, fault: Option<BackwardFault>) -> Result<GradcheckReport, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = Vec::new();
    for name in OP_NAMES {
        ops.push(check_op(name, &mut rng, fault)?);
    }
    ops.push(check_model(suite_model_config(), 33, 20, seed, fault)?);
    Ok(GradcheckReport { ops })
}
