use super::{ModelError, ModelParams, WaveUNetConfig};
use crate::datapipe::{AudioClip, MODEL_SAMPLE_RATE};
use crate::ndgrad::{Graph, Tensor, Var};

/// Per-source waveform estimates, shaped `[K × C × length]`, every value
/// strictly inside (−1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEstimate {
    pub sources: Tensor,
}

impl SourceEstimate {
    pub fn num_sources(&self) -> usize {
        self.sources.shape()[0]
    }

    pub fn length(&self) -> usize {
        self.sources.shape()[2]
    }

    /// Samples of source `k`, channel `c`.
    pub fn channel(&self, k: usize, c: usize) -> &[f64] {
        let (ch, n) = (self.sources.shape()[1], self.sources.shape()[2]);
        let start = (k * ch + c) * n;
        &self.sources.data()[start..start + n]
    }
}

/// How many samples to keep after running the network on a padded input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trim {
    pub original: usize,
    pub padded: usize,
}

impl Trim {
    pub fn is_identity(&self) -> bool {
        self.original == self.padded
    }
}

/// Zero-pads the tail of a `[C × n]` mixture to the shortest length the
/// network accepts.
pub fn pad_for_model(mixture: &Tensor, config: &WaveUNetConfig) -> Result<(Tensor, Trim), ModelError> {
    let (c, n) = match mixture.shape() {
        &[c, n] if n >= 1 => (c, n),
        other => return Err(ModelError::InputShape(other.to_vec())),
    };
    let target = config.valid_length(n);
    let mut data = vec![0.0; c * target];
    for ch in 0..c {
        data[ch * target..ch * target + n].copy_from_slice(mixture.row(ch));
    }
    let padded = Tensor::new(vec![c, target], data)?;
    Ok((
        padded,
        Trim {
            original: n,
            padded: target,
        },
    ))
}

/// Registers every parameter on `graph` and returns the handles in layout
/// order.
pub fn register_params(graph: &mut Graph, params: &ModelParams, trainable: bool) -> Vec<Var> {
    params
        .tensors()
        .iter()
        .map(|t| {
            let t = t.clone().with_requires_grad(trainable);
            graph.leaf(t)
        })
        .collect()
}

/// Records the network on `graph` for a `[C × n]` mixture with a valid `n`.
/// Returns the `[K·C × n]` tanh output.
pub fn forward_on_graph(
    graph: &mut Graph,
    config: &WaveUNetConfig,
    params: &[Var],
    mixture: Var,
) -> Result<Var, ModelError> {
    let (c, n) = match graph.value(mixture).shape() {
        &[c, n] => (c, n),
        other => return Err(ModelError::InputShape(other.to_vec())),
    };
    if c != config.num_channels {
        return Err(ModelError::InputShape(vec![c, n]));
    }
    if !config.is_valid_length(n) {
        return Err(ModelError::IncompatibleLength {
            len: n,
            nearest: config.valid_length(n),
        });
    }
    if params.len() != config.layout().len() {
        return Err(ModelError::Layout(format!(
            "{} parameter handles for a layout of {}",
            params.len(),
            config.layout().len()
        )));
    }
    let alpha = config.leaky_alpha;
    let mut p = params.iter().copied();
    let mut next = || p.next().expect("layout length checked");

    let mut current = mixture;
    let mut skips = Vec::with_capacity(config.num_layers);
    for _ in 0..config.num_layers {
        let (k, b) = (next(), next());
        let h = graph.conv1d(current, k, b)?;
        let h = graph.leaky_relu(h, alpha)?;
        skips.push(h);
        current = graph.decimate2(h)?;
    }

    let (k, b) = (next(), next());
    current = graph.conv1d(current, k, b)?;
    current = graph.leaky_relu(current, alpha)?;

    for skip in skips.into_iter().rev() {
        let up = graph.upsample2(current)?;
        let joined = graph.concat_channels(up, skip)?;
        let (k, b) = (next(), next());
        let h = graph.conv1d(joined, k, b)?;
        current = graph.leaky_relu(h, alpha)?;
    }

    let joined = graph.concat_channels(current, mixture)?;
    let (k, b) = (next(), next());
    let out = graph.conv1d(joined, k, b)?;
    Ok(graph.tanh(out)?)
}

fn to_estimate(config: &WaveUNetConfig, out: &Tensor) -> Result<SourceEstimate, ModelError> {
    let n = out.shape()[1];
    let sources = out.clone().reshape(vec![config.num_sources, config.num_channels, n])?;
    Ok(SourceEstimate { sources })
}

/// Runs the network on a `[C × n]` mixture whose length is already valid.
pub fn forward(params: &ModelParams, mixture: &Tensor) -> Result<SourceEstimate, ModelError> {
    let config = params.config();
    let mut graph = Graph::new();
    let vars = register_params(&mut graph, params, false);
    let x = graph.constant(mixture.clone());
    let out = forward_on_graph(&mut graph, config, &vars, x)?;
    to_estimate(config, graph.value(out))
}

/// Pads, runs and trims: source estimates for a mixture of any length.
pub fn separate(params: &ModelParams, mixture: &Tensor) -> Result<SourceEstimate, ModelError> {
    let config = params.config();
    let (padded, trim) = pad_for_model(mixture, config)?;
    let mut graph = Graph::new();
    let vars = register_params(&mut graph, params, false);
    let x = graph.constant(padded);
    let out = forward_on_graph(&mut graph, config, &vars, x)?;
    let out = graph.trim_time(out, trim.original)?;
    to_estimate(config, graph.value(out))
}

/// Extracts the speech source (index 0) from a 16 kHz mono clip.
pub fn enhance(params: &ModelParams, clip: &AudioClip) -> Result<AudioClip, ModelError> {
    if clip.sample_rate != MODEL_SAMPLE_RATE {
        return Err(ModelError::SampleRate(clip.sample_rate));
    }
    if params.config().num_channels != 1 {
        return Err(ModelError::InputShape(vec![params.config().num_channels]));
    }
    if clip.samples.is_empty() {
        return Ok(clip.clone());
    }
    let mixture = Tensor::new(vec![1, clip.samples.len()], clip.samples.clone())?;
    let estimate = separate(params, &mixture)?;
    Ok(AudioClip {
        samples: estimate.channel(0, 0).to_vec(),
        sample_rate: clip.sample_rate,
        id: clip.id.clone(),
    })
}
