//! Two-phase training: base training with early stopping on a fixed
//! validation set, then fine-tuning from the best base model with a fresh
//! optimizer, a smaller learning rate and a larger batch.
//!
//! Each example is trained against two targets, the clean speech and the
//! residual `noisy − clean`. Validation runs the network on full tracks.

mod checkpoint;
mod config;
mod log;

pub use checkpoint::{Checkpoint, Phase, TrainState};
pub use config::TrainConfig;
pub use log::{EpochRecord, TrainLog, LOG_HEADER};

use std::path::{Path, PathBuf};

use ::log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::datapipe::{sample_excerpt, DataError, Manifest, MixtureExample, Split};
use crate::model::{forward_on_graph, register_params, CheckpointError, ModelError, ModelParams, WaveUNetConfig};
use crate::ndgrad::{AdamState, GradError, Graph, Tensor, Var};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("non-finite loss {loss} at epoch {epoch}, step {step}; batch: {}", ids.join(", "))]
    NonFinite {
        loss: f64,
        epoch: usize,
        step: usize,
        ids: Vec<String>,
    },
    #[error("batch item `{id}` has {len} samples, expected {expected}")]
    BatchLength { id: String, len: usize, expected: usize },
    #[error("checkpoint has no training state to resume from")]
    NoState,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// One training item: the network input and its two target signals.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub id: String,
    pub noisy: Vec<f64>,
    pub clean: Vec<f64>,
}

impl BatchItem {
    pub fn from_example(example: &MixtureExample) -> Self {
        BatchItem {
            id: example.id().to_string(),
            noisy: example.noisy.samples.clone(),
            clean: example.clean.samples.clone(),
        }
    }

    /// `[clean; noisy − clean]` as a `[2 × n]` tensor.
    fn targets(&self) -> Result<Tensor, GradError> {
        let mut data = self.clean.clone();
        data.extend(self.noisy.iter().zip(&self.clean).map(|(y, s)| y - s));
        Tensor::new(vec![2, self.clean.len()], data)
    }
}

/// Training and validation examples of a run.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub train: Vec<MixtureExample>,
    pub validation: Vec<MixtureExample>,
}

impl TrainData {
    pub fn new(train: Vec<MixtureExample>, validation: Vec<MixtureExample>) -> Result<Self, TrainError> {
        if train.is_empty() {
            return Err(TrainError::EmptySplit("train"));
        }
        if validation.is_empty() {
            return Err(TrainError::EmptySplit("validation"));
        }
        Ok(TrainData { train, validation })
    }

    /// Loads the train and validation splits of a manifest whose paths are
    /// relative to `base`.
    pub fn from_manifest(manifest: &Manifest, base: &Path) -> Result<Self, TrainError> {
        manifest.check_disjoint()?;
        TrainData::new(
            manifest.load_split(Split::Train, base)?,
            manifest.load_split(Split::Validation, base)?,
        )
    }
}

fn check_mono(config: &WaveUNetConfig) -> Result<(), TrainError> {
    if config.num_channels != 1 || config.num_sources != 2 {
        return Err(TrainError::Config(format!(
            "training supports one channel and two sources, model has C={} K={}",
            config.num_channels, config.num_sources
        )));
    }
    Ok(())
}

/// Records pad → network → trim → MSE for one item and returns the loss.
fn item_loss(graph: &mut Graph, config: &WaveUNetConfig, vars: &[Var], item: &BatchItem) -> Result<Var, TrainError> {
    let n = item.noisy.len();
    let padded_len = config.valid_length(n);
    let mut padded = item.noisy.clone();
    padded.resize(padded_len, 0.0);
    let x = graph.constant(Tensor::new(vec![1, padded_len], padded)?);
    let out = forward_on_graph(graph, config, vars, x)?;
    let out = graph.trim_time(out, n)?;
    let target = graph.constant(item.targets()?);
    Ok(graph.mse_loss(out, target)?)
}

/// Mean over items of the per-item MSE, without gradients.
pub fn batch_loss(params: &ModelParams, batch: &[BatchItem]) -> Result<f64, TrainError> {
    let mut graph = Graph::new();
    let vars = register_params(&mut graph, params, false);
    let losses = batch
        .iter()
        .map(|item| item_loss(&mut graph, params.config(), &vars, item))
        .collect::<Result<Vec<_>, _>>()?;
    let loss = graph.mean(&losses)?;
    Ok(graph.value(loss).item().expect("scalar loss"))
}

/// One forward, backward and ADAM update on `batch`. Returns the loss
/// before the update; parameter gradients are cleared afterwards.
pub fn train_step(params: &mut ModelParams, adam: &mut AdamState, batch: &[BatchItem]) -> Result<f64, TrainError> {
    check_mono(params.config())?;
    let expected = batch.first().map(|b| b.noisy.len()).ok_or(GradError::Empty("batch"))?;
    for item in batch {
        if item.noisy.len() != expected || item.clean.len() != expected {
            return Err(TrainError::BatchLength {
                id: item.id.clone(),
                len: item.noisy.len().min(item.clean.len()),
                expected,
            });
        }
    }
    let config = *params.config();
    let mut graph = Graph::new();
    let vars = register_params(&mut graph, params, true);
    let losses = batch
        .iter()
        .map(|item| item_loss(&mut graph, &config, &vars, item))
        .collect::<Result<Vec<_>, _>>()?;
    let loss = graph.mean(&losses)?;
    let value = graph.value(loss).item().expect("scalar loss");
    if !value.is_finite() {
        return Err(TrainError::NonFinite {
            loss: value,
            epoch: 0,
            step: adam.step_count as usize,
            ids: batch.iter().map(|b| b.id.clone()).collect(),
        });
    }
    graph.backward(loss)?;
    for (tensor, var) in params.tensors_mut().iter_mut().zip(&vars) {
        tensor.set_grad(Some(
            graph
                .grad(*var)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; tensor.len()]),
        ));
    }
    adam.step(params.tensors_mut().iter_mut())?;
    params.zero_grad();
    Ok(value)
}

/// Mean per-track MSE over full validation tracks. Deterministic in
/// `params`.
pub fn validate(params: &ModelParams, validation: &[MixtureExample]) -> Result<f64, TrainError> {
    if validation.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    check_mono(params.config())?;
    let mut total = 0.0;
    for example in validation {
        total += batch_loss(params, &[BatchItem::from_example(example)])?;
    }
    Ok(total / validation.len() as f64)
}

/// Draws a batch of aligned random excerpts from random training examples.
pub fn sample_batch<R: Rng + ?Sized>(
    train: &[MixtureExample],
    batch_size: usize,
    excerpt_length: usize,
    rng: &mut R,
) -> Vec<BatchItem> {
    (0..batch_size)
        .map(|_| {
            let example = &train[rng.gen_range(0..train.len())];
            let e = sample_excerpt(example, excerpt_length, rng);
            BatchItem {
                id: format!("{}@{}", example.id(), e.offset),
                noisy: e.noisy,
                clean: e.clean,
            }
        })
        .collect()
}

/// Why a phase ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

/// Result of a training phase.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Weights of the epoch with the lowest validation loss.
    pub best: Checkpoint,
    /// Weights and state after the final epoch.
    pub last: Checkpoint,
    /// Epoch-0 validation loss; `None` for a resumed phase.
    pub start_validation_loss: Option<f64>,
    pub best_validation_loss: f64,
    pub history: Vec<EpochRecord>,
    pub stop: StopReason,
}

pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LAST_CHECKPOINT: &str = "last.ckpt";
pub const LOG_FILE: &str = "train.log";

struct PhaseSettings {
    lr: f64,
    batch_size: usize,
}

fn settings(config: &TrainConfig, phase: Phase) -> PhaseSettings {
    match phase {
        Phase::Base => PhaseSettings {
            lr: config.lr,
            batch_size: config.batch_size,
        },
        Phase::Finetune => PhaseSettings {
            lr: config.resolved_finetune_lr(),
            batch_size: config.resolved_finetune_batch(),
        },
    }
}

fn phase_rng(config: &TrainConfig, phase: Phase) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(match phase {
        Phase::Base => 0,
        Phase::Finetune => 1,
    });
    rng
}

fn create_out_dir(out_dir: Option<&Path>) -> Result<(), TrainError> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| TrainError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

/// Starts a phase: validates `params` as the epoch-0 baseline and trains
/// until early stopping.
fn start_phase(
    params: ModelParams,
    config: &TrainConfig,
    data: &TrainData,
    phase: Phase,
    out_dir: Option<&Path>,
    log: &mut TrainLog,
) -> Result<FitOutcome, TrainError> {
    config.validate()?;
    check_mono(params.config())?;
    create_out_dir(out_dir)?;
    let s = settings(config, phase);
    let start = validate(&params, &data.validation)?;
    log.phase_header(phase, s.lr, s.batch_size, start)?;
    let record = EpochRecord {
        epoch: 0,
        phase,
        train_loss: None,
        validation_loss: start,
        epochs_since_improvement: 0,
    };
    log.record(&record)?;
    info!("{phase} phase: starting validation loss {start}");
    let state = TrainState {
        epoch: 0,
        phase,
        best_validation_loss: start,
        epochs_since_improvement: 0,
        rng: phase_rng(config, phase),
        adam: AdamState::new(params.tensors(), s.lr, config.beta1, config.beta2, config.epsilon),
    };
    let best = Checkpoint {
        params: params.clone(),
        state: Some(state.clone()),
    };
    if let Some(dir) = out_dir {
        best.save(dir.join(BEST_CHECKPOINT))?;
        best.save(dir.join(LAST_CHECKPOINT))?;
    }
    run_epochs(
        params,
        best,
        state,
        Some(start),
        vec![record],
        config,
        data,
        out_dir,
        log,
    )
}

#[allow(clippy::too_many_arguments)]
fn run_epochs(
    mut params: ModelParams,
    mut best: Checkpoint,
    mut state: TrainState,
    start_validation_loss: Option<f64>,
    mut history: Vec<EpochRecord>,
    config: &TrainConfig,
    data: &TrainData,
    out_dir: Option<&Path>,
    log: &mut TrainLog,
) -> Result<FitOutcome, TrainError> {
    let s = settings(config, state.phase);
    let stop = loop {
        if state.epochs_since_improvement >= config.patience_epochs {
            break StopReason::Patience;
        }
        if config.max_epochs.is_some_and(|m| state.epoch >= m) {
            break StopReason::MaxEpochs;
        }
        let mut train_total = 0.0;
        for step in 0..config.iterations_per_epoch {
            let batch = sample_batch(&data.train, s.batch_size, config.excerpt_length, &mut state.rng);
            train_total += train_step(&mut params, &mut state.adam, &batch).map_err(|e| match e {
                TrainError::NonFinite { loss, ids, .. } => TrainError::NonFinite {
                    loss,
                    epoch: state.epoch + 1,
                    step,
                    ids,
                },
                other => other,
            })?;
        }
        state.epoch += 1;
        let train_loss = train_total / config.iterations_per_epoch as f64;
        let v = validate(&params, &data.validation)?;
        let improved = v < state.best_validation_loss - config.improvement_epsilon;
        if improved {
            state.best_validation_loss = v;
            state.epochs_since_improvement = 0;
        } else {
            state.epochs_since_improvement += 1;
        }
        let record = EpochRecord {
            epoch: state.epoch,
            phase: state.phase,
            train_loss: Some(train_loss),
            validation_loss: v,
            epochs_since_improvement: state.epochs_since_improvement,
        };
        log.record(&record)?;
        info!(
            "{} epoch {}: train {train_loss:.6e}, validation {v:.6e}{}",
            state.phase,
            state.epoch,
            if improved { " (best)" } else { "" }
        );
        history.push(record);
        let last = Checkpoint {
            params: params.clone(),
            state: Some(state.clone()),
        };
        if improved {
            best = last.clone();
        }
        if let Some(dir) = out_dir {
            if improved {
                best.save(dir.join(BEST_CHECKPOINT))?;
            }
            last.save(dir.join(LAST_CHECKPOINT))?;
        }
    };
    let best_validation_loss = state.best_validation_loss;
    Ok(FitOutcome {
        best,
        last: Checkpoint {
            params,
            state: Some(state),
        },
        start_validation_loss,
        best_validation_loss,
        history,
        stop,
    })
}

/// Base training from `params`. With an output directory, `best.ckpt`,
/// `last.ckpt` and `train.log` are written there as training progresses.
pub fn fit(
    params: ModelParams,
    config: &TrainConfig,
    data: &TrainData,
    out_dir: Option<&Path>,
) -> Result<FitOutcome, TrainError> {
    let mut log = TrainLog::create(out_dir.map(|d| d.join(LOG_FILE)), false)?;
    start_phase(params, config, data, Phase::Base, out_dir, &mut log)
}

/// Fine-tunes the weights of `start` (normally the best base checkpoint)
/// with a fresh optimizer at the fine-tuning learning rate and batch size.
/// The log is appended to when it already exists.
pub fn finetune(
    start: &Checkpoint,
    config: &TrainConfig,
    data: &TrainData,
    out_dir: Option<&Path>,
) -> Result<FitOutcome, TrainError> {
    for o in config.finetune_overrides() {
        warn!("{o}");
    }
    let mut log = TrainLog::create(out_dir.map(|d| d.join(LOG_FILE)), true)?;
    start_phase(start.params.clone(), config, data, Phase::Finetune, out_dir, &mut log)
}

/// Continues an interrupted phase from its last checkpoint (with state)
/// and the best checkpoint so far.
pub fn resume(
    last: Checkpoint,
    best: Checkpoint,
    config: &TrainConfig,
    data: &TrainData,
    out_dir: Option<&Path>,
) -> Result<FitOutcome, TrainError> {
    config.validate()?;
    let state = last.state.ok_or(TrainError::NoState)?;
    if best.params.config() != last.params.config() {
        return Err(TrainError::Config(
            "best and last checkpoints have different models".into(),
        ));
    }
    create_out_dir(out_dir)?;
    let mut log = TrainLog::create(out_dir.map(|d| d.join(LOG_FILE)), true)?;
    info!("resuming {} phase after epoch {}", state.phase, state.epoch);
    run_epochs(
        last.params,
        best,
        state,
        None,
        Vec::new(),
        config,
        data,
        out_dir,
        &mut log,
    )
}

/// Loads `dir/last.ckpt` and `dir/best.ckpt` and resumes.
pub fn resume_dir(dir: &Path, config: &TrainConfig, data: &TrainData) -> Result<FitOutcome, TrainError> {
    let last = Checkpoint::load(dir.join(LAST_CHECKPOINT))?;
    let best = Checkpoint::load(dir.join(BEST_CHECKPOINT))?;
    resume(last, best, config, data, Some(dir))
}
