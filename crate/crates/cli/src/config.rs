use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use waveunet::datapipe::SynthSpec;
use waveunet::metrics::FrameConfig;
use waveunet::trainer::TrainConfig;
use waveunet::WaveUNetConfig;

use crate::UserError;

/// File locations. Relative paths are taken relative to the working
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Where `synth-data` writes the corpus.
    pub data_dir: PathBuf,
    /// Manifest used by `train`, `finetune`, `enhance` and `evaluate`;
    /// `<data_dir>/manifest.tsv` when unset.
    pub manifest: Option<PathBuf>,
    /// Checkpoints and training log.
    pub run_dir: PathBuf,
    /// Checkpoint for `finetune` and `enhance`; `<run_dir>/best.ckpt`
    /// when unset.
    pub checkpoint: Option<PathBuf>,
    pub enhanced_dir: PathBuf,
    pub report: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            data_dir: "data".into(),
            manifest: None,
            run_dir: "run".into(),
            checkpoint: None,
            enhanced_dir: "enhanced".into(),
            report: "report.tsv".into(),
        }
    }
}

impl PathsConfig {
    pub fn manifest(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.data_dir.join("manifest.tsv"))
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.run_dir.join(waveunet::trainer::BEST_CHECKPOINT))
    }
}

/// Everything a run needs. Every key is optional; unknown keys are errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds corpus synthesis and weight initialization, and overrides
    /// `train.seed` when given on the command line.
    pub seed: u64,
    pub model: WaveUNetConfig,
    pub train: TrainConfig,
    pub metrics: FrameConfig,
    pub data: SynthSpec,
    pub paths: PathsConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub layers: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| UserError(format!("invalid config: {e}")).into())
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| UserError(format!("cannot read config {}: {e}", p.display())))?;
                RunConfig::parse(&text).with_context(|| format!("in {}", p.display()))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.train.seed = seed;
        }
        if let Some(layers) = o.layers {
            self.model.num_layers = layers;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let user = |e: String| anyhow::Error::new(UserError(e));
        self.model.validate().map_err(|e| user(format!("model: {e}")))?;
        self.train.validate().map_err(|e| user(format!("train: {e}")))?;
        self.metrics.validate().map_err(|e| user(format!("metrics: {e}")))?;
        self.data.validate().map_err(|e| user(format!("data: {e}")))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unprintable config: {e}\n"))
    }
}
