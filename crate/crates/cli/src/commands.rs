use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use waveunet::datapipe::{read_wav, synth_corpus, write_wav, Split};
use waveunet::gradcheck::run_suite;
use waveunet::metrics::{evaluate_corpus, read_pesq_table};
use waveunet::model::enhance;
use waveunet::ndgrad::{BackwardFault, OpKind};
use waveunet::trainer::{finetune, fit, resume_dir, Checkpoint, FitOutcome, TrainData, LAST_CHECKPOINT};
use waveunet::{Manifest, ModelParams};

use crate::config::RunConfig;
use crate::UserError;

/// How a subcommand finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    Partial,
}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!(UserError(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

fn load_manifest(path: &Path) -> Result<(Manifest, PathBuf)> {
    require(path, "manifest")?;
    let manifest = Manifest::read(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((manifest, base))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    require(path, "checkpoint")?;
    Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))
}

fn write_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml()).with_context(|| format!("writing {}", path.display()))
}

fn summarize(phase: &str, out: &FitOutcome, dir: &Path) {
    let epochs = out.history.last().map_or(0, |r| r.epoch);
    println!(
        "{phase}: {epochs} epochs, best validation loss {:.6e}, stopped by {:?}; checkpoints in {}",
        out.best_validation_loss,
        out.stop,
        dir.display()
    );
}

pub fn synth_data(cfg: &RunConfig, out: Option<PathBuf>) -> Result<Status> {
    let dir = out.unwrap_or_else(|| cfg.paths.data_dir.clone());
    let corpus =
        synth_corpus(&cfg.data, cfg.seed, &dir).with_context(|| format!("synthesizing into {}", dir.display()))?;
    let m = &corpus.manifest;
    println!(
        "wrote {} ({} train, {} validation, {} test)",
        corpus.manifest_path.display(),
        m.count(Split::Train),
        m.count(Split::Validation),
        m.count(Split::Test)
    );
    Ok(Status::Done)
}

pub fn train(cfg: &RunConfig, manifest: Option<PathBuf>, out: Option<PathBuf>, resume: bool) -> Result<Status> {
    let (manifest, base) = load_manifest(&manifest.unwrap_or_else(|| cfg.paths.manifest()))?;
    let dir = out.unwrap_or_else(|| cfg.paths.run_dir.clone());
    let data = TrainData::from_manifest(&manifest, &base)?;
    let outcome = if resume {
        require(&dir.join(LAST_CHECKPOINT), "checkpoint")?;
        resume_dir(&dir, &cfg.train, &data)?
    } else {
        write_config(cfg, &dir)?;
        let params = ModelParams::init(cfg.model, cfg.seed)?;
        info!("model has {} parameters", params.numel());
        fit(params, &cfg.train, &data, Some(&dir))?
    };
    summarize("train", &outcome, &dir);
    Ok(Status::Done)
}

pub fn finetune_cmd(
    cfg: &RunConfig,
    manifest: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<Status> {
    let (manifest, base) = load_manifest(&manifest.unwrap_or_else(|| cfg.paths.manifest()))?;
    let start = load_checkpoint(&checkpoint.unwrap_or_else(|| cfg.paths.checkpoint()))?;
    let dir = out.unwrap_or_else(|| cfg.paths.run_dir.clone());
    let data = TrainData::from_manifest(&manifest, &base)?;
    let outcome = finetune(&start, &cfg.train, &data, Some(&dir))?;
    summarize("finetune", &outcome, &dir);
    Ok(Status::Done)
}

fn wav_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        require(p, "input")?;
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

pub fn enhance_cmd(
    cfg: &RunConfig,
    inputs: &[PathBuf],
    manifest: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<Status> {
    let ckpt = load_checkpoint(&checkpoint.unwrap_or_else(|| cfg.paths.checkpoint()))?;
    let files = if inputs.is_empty() {
        let (manifest, base) = load_manifest(&manifest.unwrap_or_else(|| cfg.paths.manifest()))?;
        manifest.split(Split::Test).map(|e| base.join(&e.noisy)).collect()
    } else {
        wav_inputs(inputs)?
    };
    if files.is_empty() {
        bail!(UserError("no input WAV files".into()));
    }
    let dir = out.unwrap_or_else(|| cfg.paths.enhanced_dir.clone());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut failures = Vec::new();
    for file in &files {
        let result = (|| -> Result<PathBuf> {
            let clip = read_wav(file)?;
            let enhanced = enhance(&ckpt.params, &clip)?;
            if clip.samples.iter().all(|v| *v == 0.0) {
                let peak = enhanced.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                info!("{}: silent input, output peak {peak:.3e}", clip.id);
            }
            let name = file.file_name().context("input has no file name")?;
            let target = dir.join(name);
            write_wav(&enhanced, &target)?;
            Ok(target)
        })();
        match result {
            Ok(target) => info!("{} -> {}", file.display(), target.display()),
            Err(e) => {
                warn!("{}: {e:#}", file.display());
                failures.push((file.clone(), e));
            }
        }
    }
    println!(
        "enhanced {} of {} files into {}",
        files.len() - failures.len(),
        files.len(),
        dir.display()
    );
    for (file, e) in &failures {
        eprintln!("failed: {}: {e:#}", file.display());
    }
    Ok(if failures.is_empty() {
        Status::Done
    } else {
        Status::Partial
    })
}

pub fn evaluate_cmd(
    cfg: &RunConfig,
    manifest: Option<PathBuf>,
    enhanced: Option<PathBuf>,
    pesq_scores: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<Status> {
    let (manifest, base) = load_manifest(&manifest.unwrap_or_else(|| cfg.paths.manifest()))?;
    let enhanced = enhanced.unwrap_or_else(|| cfg.paths.enhanced_dir.clone());
    require(&enhanced, "enhanced directory")?;
    let pesq = match pesq_scores {
        Some(p) => {
            require(&p, "PESQ table")?;
            Some(read_pesq_table(&p).map_err(|e| UserError(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let eval = evaluate_corpus(&manifest, &base, &enhanced, pesq.as_ref(), &cfg.metrics)?;
    let report = out.unwrap_or_else(|| cfg.paths.report.clone());
    if let Some(parent) = report.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let tsv = eval.report.to_tsv();
    std::fs::write(&report, &tsv).with_context(|| format!("writing {}", report.display()))?;
    print!("{tsv}");
    info!(
        "mean llr {:.4}, mean wss {:.4}; report written to {}",
        eval.report.llr,
        eval.report.wss,
        report.display()
    );
    for (id, why) in &eval.failures {
        eprintln!("not scored: {id}: {why}");
    }
    Ok(if eval.is_partial() {
        Status::Partial
    } else {
        Status::Done
    })
}

const FAULT_OPS: [OpKind; 10] = [
    OpKind::Conv1d,
    OpKind::LeakyRelu,
    OpKind::Tanh,
    OpKind::Decimate2,
    OpKind::Upsample2,
    OpKind::Concat,
    OpKind::Trim,
    OpKind::Mse,
    OpKind::Add,
    OpKind::Scale,
];

/// Parses `OP` or `OP:FACTOR` (factor defaults to 1.5).
pub fn parse_fault(spec: &str) -> Result<BackwardFault> {
    let (name, factor) = match spec.split_once(':') {
        Some((n, f)) => (n, f.parse().map_err(|_| UserError(format!("bad fault factor `{f}`")))?),
        None => (spec, 1.5),
    };
    let op = FAULT_OPS
        .into_iter()
        .find(|op| op.name() == name)
        .ok_or_else(|| UserError(format!("unknown op `{name}`")))?;
    Ok(BackwardFault { op, factor })
}

pub fn gradcheck(cfg: &RunConfig, fault: Option<&str>) -> Result<Status> {
    let fault = fault.map(parse_fault).transpose()?;
    if let Some(f) = &fault {
        warn!("backward of {} scaled by {}", f.op.name(), f.factor);
    }
    let report = run_suite(cfg.seed, fault)?;
    println!("{report}");
    if report.passed() {
        Ok(Status::Done)
    } else {
        let names: Vec<&str> = report.failures().map(|o| o.name.as_str()).collect();
        bail!("gradcheck failed: {}", names.join(", "))
    }
}
