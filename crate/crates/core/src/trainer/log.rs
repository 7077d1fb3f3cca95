use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;

use super::{Phase, TrainError};

pub const LOG_HEADER: &str = "epoch\tphase\ttrain_loss\tvalidation_loss\tepochs_since_improvement";

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    /// Mean training loss of the epoch; absent for the starting validation.
    pub train_loss: Option<f64>,
    pub validation_loss: f64,
    pub epochs_since_improvement: usize,
}

impl EpochRecord {
    /// Tab-separated; floats use the shortest representation that parses
    /// back to the same value.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.epoch,
            self.phase,
            self.train_loss.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            self.validation_loss,
            self.epochs_since_improvement
        )
    }

    pub fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return None;
        }
        Some(EpochRecord {
            epoch: f[0].parse().ok()?,
            phase: f[1].parse().ok()?,
            train_loss: match f[2] {
                "NA" => None,
                v => Some(v.parse().ok()?),
            },
            validation_loss: f[3].parse().ok()?,
            epochs_since_improvement: f[4].parse().ok()?,
        })
    }
}

/// Training log: a header, `# phase=… lr=… batch=… start_validation_loss=…`
/// lines opening each phase, and one [`EpochRecord`] per epoch. Lines are
/// kept in memory and, given a path, flushed to disk as they are written.
#[derive(Debug)]
pub struct TrainLog {
    path: Option<PathBuf>,
    file: Option<File>,
    lines: Vec<String>,
}

impl TrainLog {
    pub fn in_memory() -> Self {
        TrainLog {
            path: None,
            file: None,
            lines: vec![LOG_HEADER.to_string()],
        }
    }

    /// Opens (or truncates, unless `append`) the log at `path`. The header
    /// is written when the file starts empty.
    pub fn create(path: Option<PathBuf>, append: bool) -> Result<Self, TrainError> {
        let Some(path) = path else {
            return Ok(TrainLog::in_memory());
        };
        let io = |source| TrainError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(&path)
            .map_err(io)?;
        let empty = file.metadata().map_err(io)?.len() == 0;
        let mut log = TrainLog {
            path: Some(path.clone()),
            file: Some(file),
            lines: Vec::new(),
        };
        if empty {
            log.write_line(LOG_HEADER.to_string())?;
        }
        Ok(log)
    }

    fn write_line(&mut self, line: String) -> Result<(), TrainError> {
        if let (Some(file), Some(path)) = (&mut self.file, &self.path) {
            writeln!(file, "{line}")
                .and_then(|_| file.flush())
                .map_err(|source| TrainError::Io {
                    path: path.clone(),
                    source,
                })?;
        }
        self.lines.push(line);
        Ok(())
    }

    pub fn phase_header(
        &mut self,
        phase: Phase,
        lr: f64,
        batch: usize,
        start_validation_loss: f64,
    ) -> Result<(), TrainError> {
        self.write_line(format!(
            "# phase={phase} lr={lr} batch={batch} start_validation_loss={start_validation_loss}"
        ))
    }

    pub fn record(&mut self, r: &EpochRecord) -> Result<(), TrainError> {
        self.write_line(r.to_line())
    }

    /// Lines written through this handle.
    pub fn lines(&self) -> &[String] {
        &self.lines
    }
}
