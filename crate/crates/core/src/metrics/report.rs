use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use super::{composite, llr, ssnr, wss, Composite, FrameConfig, MetricsError};
use crate::datapipe::{read_wav, AudioClip, Manifest, Split};

pub const REPORT_HEADER: [&str; 6] = ["id", "pesq", "csig", "cbak", "covl", "ssnr"];

/// Measures for one enhanced clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FileMetrics {
    pub id: String,
    pub pesq: Option<f64>,
    pub llr: f64,
    pub wss: f64,
    pub ssnr: f64,
    pub composite: Option<Composite>,
}

/// Per-file measures plus their arithmetic means. PESQ and the composite
/// columns are averaged over the files that have a PESQ score.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub pesq: Option<f64>,
    pub csig: Option<f64>,
    pub cbak: Option<f64>,
    pub covl: Option<f64>,
    pub ssnr: f64,
    pub llr: f64,
    pub wss: f64,
    pub per_file: Vec<FileMetrics>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

impl MetricReport {
    pub fn from_files(per_file: Vec<FileMetrics>) -> Self {
        let comp = |f: fn(&Composite) -> f64| mean(per_file.iter().filter_map(|m| m.composite.as_ref().map(f)));
        MetricReport {
            pesq: mean(per_file.iter().filter_map(|m| m.pesq)),
            csig: comp(|c| c.csig),
            cbak: comp(|c| c.cbak),
            covl: comp(|c| c.covl),
            ssnr: mean(per_file.iter().map(|m| m.ssnr)).unwrap_or(f64::NAN),
            llr: mean(per_file.iter().map(|m| m.llr)).unwrap_or(f64::NAN),
            wss: mean(per_file.iter().map(|m| m.wss)).unwrap_or(f64::NAN),
            per_file,
        }
    }

    /// Tab-separated table: header, one row per file, then `MEAN`. Values
    /// have four decimals; missing or undefined values print as `NA`.
    pub fn to_tsv(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            match v {
                Some(v) if v.is_finite() => format!("{v:.4}"),
                _ => "NA".to_string(),
            }
        }
        let mut out = REPORT_HEADER.join("\t");
        out.push('\n');
        let mut row = |id: &str, pesq, c: Option<Composite>, ssnr| {
            let _ = writeln!(
                out,
                "{id}\t{}\t{}\t{}\t{}\t{}",
                cell(pesq),
                cell(c.map(|c| c.csig)),
                cell(c.map(|c| c.cbak)),
                cell(c.map(|c| c.covl)),
                cell(Some(ssnr))
            );
        };
        for f in &self.per_file {
            row(&f.id, f.pesq, f.composite, f.ssnr);
        }
        let means = match (self.csig, self.cbak, self.covl) {
            (Some(csig), Some(cbak), Some(covl)) => Some(Composite { csig, cbak, covl }),
            _ => None,
        };
        row("MEAN", self.pesq, means, self.ssnr);
        out
    }
}

/// SSNR, LLR, WSS and, given a PESQ score, the composites for one clip.
pub fn evaluate_clip(
    clean: &AudioClip,
    enhanced: &AudioClip,
    pesq: Option<f64>,
    cfg: &FrameConfig,
) -> Result<FileMetrics, MetricsError> {
    let s = ssnr(clean, enhanced, cfg)?;
    let l = llr(clean, enhanced, cfg)?;
    let w = wss(clean, enhanced, cfg)?;
    Ok(FileMetrics {
        id: enhanced.id.clone(),
        pesq,
        llr: l,
        wss: w,
        ssnr: s,
        composite: pesq.map(|p| composite(p, l, w, s)),
    })
}

/// Report over the test split plus the clips that could not be scored.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEvaluation {
    pub report: MetricReport,
    /// `(clip id, reason)` for every test entry left out of the report.
    pub failures: Vec<(String, String)>,
}

impl CorpusEvaluation {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Scores `enhanced_dir/<id>.wav` against the clean reference of every
/// test entry of `manifest` (paths relative to `base`). Unreadable,
/// missing or mismatched clips are listed in `failures` and skipped.
pub fn evaluate_corpus(
    manifest: &Manifest,
    base: &Path,
    enhanced_dir: &Path,
    pesq_scores: Option<&HashMap<String, f64>>,
    cfg: &FrameConfig,
) -> Result<CorpusEvaluation, MetricsError> {
    cfg.validate()?;
    if manifest.count(Split::Test) == 0 {
        return Err(MetricsError::Empty("test split".into()));
    }
    let mut per_file = Vec::new();
    let mut failures = Vec::new();
    for entry in manifest.split(Split::Test) {
        let id = entry.id();
        let scored = (|| -> Result<FileMetrics, MetricsError> {
            let clean = read_wav(base.join(&entry.clean))?;
            let mut enhanced = read_wav(enhanced_dir.join(format!("{id}.wav")))?;
            enhanced.id = id.clone();
            let pesq = match pesq_scores {
                Some(table) => {
                    let p = table.get(&id).copied();
                    if p.is_none() {
                        warn!("no PESQ score for `{id}`; composite measures omitted");
                    }
                    p
                }
                None => None,
            };
            evaluate_clip(&clean, &enhanced, pesq, cfg)
        })();
        match scored {
            Ok(m) => per_file.push(m),
            Err(e) => {
                warn!("skipping `{id}`: {e}");
                failures.push((id, e.to_string()));
            }
        }
    }
    Ok(CorpusEvaluation {
        report: MetricReport::from_files(per_file),
        failures,
    })
}

/// Parses `id<TAB>score` lines. `#` comments and blank lines are ignored,
/// as is a first line whose score column is not a number (a header).
pub fn parse_pesq_table(text: &str) -> Result<HashMap<String, f64>, MetricsError> {
    let mut table = HashMap::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |detail: String| MetricsError::PesqTable { line: i + 1, detail };
        let mut fields = trimmed.split('\t');
        let (Some(id), Some(score), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad("expected two tab-separated fields".into()));
        };
        let header = std::mem::replace(&mut first, false);
        let score: f64 = match score.trim().parse() {
            Ok(v) => v,
            Err(_) if header => continue,
            Err(_) => return Err(bad(format!("bad score `{score}`"))),
        };
        if !(-0.5..=4.5).contains(&score) {
            return Err(bad(format!("score {score} outside [-0.5, 4.5]")));
        }
        if table.insert(id.trim().to_string(), score).is_some() {
            return Err(bad(format!("duplicate id `{}`", id.trim())));
        }
    }
    Ok(table)
}

pub fn read_pesq_table(path: &Path) -> Result<HashMap<String, f64>, MetricsError> {
    let text = std::fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pesq_table(&text)
}
