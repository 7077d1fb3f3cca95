use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{read_wav, DataError, MixtureExample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// One mixture: paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub split: Split,
    pub clean: PathBuf,
    pub noise: PathBuf,
    pub snr_db: f64,
    pub noisy: PathBuf,
}

impl ManifestEntry {
    /// Clip id: the stem of the noisy file.
    pub fn id(&self) -> String {
        stem(&self.noisy)
    }

    pub fn clean_id(&self) -> String {
        stem(&self.clean)
    }

    /// Noise condition: the directory holding the noise file, or its stem
    /// when it sits at the top level.
    pub fn noise_type(&self) -> String {
        self.noise
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| stem(&self.noise))
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Line-oriented, tab-separated list of mixtures:
/// `split  clean_path  noise_path  snr_db  noisy_path`. Lines starting with
/// `#` are comments; `# seed=N` records the generating seed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub seed: Option<u64>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// Distinct SNRs of a split, as exact bit patterns sorted numerically.
    pub fn snrs(&self, split: Split) -> Vec<f64> {
        let mut v: Vec<f64> = self.split(split).map(|e| e.snr_db).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn noise_types(&self, split: Split) -> BTreeSet<String> {
        self.split(split).map(ManifestEntry::noise_type).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# split\tclean_path\tnoise_path\tsnr_db\tnoisy_path\n");
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed={seed}\n"));
        }
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.split,
                e.clean.display(),
                e.noise.display(),
                e.snr_db,
                e.noisy.display()
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut manifest = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(seed) = comment.trim().strip_prefix("seed=") {
                    manifest.seed = Some(seed.trim().parse().map_err(|_| DataError::Manifest {
                        line: line_no,
                        detail: format!("bad seed `{seed}`"),
                    })?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(DataError::Manifest {
                    line: line_no,
                    detail: format!("expected 5 tab-separated fields, found {}", fields.len()),
                });
            }
            let bad = |detail: String| DataError::Manifest { line: line_no, detail };
            let split = fields[0].parse().map_err(bad)?;
            let snr_db: f64 = fields[3].parse().map_err(|_| bad(format!("bad SNR `{}`", fields[3])))?;
            if !snr_db.is_finite() {
                return Err(bad(format!("non-finite SNR `{}`", fields[3])));
            }
            manifest.entries.push(ManifestEntry {
                split,
                clean: fields[1].into(),
                noise: fields[2].into(),
                snr_db,
                noisy: fields[4].into(),
            });
        }
        Ok(manifest)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Manifest::parse(&text)
    }

    /// Writes through a temporary file so a failed run leaves no partial
    /// manifest behind.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let tmp = path.with_extension("tsv.partial");
        std::fs::write(&tmp, self.to_tsv()).map_err(|e| DataError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| DataError::io(path, e))
    }

    /// No clean clip may appear in more than one split.
    pub fn check_disjoint(&self) -> Result<(), DataError> {
        let mut seen: HashMap<&Path, Split> = HashMap::new();
        for e in &self.entries {
            if let Some(prev) = seen.insert(&e.clean, e.split) {
                if prev != e.split {
                    return Err(DataError::Splits(format!(
                        "{} appears in {prev} and {}",
                        e.clean.display(),
                        e.split
                    )));
                }
            }
        }
        Ok(())
    }

    /// Test SNRs and noise types must both differ from the training ones.
    pub fn check_mismatched_conditions(&self) -> Result<(), DataError> {
        let train = self.snrs(Split::Train);
        if let Some(s) = self.snrs(Split::Test).iter().find(|s| train.contains(s)) {
            return Err(DataError::Splits(format!("SNR {s} dB is in train and test")));
        }
        let train_noise = self.noise_types(Split::Train);
        if let Some(n) = self.noise_types(Split::Test).intersection(&train_noise).next() {
            return Err(DataError::Splits(format!("noise `{n}` is in train and test")));
        }
        Ok(())
    }

    pub fn check_validation_count(&self, expected: usize) -> Result<(), DataError> {
        let found = self.count(Split::Validation);
        if found != expected {
            return Err(DataError::Splits(format!(
                "{found} validation tracks, expected {expected}"
            )));
        }
        Ok(())
    }

    /// Loads the clean and noisy files of a split. The noise target is
    /// taken as `noisy − clean`.
    pub fn load_split(&self, split: Split, base: &Path) -> Result<Vec<MixtureExample>, DataError> {
        self.split(split)
            .map(|e| {
                let clean = read_wav(base.join(&e.clean))?;
                let noisy = read_wav(base.join(&e.noisy))?;
                MixtureExample::from_pair(clean, noisy, e.snr_db)
            })
            .collect()
    }
}
