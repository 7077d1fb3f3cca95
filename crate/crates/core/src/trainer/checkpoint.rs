use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use crate::model::{read_f64, read_u32, read_u64, CheckpointError, ModelParams};
use crate::ndgrad::AdamState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Base,
    Finetune,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Base => "base",
            Phase::Finetune => "finetune",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Phase::Base),
            "finetune" => Ok(Phase::Finetune),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

/// Bookkeeping of a running training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    /// Completed epochs; 0 means only the starting validation has run.
    pub epoch: usize,
    pub phase: Phase,
    pub best_validation_loss: f64,
    pub epochs_since_improvement: usize,
    pub rng: ChaCha8Rng,
    pub adam: AdamState,
}

/// Model weights, optionally with the training state needed to resume.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub state: Option<TrainState>,
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_state<W: Write>(w: &mut W, s: &TrainState) -> Result<(), CheckpointError> {
    put_u64(w, s.epoch as u64)?;
    w.write_all(&[match s.phase {
        Phase::Base => 0,
        Phase::Finetune => 1,
    }])?;
    put_f64(w, s.best_validation_loss)?;
    put_u64(w, s.epochs_since_improvement as u64)?;
    w.write_all(&s.rng.get_seed())?;
    put_u64(w, s.rng.get_stream())?;
    w.write_all(&s.rng.get_word_pos().to_le_bytes())?;
    let a = &s.adam;
    put_u64(w, a.step_count)?;
    for v in [a.lr, a.beta1, a.beta2, a.epsilon] {
        put_f64(w, v)?;
    }
    w.write_all(&(a.m.len() as u32).to_le_bytes())?;
    for (m, v) in a.m.iter().zip(&a.v) {
        put_u64(w, m.len() as u64)?;
        let mut buf = Vec::with_capacity(16 * m.len());
        for x in m.iter().chain(v) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_state<R: Read>(r: &mut R, params: &ModelParams) -> Result<TrainState, CheckpointError> {
    let corrupt = |m: String| CheckpointError::Corrupt(m);
    let epoch = read_u64(r)? as usize;
    let mut phase = [0u8; 1];
    r.read_exact(&mut phase)?;
    let phase = match phase[0] {
        0 => Phase::Base,
        1 => Phase::Finetune,
        p => return Err(corrupt(format!("phase tag {p}"))),
    };
    let best_validation_loss = read_f64(r)?;
    let epochs_since_improvement = read_u64(r)? as usize;
    let mut seed = [0u8; 32];
    r.read_exact(&mut seed)?;
    let stream = read_u64(r)?;
    let mut pos = [0u8; 16];
    r.read_exact(&mut pos)?;
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from_le_bytes(pos));

    let step_count = read_u64(r)?;
    let (lr, beta1, beta2, epsilon) = (read_f64(r)?, read_f64(r)?, read_f64(r)?, read_f64(r)?);
    let count = read_u32(r)? as usize;
    if count != params.len() {
        return Err(corrupt(format!(
            "optimizer tracks {count} tensors, model has {}",
            params.len()
        )));
    }
    let mut m = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    for t in params.tensors() {
        let len = read_u64(r)? as usize;
        if len != t.len() {
            return Err(corrupt(format!(
                "optimizer moment of {len} values for a tensor of {}",
                t.len()
            )));
        }
        let mut raw = vec![0u8; 16 * len];
        r.read_exact(&mut raw)?;
        let vals: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        m.push(vals[..len].to_vec());
        v.push(vals[len..].to_vec());
    }
    Ok(TrainState {
        epoch,
        phase,
        best_validation_loss,
        epochs_since_improvement,
        rng,
        adam: AdamState {
            step_count,
            lr,
            beta1,
            beta2,
            epsilon,
            m,
            v,
        },
    })
}

impl Checkpoint {
    pub fn weights_only(params: ModelParams) -> Self {
        Checkpoint { params, state: None }
    }

    /// Model header and records, then a one-byte flag and, if set, the
    /// training state.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), CheckpointError> {
        self.params.write_to(w)?;
        match &self.state {
            None => w.write_all(&[0])?,
            Some(s) => {
                w.write_all(&[1])?;
                write_state(w, s)?;
            }
        }
        Ok(())
    }

    /// Reads a checkpoint. A file that ends right after the parameter
    /// records (a bare model file) loads without state.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, CheckpointError> {
        let params = ModelParams::read_from(r)?;
        let mut flag = [0u8; 1];
        let state = match r.read(&mut flag)? {
            0 => None,
            _ => match flag[0] {
                0 => None,
                1 => Some(read_state(r, &params)?),
                f => return Err(CheckpointError::Corrupt(format!("state flag {f}"))),
            },
        };
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(CheckpointError::Corrupt("trailing bytes".into()));
        }
        Ok(Checkpoint { params, state })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    /// Writes through a temporary file and renames it into place.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        let tmp = path.with_extension("ckpt.partial");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path)?;
        Checkpoint::read_from(&mut bytes.as_slice())
    }
}
