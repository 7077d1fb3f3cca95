use std::io::{Read, Write};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CheckpointError, ModelError, WaveUNetConfig};
use crate::ndgrad::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"WAVEUNET";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Learnable tensors of a Wave-U-Net, in the order of
/// [`WaveUNetConfig::layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: WaveUNetConfig,
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    /// Kernels uniform in `±sqrt(1 / fan_in)`, biases zero. Deterministic in
    /// `seed`.
    pub fn init(config: WaveUNetConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for spec in config.layout() {
            let fan_in = spec.fan_in();
            let data = if fan_in == 0 {
                vec![0.0; spec.numel()]
            } else {
                let bound = (1.0 / fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound);
                (0..spec.numel()).map(|_| dist.sample(&mut rng)).collect()
            };
            tensors.push(Tensor::new(spec.shape.clone(), data)?);
            names.push(spec.name);
        }
        Ok(ModelParams { config, names, tensors })
    }

    /// Assembles parameters from named tensors, checking them against the
    /// layout of `config`.
    pub fn from_named(config: WaveUNetConfig, named: Vec<(String, Tensor)>) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = config.layout();
        if layout.len() != named.len() {
            return Err(ModelError::Layout(format!(
                "expected {} tensors, got {}",
                layout.len(),
                named.len()
            )));
        }
        let mut names = Vec::with_capacity(named.len());
        let mut tensors = Vec::with_capacity(named.len());
        for (spec, (name, t)) in layout.into_iter().zip(named) {
            if spec.name != name || spec.shape != t.shape() {
                return Err(ModelError::Layout(format!(
                    "expected {} {:?}, got {} {:?}",
                    spec.name,
                    spec.shape,
                    name,
                    t.shape()
                )));
            }
            names.push(name);
            tensors.push(t);
        }
        Ok(ModelParams { config, names, tensors })
    }

    pub fn config(&self) -> &WaveUNetConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(move |i| &mut self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    /// Total number of scalar weights.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn zero_grad(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    /// Writes the checkpoint header and one record per tensor.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), CheckpointError> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let c = &self.config;
        for v in [
            c.num_layers,
            c.extra_filters,
            c.down_kernel,
            c.up_kernel,
            c.num_sources,
            c.num_channels,
        ] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&c.leaky_alpha.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in self.iter() {
            write_record(w, name, t.shape(), t.data())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let mut dims = [0usize; 6];
        for d in &mut dims {
            *d = read_u32(r)? as usize;
        }
        let config = WaveUNetConfig {
            num_layers: dims[0],
            extra_filters: dims[1],
            down_kernel: dims[2],
            up_kernel: dims[3],
            num_sources: dims[4],
            num_channels: dims[5],
            leaky_alpha: read_f64(r)?,
        };
        config.validate().map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let count = read_u32(r)? as usize;
        if count != config.layout().len() {
            return Err(CheckpointError::Corrupt(format!(
                "{count} records for a layout of {}",
                config.layout().len()
            )));
        }
        let mut named = Vec::with_capacity(count);
        for _ in 0..count {
            let (name, shape, data) = read_record(r)?;
            let t = Tensor::new(shape, data).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
            named.push((name, t));
        }
        ModelParams::from_named(config, named).map_err(|e| CheckpointError::Corrupt(e.to_string()))
    }
}

pub(crate) fn write_record<W: Write>(
    w: &mut W,
    name: &str,
    shape: &[usize],
    data: &[f64],
) -> Result<(), CheckpointError> {
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(data.len() * 8);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_record<R: Read>(r: &mut R) -> Result<(String, Vec<usize>, Vec<f64>), CheckpointError> {
    let name_len = read_u32(r)? as usize;
    if name_len > 4096 {
        return Err(CheckpointError::Corrupt(format!("name length {name_len}")));
    }
    let mut name = vec![0u8; name_len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|_| CheckpointError::Corrupt("non-UTF-8 name".into()))?;
    let rank = read_u32(r)? as usize;
    if rank > 8 {
        return Err(CheckpointError::Corrupt(format!("rank {rank} for {name}")));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(read_u64(r)? as usize);
    }
    let numel = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= 1 << 32)
        .ok_or_else(|| CheckpointError::Corrupt(format!("shape {shape:?} for {name}")))?;
    let mut raw = vec![0u8; numel * 8];
    r.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    Ok((name, shape, data))
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64, CheckpointError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64, CheckpointError> {
    Ok(f64::from_bits(read_u64(r)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> WaveUNetConfig {
        WaveUNetConfig {
            num_layers: 3,
            extra_filters: 4,
            ..Default::default()
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = ModelParams::init(toy(), 7).unwrap();
        let b = ModelParams::init(toy(), 7).unwrap();
        let c = ModelParams::init(toy(), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let p = ModelParams::init(toy(), 1).unwrap();
        for (spec, t) in toy().layout().iter().zip(p.tensors()) {
            if spec.fan_in() == 0 {
                assert!(t.data().iter().all(|&v| v == 0.0));
            } else {
                let bound = (1.0 / spec.fan_in() as f64).sqrt();
                assert!(t.data().iter().all(|v| v.abs() <= bound));
            }
        }
    }

    #[test]
    fn bytes_round_trip() {
        let p = ModelParams::init(toy(), 3).unwrap();
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        let q = ModelParams::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(p, q);
        let mut buf2 = Vec::new();
        q.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn corrupt_headers_rejected() {
        let p = ModelParams::init(toy(), 3).unwrap();
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            ModelParams::read_from(&mut bad.as_slice()),
            Err(CheckpointError::BadMagic)
        ));

        let mut bad = buf.clone();
        bad[8] = 99;
        assert!(matches!(
            ModelParams::read_from(&mut bad.as_slice()),
            Err(CheckpointError::UnsupportedVersion(99))
        ));

        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(
            ModelParams::read_from(&mut &truncated[..]),
            Err(CheckpointError::Io(_))
        ));
    }
}
