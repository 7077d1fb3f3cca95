use serde::{Deserialize, Serialize};

use super::ModelError;

/// Architecture of a Wave-U-Net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveUNetConfig {
    /// Number of down/up block pairs.
    pub num_layers: usize,
    /// Channel increment per depth level.
    pub extra_filters: usize,
    pub down_kernel: usize,
    pub up_kernel: usize,
    pub num_sources: usize,
    pub num_channels: usize,
    pub leaky_alpha: f64,
}

impl Default for WaveUNetConfig {
    fn default() -> Self {
        WaveUNetConfig {
            num_layers: 12,
            extra_filters: 16,
            down_kernel: 15,
            up_kernel: 5,
            num_sources: 2,
            num_channels: 1,
            leaky_alpha: 0.3,
        }
    }
}

/// Name and shape of one learnable tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// Fan-in of a kernel (`in_channels × width`); zero for biases.
    pub fn fan_in(&self) -> usize {
        match self.shape.as_slice() {
            [_, i, w] => i * w,
            _ => 0,
        }
    }
}

impl WaveUNetConfig {
    pub fn with_layers(mut self, num_layers: usize) -> Self {
        self.num_layers = num_layers;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.num_layers < 1 {
            return bad("num_layers must be at least 1".into());
        }
        if self.num_layers > 24 {
            return bad(format!("num_layers {} is unreasonably deep", self.num_layers));
        }
        if self.extra_filters < 1 {
            return bad("extra_filters must be at least 1".into());
        }
        for (name, k) in [("down_kernel", self.down_kernel), ("up_kernel", self.up_kernel)] {
            if k % 2 == 0 {
                return bad(format!("{name} must be odd, got {k}"));
            }
        }
        if self.num_sources < 2 {
            return bad(format!("num_sources must be at least 2, got {}", self.num_sources));
        }
        if self.num_channels < 1 {
            return bad("num_channels must be at least 1".into());
        }
        if !(self.leaky_alpha > 0.0 && self.leaky_alpha < 1.0) {
            return bad(format!("leaky_alpha {} outside (0, 1)", self.leaky_alpha));
        }
        Ok(())
    }

    /// Output filters of down block `level` (1-based) and of the up block at
    /// the same level.
    pub fn filters(&self, level: usize) -> usize {
        self.extra_filters * level
    }

    pub fn bottleneck_filters(&self) -> usize {
        self.extra_filters * (self.num_layers + 1)
    }

    pub fn output_channels(&self) -> usize {
        self.num_sources * self.num_channels
    }

    /// Every learnable tensor in recording order.
    pub fn layout(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        let mut conv = |name: String, out: usize, inp: usize, width: usize| {
            specs.push(ParamSpec {
                name: format!("{name}.kernel"),
                shape: vec![out, inp, width],
            });
            specs.push(ParamSpec {
                name: format!("{name}.bias"),
                shape: vec![out],
            });
        };
        let l = self.num_layers;
        let mut in_ch = self.num_channels;
        for level in 1..=l {
            conv(format!("down.{level}"), self.filters(level), in_ch, self.down_kernel);
            in_ch = self.filters(level);
        }
        conv("bottleneck".into(), self.bottleneck_filters(), in_ch, self.down_kernel);
        let mut below = self.bottleneck_filters();
        for level in (1..=l).rev() {
            let out = self.filters(level);
            conv(format!("up.{level}"), out, below + out, self.up_kernel);
            below = out;
        }
        conv("output".into(), self.output_channels(), below + self.num_channels, 1);
        specs
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(ParamSpec::numel).sum()
    }

    /// Shortest accepted input length. Each level halves an odd length
    /// `2m - 1` to `m`, and the deepest level needs at least two samples.
    pub fn min_length(&self) -> usize {
        (1usize << self.num_layers) + 1
    }

    pub fn is_valid_length(&self, n: usize) -> bool {
        n >= self.min_length() && (n - 1) % (1usize << self.num_layers) == 0
    }

    /// Smallest accepted length that is at least `n`.
    pub fn valid_length(&self, n: usize) -> usize {
        let block = 1usize << self.num_layers;
        if n <= self.min_length() {
            return self.min_length();
        }
        (n - 1).div_ceil(block) * block + 1
    }
}
