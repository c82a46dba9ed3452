//! Model hyperparameters and their key=value serialization (used both for
//! config files and the checkpoint header).

use crate::dsp::BasicKind;
use crate::error::{Error, Result};

/// How the per-frame GRU outputs are collapsed into one vector before the
/// feed-forward readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalReadout {
    MeanOverTime,
    LastFrame,
}

impl TemporalReadout {
    pub fn name(self) -> &'static str {
        match self {
            TemporalReadout::MeanOverTime => "mean",
            TemporalReadout::LastFrame => "last",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "mean" => TemporalReadout::MeanOverTime,
            "last" => TemporalReadout::LastFrame,
            other => {
                return Err(Error::Config(format!(
                    "unknown temporal readout '{other}' (expected mean|last)"
                )))
            }
        })
    }
}

/// One convolution stream: `n_filters` FIR filters of length `filter_len`
/// slid over an `input_dim`-dimensional frame, ReLU, then global max
/// pooling down to one value per filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvStreamConfig {
    pub input_dim: usize,
    pub filter_len: usize,
    pub n_filters: usize,
}

impl ConvStreamConfig {
    pub fn new(input_dim: usize, filter_len: usize, n_filters: usize) -> Self {
        ConvStreamConfig {
            input_dim,
            filter_len,
            n_filters,
        }
    }

    /// Number of valid filter positions (`input_dim - filter_len + 1`).
    pub fn positions(&self) -> usize {
        self.input_dim - self.filter_len + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter_len == 0 || self.filter_len > self.input_dim || self.n_filters == 0 {
            return Err(Error::Config(format!(
                "invalid conv stream: input_dim={} filter_len={} n_filters={}",
                self.input_dim, self.filter_len, self.n_filters
            )));
        }
        Ok(())
    }
}

pub const N_TAGS: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub basic: BasicKind,
    pub use_imd: bool,
    pub conv_basic: ConvStreamConfig,
    pub conv_imd: ConvStreamConfig,
    pub gru_layers: usize,
    pub gru_units: usize,
    pub bidirectional: bool,
    pub readout_hidden: usize,
    pub n_tags: usize,
    pub temporal_readout: TemporalReadout,
}

impl ModelConfig {
    /// Defaults for a given basic feature family: 128 filters with the
    /// per-family filter length (30 / 200 / 400), the IMD stream mirroring
    /// the spectrogram configuration (257, 200), three bidirectional GRU
    /// layers of 128 units and a 500-unit ReLU layer into 7 sigmoid outputs.
    pub fn for_basic(basic: BasicKind) -> Self {
        ModelConfig {
            basic,
            use_imd: false,
            conv_basic: ConvStreamConfig::new(basic.dim(), basic.default_filter_len(), 128),
            conv_imd: ConvStreamConfig::new(257, 200, 128),
            gru_layers: 3,
            gru_units: 128,
            bidirectional: true,
            readout_hidden: 500,
            n_tags: N_TAGS,
            temporal_readout: TemporalReadout::MeanOverTime,
        }
    }

    /// Miniature configuration for gradient checks (M=8, F=3, N=4, H=5).
    pub fn tiny() -> Self {
        ModelConfig {
            basic: BasicKind::Mfb,
            use_imd: false,
            conv_basic: ConvStreamConfig::new(8, 3, 4),
            conv_imd: ConvStreamConfig::new(8, 3, 4),
            gru_layers: 1,
            gru_units: 5,
            bidirectional: true,
            readout_hidden: 6,
            n_tags: N_TAGS,
            temporal_readout: TemporalReadout::MeanOverTime,
        }
    }

    pub fn with_imd(mut self, use_imd: bool) -> Self {
        self.use_imd = use_imd;
        self
    }

    /// Width of the GRU input: the concatenated pooled conv outputs.
    pub fn gru_input_dim(&self) -> usize {
        self.conv_basic.n_filters
            + if self.use_imd {
                self.conv_imd.n_filters
            } else {
                0
            }
    }

    /// Width of the GRU stack output per frame.
    pub fn gru_output_dim(&self) -> usize {
        self.gru_units * if self.bidirectional { 2 } else { 1 }
    }

    /// Total feature dimensionality seen by the model (basic + optional
    /// IMD), which is also the length of the normalization vectors.
    pub fn feature_dim(&self) -> usize {
        self.conv_basic.input_dim
            + if self.use_imd {
                self.conv_imd.input_dim
            } else {
                0
            }
    }

    pub fn validate(&self) -> Result<()> {
        self.conv_basic.validate()?;
        if self.use_imd {
            self.conv_imd.validate()?;
        }
        if self.gru_layers == 0 || self.gru_units == 0 || self.readout_hidden == 0 {
            return Err(Error::Config(format!(
                "invalid model dims: gru_layers={} gru_units={} readout_hidden={}",
                self.gru_layers, self.gru_units, self.readout_hidden
            )));
        }
        if self.n_tags == 0 {
            return Err(Error::Config("n_tags must be positive".into()));
        }
        Ok(())
    }

    /// Serialize as `key=value` lines (the checkpoint header block).
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("basic={}\n", self.basic.name()));
        s.push_str(&format!("use_imd={}\n", self.use_imd));
        s.push_str(&format!("conv_basic_input_dim={}\n", self.conv_basic.input_dim));
        s.push_str(&format!("conv_basic_filter_len={}\n", self.conv_basic.filter_len));
        s.push_str(&format!("conv_basic_filters={}\n", self.conv_basic.n_filters));
        s.push_str(&format!("conv_imd_input_dim={}\n", self.conv_imd.input_dim));
        s.push_str(&format!("conv_imd_filter_len={}\n", self.conv_imd.filter_len));
        s.push_str(&format!("conv_imd_filters={}\n", self.conv_imd.n_filters));
        s.push_str(&format!("gru_layers={}\n", self.gru_layers));
        s.push_str(&format!("gru_units={}\n", self.gru_units));
        s.push_str(&format!("bidirectional={}\n", self.bidirectional));
        s.push_str(&format!("readout_hidden={}\n", self.readout_hidden));
        s.push_str(&format!("n_tags={}\n", self.n_tags));
        s.push_str(&format!("temporal_readout={}\n", self.temporal_readout.name()));
        s
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let pairs = parse_kv(text)?;
        let get = |key: &str| -> Result<&str> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Config(format!("missing model config key '{key}'")))
        };
        let parse_usize = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::Config(format!("bad integer for '{key}'")))
        };
        let parse_bool = |key: &str| -> Result<bool> {
            get(key)?
                .parse()
                .map_err(|_| Error::Config(format!("bad boolean for '{key}'")))
        };
        let cfg = ModelConfig {
            basic: BasicKind::parse(get("basic")?)?,
            use_imd: parse_bool("use_imd")?,
            conv_basic: ConvStreamConfig::new(
                parse_usize("conv_basic_input_dim")?,
                parse_usize("conv_basic_filter_len")?,
                parse_usize("conv_basic_filters")?,
            ),
            conv_imd: ConvStreamConfig::new(
                parse_usize("conv_imd_input_dim")?,
                parse_usize("conv_imd_filter_len")?,
                parse_usize("conv_imd_filters")?,
            ),
            gru_layers: parse_usize("gru_layers")?,
            gru_units: parse_usize("gru_units")?,
            bidirectional: parse_bool("bidirectional")?,
            readout_hidden: parse_usize("readout_hidden")?,
            n_tags: parse_usize("n_tags")?,
            temporal_readout: TemporalReadout::parse(get("temporal_readout")?)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Parse {
            line: i + 1,
            message: format!("expected key=value, got '{line}'"),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
