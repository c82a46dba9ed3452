//! Merging of training settings: defaults, then the key=value config file,
//! then explicit CLI flags (CLI wins).

use std::path::{Path, PathBuf};

use cgrnn_core::dsp::BasicKind;
use cgrnn_core::error::{Error, Result};
use cgrnn_core::model::config::parse_kv;
use cgrnn_core::model::{ModelConfig, TemporalReadout};
use cgrnn_core::train::TrainConfig;

/// CLI flags shared by `train` and `cv`. All optional so that "not given"
/// is distinguishable from an explicit value.
#[derive(Debug, Clone, clap::Args, Default)]
pub struct TrainFlags {
    /// key=value config file (model and trainer keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Basic feature family: mfb | spec | raw.
    #[arg(long)]
    pub basic: Option<String>,
    /// Add the spatial (IMD) stream.
    #[arg(long)]
    pub use_imd: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Maximum training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Early-stopping patience in epochs (0 = exactly one epoch).
    #[arg(long)]
    pub patience: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Conv filters per stream.
    #[arg(long)]
    pub filters: Option<usize>,
    #[arg(long)]
    pub gru_layers: Option<usize>,
    #[arg(long)]
    pub gru_units: Option<usize>,
    #[arg(long)]
    pub readout_hidden: Option<usize>,
    /// Temporal readout: mean | last.
    #[arg(long)]
    pub temporal_readout: Option<String>,
    /// Feature cache directory (defaults to $CGRNN_CACHE_DIR when set).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub cache_dir: Option<PathBuf>,
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad boolean for '{key}': '{value}'")))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad number for '{key}': '{value}'")))
}

/// Build settings from defaults + optional config file + CLI flags.
///
/// The basic-feature family decides the conv (input_dim, filter_len)
/// wiring (40/30, 257/200, 512/400); those dims can only be overridden by
/// config-file keys, not by CLI flags.
pub fn resolve(flags: &TrainFlags, threads: usize) -> Result<Settings> {
    // Read the file first: the basic kind decides the base model config.
    let file_pairs = match &flags.config {
        Some(path) => parse_kv(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    let file_get = |key: &str| -> Option<&str> {
        file_pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };

    let basic = match (&flags.basic, file_get("basic")) {
        (Some(cli), _) => BasicKind::parse(cli)?,
        (None, Some(file)) => BasicKind::parse(file)?,
        (None, None) => BasicKind::Mfb,
    };
    let mut model = ModelConfig::for_basic(basic);
    let mut train = TrainConfig {
        threads,
        ..TrainConfig::default()
    };

    for (key, value) in &file_pairs {
        match key.as_str() {
            "basic" => {} // consumed above
            "use_imd" => model.use_imd = parse_bool(key, value)?,
            "conv_basic_input_dim" => model.conv_basic.input_dim = parse_num(key, value)?,
            "conv_basic_filter_len" => model.conv_basic.filter_len = parse_num(key, value)?,
            "conv_basic_filters" | "filters" => model.conv_basic.n_filters = parse_num(key, value)?,
            "conv_imd_input_dim" => model.conv_imd.input_dim = parse_num(key, value)?,
            "conv_imd_filter_len" => model.conv_imd.filter_len = parse_num(key, value)?,
            "conv_imd_filters" => model.conv_imd.n_filters = parse_num(key, value)?,
            "gru_layers" => model.gru_layers = parse_num(key, value)?,
            "gru_units" => model.gru_units = parse_num(key, value)?,
            "bidirectional" => model.bidirectional = parse_bool(key, value)?,
            "readout_hidden" => model.readout_hidden = parse_num(key, value)?,
            "temporal_readout" => model.temporal_readout = TemporalReadout::parse(value)?,
            "batch_size" => train.batch_size = parse_num(key, value)?,
            "max_epochs" | "epochs" => train.max_epochs = parse_num(key, value)?,
            "patience" => train.patience = parse_num(key, value)?,
            "seed" => train.seed = parse_num(key, value)?,
            "learning_rate" | "lr" => train.learning_rate = parse_num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown config key '{other}' in {}",
                    flags
                        .config
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_default()
                )))
            }
        }
    }

    // CLI flags win. "filters" applies to both streams; the default
    // configuration uses 128 everywhere.
    if flags.use_imd {
        model.use_imd = true;
    }
    if let Some(n) = flags.filters {
        model.conv_basic.n_filters = n;
        model.conv_imd.n_filters = n;
    }
    if let Some(n) = flags.gru_layers {
        model.gru_layers = n;
    }
    if let Some(n) = flags.gru_units {
        model.gru_units = n;
    }
    if let Some(n) = flags.readout_hidden {
        model.readout_hidden = n;
    }
    if let Some(tr) = &flags.temporal_readout {
        model.temporal_readout = TemporalReadout::parse(tr)?;
    }
    if let Some(seed) = flags.seed {
        train.seed = seed;
    }
    if let Some(n) = flags.batch_size {
        train.batch_size = n;
    }
    if let Some(n) = flags.epochs {
        train.max_epochs = n;
    }
    if let Some(n) = flags.patience {
        train.patience = n;
    }
    if let Some(lr) = flags.lr {
        train.learning_rate = lr;
    }

    let cache_dir = flags
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("CGRNN_CACHE_DIR").map(PathBuf::from));

    model.validate()?;
    train.validate()?;
    Ok(Settings {
        model,
        train,
        cache_dir,
    })
}

pub fn cache_dir_opt(settings: &Settings) -> Option<&Path> {
    settings.cache_dir.as_deref()
}
