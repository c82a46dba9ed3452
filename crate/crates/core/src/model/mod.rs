//! The convolutional gated recurrent network: per-frame convolution with
//! global max pooling on one or two feature streams, a stacked
//! bidirectional GRU, a feed-forward sigmoid readout and binary
//! cross-entropy, all with hand-written backward passes.

pub mod checkpoint;
pub mod config;
pub mod conv;
pub mod gradsuite;
pub mod gru;
pub mod init;
pub mod loss;
pub mod network;
pub mod readout;
pub mod stack;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ConvStreamConfig, ModelConfig, TemporalReadout, N_TAGS};
pub use conv::{conv1d_gmp_backward, conv1d_gmp_forward, ConvFilters};
pub use gru::{gru_cell_backward, gru_cell_forward, CellKind, GruWeights};
pub use loss::{bce_loss, BCE_EPS};
pub use network::{
    init_params, model_backward, model_forward, ModelCache, ModelParams, NetWeights, TagPosterior,
};
pub use readout::ReadoutWeights;
pub use stack::{bigru_stack_backward, bigru_stack_forward, BiGruLayer};
