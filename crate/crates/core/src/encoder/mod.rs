//! The hierarchical attention network: parameters, forward pass, gradients
//! and checkpoints.

mod config;
mod head;
mod layout;
mod network;
mod ops;
mod params;

pub use config::ModelConfig;
pub use head::{head_backward, head_forward, HeadCache};
pub use layout::{BlockLayout, HeadLayout, Layout, TensorSlot};
pub use network::{concat_features, HierNet};
pub use ops::{gelu, softplus, Dropout};
pub use params::{
    decode_f32_le, encode_f32_le, glorot_bound, init_params, load_checkpoint, save_checkpoint, CheckpointManifest,
    ModelParams, MANIFEST_FILE, PARAMS_FILE, PARAM_ORDER,
};

pub(crate) use config::mlp_head_count;
pub(crate) use layout::Allocator;
pub(crate) use params::init_head;
