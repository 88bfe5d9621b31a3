//! The edge-profile super-resolution network.

pub mod checkpoint;
mod config;
mod network;
mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::{count_blocks, Attention, BlockModules, EpResidual, EpsrConfig};
pub use network::{
    ca_weights, cn_forward, count_parameters, eca_weights, ep_forward, ep_forward_detailed, epsr_forward,
    fractal_forward, reeb_forward, recab_feature_extract, self_ensemble, shallow_extract, upscale,
    weighted_residual_fuse, EdgeProfile, Epsr, CONTEXT_DILATIONS,
};
pub use params::{
    attention_total_entries, attention_weight_entries, block_param_specs, census, param_specs, upscale_stages, Init,
    ParamSpec, ParamStore,
};
