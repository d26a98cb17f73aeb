//! The two-branch reconstruction network: a residual reconstruction branch,
//! an exposure-guidance branch over the mask-gated radiance, per-block
//! scalar fusion, the ablation variants, and parameter/FLOP accounting.

mod config;
mod count;
mod model;

pub use config::{Fusion, ModelConfig};
pub use count::{count_params, estimate_flops};
pub use model::{build_model, ConvLayer, ForwardVars, Model};
