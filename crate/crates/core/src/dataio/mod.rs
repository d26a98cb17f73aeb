//! Dual-time SVE Bayer data: exposure maps, CFA mosaicking, capture
//! simulation, ground-truth merging, synthetic scenes and file I/O.

mod cfa;
mod dataset;
mod exposure;
mod frame;
mod merge;
mod meta;
mod pfm;
mod png_io;
mod scene;
mod simulate;

pub use cfa::{cfa_color, CfaColor, CfaPhase};
pub use dataset::{load_split, write_sample, Sample};
pub use exposure::ExposureMap;
pub use frame::BayerFrame;
pub use merge::merge_ground_truth;
pub use meta::{CrfSpec, SampleMeta};
pub use pfm::{read_pfm, write_pfm, PfmImage};
pub use png_io::{read_png, write_png, IntImage};
pub use scene::{gen_synthetic_scene, SceneRadiance};
pub use simulate::{simulate_dual_time, simulate_from_scene, ExposurePair};
