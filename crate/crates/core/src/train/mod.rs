//! End-to-end pipeline: config files, dataset preparation, patch sampling,
//! the training loop, checkpoints, evaluation and introspection.

mod checkpoint;
mod config;
mod dataprep;
mod eval;
mod inspect;
mod looprun;
mod patch;

pub use checkpoint::{checkpoint_dtype, load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{parse_kv_file, parse_kv_text, TrainConfig};
pub use dataprep::{
    generate_dataset, load_samples, prepare_from_pairs, GenDataSpec, LoadedSample,
};
pub use eval::{evaluate, infer_frame, InferOutput};
pub use inspect::{inspect_checkpoint, power_iteration_pc1, InspectReport, PCA_MAX_ITER, PCA_TOL};
pub use looprun::{train, LossLogRow, TrainOutcome};
pub use patch::{aligned_origins, crop_spatial, sample_patch, stack_batch, PatchSet};
