//! Training, grid search, inference and reporting.

mod config;
mod fuse;
mod grid;
mod report;
mod train;

pub use config::{DiscScoring, TrainConfig};
pub use fuse::{fuse_pair, fuse_values, padded_extent, reflect_pad};
pub use grid::{derive_seed, grid_search, grid_search_manifest, heldout_content, GridCell, GridResult, GridSpec, SelectionMetric};
pub use report::{evaluate_report, fused_path, write_report, EvaluationOutcome};
pub use train::{
    load_generator, load_networks, patch_pool, train, train_to_dir, Batch, RunLog, Trainer, CONFIG_RECORD,
};
