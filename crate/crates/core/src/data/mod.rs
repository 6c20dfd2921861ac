//! Registered pair loading, dataset manifests, patch sampling and synthetic pairs.

mod io;
mod manifest;
mod pair;
mod patches;
mod synth;

pub use io::{load_grayscale, save_grayscale};
pub use manifest::{build_manifest, DatasetManifest, ManifestEntry, Split};
pub use pair::ImagePair;
pub use patches::{sample_patches, PatchSpec};
pub use synth::{synthesize_pair, SIZE_MULTIPLE};

use std::path::Path;

use crate::error::Result;

/// Write `pair` as `root/<id>/vis.png` and `root/<id>/ir.png`.
pub fn write_pair(root: impl AsRef<Path>, pair: &ImagePair) -> Result<()> {
    let dir = root.as_ref().join(&pair.id);
    save_grayscale(&pair.visible, dir.join("vis.png"))?;
    save_grayscale(&pair.infrared, dir.join("ir.png"))
}
