use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pair::ImagePair;
use crate::error::{Error, Result};

/// Square training crops taken on a stride grid, then shuffled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchSpec {
    pub size: usize,
    pub stride: usize,
    pub seed: u64,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self {
            size: 64,
            stride: 32,
            seed: 0,
        }
    }
}

impl PatchSpec {
    /// `multiple` is the generator's input multiple.
    pub fn validate(&self, multiple: usize) -> Result<()> {
        if self.size == 0 || self.size % multiple != 0 {
            return Err(Error::Config(format!(
                "patch size {} must be a positive multiple of {multiple}",
                self.size
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("patch stride must be positive".into()));
        }
        Ok(())
    }

    /// Top-left corners of the grid, row-major, before shuffling.
    pub fn grid(&self, width: usize, height: usize) -> Result<Vec<(usize, usize)>> {
        if self.stride == 0 {
            return Err(Error::Config("patch stride must be positive".into()));
        }
        if self.size > width || self.size > height {
            return Err(Error::Input(format!(
                "patch {} does not fit a {width}x{height} image",
                self.size
            )));
        }
        let mut out = Vec::new();
        for y in (0..=height - self.size).step_by(self.stride) {
            for x in (0..=width - self.size).step_by(self.stride) {
                out.push((x, y));
            }
        }
        Ok(out)
    }
}

/// Co-located crops of both modalities. Patch ids are `"{id}@{x},{y}"`.
pub fn sample_patches(pair: &ImagePair, spec: &PatchSpec) -> Result<Vec<ImagePair>> {
    let mut corners = spec.grid(pair.width(), pair.height())?;
    corners.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    corners
        .into_iter()
        .map(|(x, y)| {
            ImagePair::new(
                format!("{}@{x},{y}", pair.id),
                pair.visible.crop(x, y, spec.size, spec.size)?,
                pair.infrared.crop(x, y, spec.size, spec.size)?,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::GrayImage;

    fn pair(n: usize) -> ImagePair {
        let v = GrayImage::from_fn(n, n, |x, y| ((x * 7 + y * 3) % 256) as f64 / 255.0).unwrap();
        ImagePair::new("p", v.clone(), v.inverted()).unwrap()
    }

    #[test]
    fn tiles_a_square_image() {
        let spec = PatchSpec {
            size: 32,
            stride: 32,
            seed: 1,
        };
        let patches = sample_patches(&pair(64), &spec).unwrap();
        assert_eq!(patches.len(), 4);
        let mut ids: Vec<_> = patches.iter().map(|p| p.id.clone()).collect();
        ids.sort();
        assert_eq!(ids, ["p@0,0", "p@0,32", "p@32,0", "p@32,32"]);
    }

    #[test]
    fn oversized_patch_is_rejected() {
        let spec = PatchSpec {
            size: 128,
            ..PatchSpec::default()
        };
        assert!(matches!(sample_patches(&pair(64), &spec), Err(Error::Input(_))));
        assert!(spec.validate(32).is_ok());
        assert!(PatchSpec { size: 48, ..spec }.validate(32).is_err());
    }
}
