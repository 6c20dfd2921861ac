//! Grid search over the content-loss weights.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::TrainConfig;
use super::train::{patch_pool, train, Batch};
use crate::data::{DatasetManifest, ImagePair, Split};
use crate::error::{Error, Result};
use crate::nn::{GeneratorParams, Pass};
use crate::objectives::{content_loss, LossWeights};
use crate::tensor::{Element, Graph};

/// How grid cells are ranked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectionMetric {
    /// Mean content loss on held-out patches, measured under the base weights
    /// so that cells trained with different weights are compared on one scale.
    #[default]
    HeldOutContent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub selection: SelectionMetric,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alphas: vec![0.1, 1.0, 10.0],
            betas: vec![0.3, 0.5, 0.7],
            selection: SelectionMetric::HeldOutContent,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.betas.is_empty() {
            return Err(Error::Config("grid needs at least one alpha and one beta".into()));
        }
        for &a in &self.alphas {
            for &b in &self.betas {
                LossWeights::new(a, b)?;
            }
        }
        Ok(())
    }

    /// Cells in row-major (alpha, beta) order.
    pub fn cells(&self) -> Vec<LossWeights> {
        self.alphas
            .iter()
            .flat_map(|&alpha| self.betas.iter().map(move |&beta| LossWeights { alpha, beta }))
            .collect()
    }
}

/// Seed of grid cell `index`, derived from the base seed.
pub fn derive_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCell {
    pub weights: LossWeights,
    pub seed: u64,
    /// Held-out content loss under the base weights (the selection metric).
    pub heldout_content: f64,
    /// Held-out content loss under the cell's own weights.
    pub heldout_content_own: f64,
    pub final_train_content: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best_index: usize,
}

impl GridResult {
    pub fn best(&self) -> LossWeights {
        self.cells[self.best_index].weights
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,beta,seed,heldout_content,heldout_content_own,final_train_content,selected\n");
        for (k, c) in self.cells.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                c.weights.alpha,
                c.weights.beta,
                c.seed,
                c.heldout_content,
                c.heldout_content_own,
                c.final_train_content,
                k == self.best_index
            );
        }
        s
    }
}

/// Mean content loss over all patches of `pairs`, generator in eval mode.
pub fn heldout_content<T: Element>(
    gen: &mut GeneratorParams<T>,
    pairs: &[ImagePair],
    config: &TrainConfig,
    weights: LossWeights,
) -> Result<f64> {
    let pool = patch_pool(pairs, config)?;
    let mut total = 0.0;
    for chunk in pool.chunks(config.batch_size) {
        let refs: Vec<&ImagePair> = chunk.iter().collect();
        let b = Batch::from_pairs(&refs)?;
        let mut g = Graph::<T>::new();
        let v = g.constant(b.visible.cast());
        let i = g.constant(b.infrared.cast());
        let f = gen.forward(&mut g, Pass::eval(), v, i)?;
        let t = content_loss(&mut g, f, v, i, weights)?;
        total += g.item(t.content).as_f64() * chunk.len() as f64;
    }
    Ok(total / pool.len() as f64)
}

/// Train one short run per cell (in parallel) and pick the lowest held-out content loss.
pub fn grid_search(
    grid: &GridSpec,
    base: &TrainConfig,
    train_pairs: &[ImagePair],
    heldout: &[ImagePair],
) -> Result<GridResult> {
    grid.validate()?;
    base.validate()?;
    if heldout.is_empty() {
        return Err(Error::Dataset("grid search needs held-out pairs".into()));
    }
    let cells: Vec<GridCell> = grid
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(k, weights)| {
            let config = TrainConfig {
                seed: derive_seed(base.seed, k),
                weights,
                ..base.clone()
            };
            let mut t = train(&config, train_pairs)?;
            let final_train_content = t.log.rows.last().map_or(f64::NAN, |(_, r)| r.content);
            Ok(GridCell {
                weights,
                seed: config.seed,
                heldout_content: heldout_content(&mut t.generator, heldout, base, base.weights)?,
                heldout_content_own: heldout_content(&mut t.generator, heldout, base, weights)?,
                final_train_content,
            })
        })
        .collect::<Result<_>>()?;
    let best_index = cells
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.heldout_content.total_cmp(&b.1.heldout_content))
        .map(|(k, _)| k)
        .expect("grid is non-empty");
    Ok(GridResult { cells, best_index })
}

/// Split the manifest by `base.eval_fraction` and search on it.
pub fn grid_search_manifest(grid: &GridSpec, base: &TrainConfig, manifest: &DatasetManifest) -> Result<GridResult> {
    let mut m = manifest.clone();
    m.assign_splits(base.eval_fraction)?;
    let train_pairs = m.load_split(Split::Train)?;
    let heldout = m.load_split(Split::Eval)?;
    if heldout.is_empty() {
        return Err(Error::Dataset(format!(
            "eval_fraction {} leaves no held-out pairs among {}",
            base.eval_fraction,
            m.entries.len()
        )));
    }
    grid_search(grid, base, &train_pairs, &heldout)
}
