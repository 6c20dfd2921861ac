//! Two-branch residual autoencoder that fuses a visible and an infrared image.
//!
//! Each branch runs a stride-2 stem followed by four bottleneck stages, each
//! stage opening with a downsampling block. After the stem and every stage
//! the two branches' features are fused elementwise. The decoder starts from
//! the deepest fused features, climbs back through four upsampling
//! transbasic stages, and after each one adds an agant projection of the
//! fused encoder features at the same resolution. A final transbasic block
//! and a stride-2 transposed convolution restore full resolution, and a
//! sigmoid maps the result into (0, 1), clamped to the nearest representable
//! values so saturation never reaches the endpoints.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::blocks::{add_bottleneck, add_transbasic, bottleneck_block, transbasic_block};
use super::layers::{self, Pass};
use crate::error::{Error, Result};
use crate::tensor::{Element, Graph, ParamStore, Var};

/// Name prefix of every generator parameter.
pub const PREFIX: &str = "gen.";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatentFusion {
    Sum,
    Average,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Visible,
    Infrared,
}

impl Branch {
    fn prefix(self) -> &'static str {
        match self {
            Branch::Visible => "gen.vis",
            Branch::Infrared => "gen.ir",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub stem_channels: usize,
    /// Output widths of encoder layers 1-4.
    pub stage_widths: [usize; 4],
    /// Bottleneck blocks per encoder layer; decoder layers mirror the counts.
    pub blocks_per_stage: [usize; 4],
    /// Input widths of decoder layers, deepest first; must be `stage_widths` reversed.
    pub decoder_widths: [usize; 4],
    /// Spatial extents must be divisible by this (`2^5` for stem plus four stages).
    pub input_multiple: usize,
    pub bottleneck_expansion: usize,
    pub latent_fusion: LatentFusion,
    /// Feed fused features (rather than branch-private ones) into the next encoder stage.
    pub fused_feed_forward: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            stem_channels: 16,
            stage_widths: [16, 32, 64, 128],
            blocks_per_stage: [2, 2, 2, 2],
            decoder_widths: [128, 64, 32, 16],
            input_multiple: 32,
            bottleneck_expansion: 4,
            latent_fusion: LatentFusion::Sum,
            fused_feed_forward: false,
        }
    }
}

impl GeneratorConfig {
    /// Number of stride-2 reductions: the stem plus one per encoder stage.
    pub const DOWNSAMPLING_STAGES: u32 = 5;

    pub fn minimal() -> Self {
        Self {
            blocks_per_stage: [1, 1, 1, 1],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stem_channels == 0 || self.stage_widths.contains(&0) {
            return Err(Error::Config("channel widths must be positive".into()));
        }
        if self.blocks_per_stage.contains(&0) {
            return Err(Error::Config("every stage needs at least one block".into()));
        }
        let mut reversed = self.stage_widths;
        reversed.reverse();
        if reversed != self.decoder_widths {
            return Err(Error::Config(format!(
                "decoder widths {:?} must mirror stage widths {:?}",
                self.decoder_widths, self.stage_widths
            )));
        }
        let expected = 1usize << Self::DOWNSAMPLING_STAGES;
        if self.input_multiple != expected {
            return Err(Error::Config(format!(
                "input_multiple must be {expected} for {} downsampling stages, got {}",
                Self::DOWNSAMPLING_STAGES,
                self.input_multiple
            )));
        }
        if self.bottleneck_expansion == 0 {
            return Err(Error::Config("bottleneck expansion must be positive".into()));
        }
        Ok(())
    }

    /// Width of fused feature level `k` (0 = stem, 1-4 = encoder layers).
    fn level_width(&self, k: usize) -> usize {
        if k == 0 {
            self.stem_channels
        } else {
            self.stage_widths[k - 1]
        }
    }
}

/// Per-level outputs of one encoder branch: the stem followed by layers 1-4.
#[derive(Clone, Debug)]
pub struct StageFeatures {
    pub levels: Vec<Var>,
}

/// Generator parameters together with the configuration that shaped them.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams<T> {
    pub config: GeneratorConfig,
    pub store: ParamStore<T>,
}

/// Deterministically initialize a generator for `seed`.
pub fn build_generator<T: Element>(config: &GeneratorConfig, seed: u64) -> Result<GeneratorParams<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let c = config;
    for branch in [Branch::Visible, Branch::Infrared] {
        let p = branch.prefix();
        layers::add_conv(&mut store, &mut rng, &format!("{p}.stem.conv"), 1, c.stem_channels, 3, false)?;
        layers::add_batchnorm(&mut store, &format!("{p}.stem.bn"), c.stem_channels)?;
        let mut cin = c.stem_channels;
        for (s, (&width, &blocks)) in c.stage_widths.iter().zip(&c.blocks_per_stage).enumerate() {
            for j in 0..blocks {
                let name = format!("{p}.layer{}.{j}", s + 1);
                add_bottleneck(&mut store, &mut rng, &name, cin, width, c.bottleneck_expansion, j == 0)?;
                cin = width;
            }
        }
    }
    for k in 0..=4 {
        let w = c.level_width(k);
        layers::add_agant(&mut store, &mut rng, &format!("gen.agant{k}"), w, w)?;
    }
    for d in 0..4 {
        let cin = c.decoder_widths[d];
        let cout = if d < 3 { c.decoder_widths[d + 1] } else { c.stem_channels };
        let blocks = c.blocks_per_stage[3 - d];
        for j in 0..blocks {
            let name = format!("gen.dec.layer{}.{j}", d + 1);
            let up = j + 1 == blocks;
            add_transbasic(&mut store, &mut rng, &name, cin, if up { cout } else { cin }, up)?;
        }
    }
    add_transbasic(&mut store, &mut rng, "gen.final.block", c.stem_channels, c.stem_channels, false)?;
    layers::add_conv_transpose(&mut store, &mut rng, "gen.final.deconv", c.stem_channels, 1, 2, 2, true)?;
    Ok(GeneratorParams {
        config: config.clone(),
        store,
    })
}

/// Elementwise latent fusion of two same-shaped feature maps.
pub fn fuse_latents<T: Element>(g: &mut Graph<T>, feat_v: Var, feat_i: Var, mode: LatentFusion) -> Result<Var> {
    let s = g.add(feat_v, feat_i)?;
    Ok(match mode {
        LatentFusion::Sum => s,
        LatentFusion::Average => g.scale(s, 0.5),
    })
}

impl<T: Element> GeneratorParams<T> {
    pub fn check_input(&self, shape: [usize; 4]) -> Result<()> {
        let [_, c, h, w] = shape;
        let m = self.config.input_multiple;
        if c != 1 {
            return Err(Error::Input(format!("expected single-channel images, got {c} channels")));
        }
        if h == 0 || w == 0 || h % m != 0 || w % m != 0 {
            return Err(Error::Input(format!(
                "image extents {h}x{w} must be positive multiples of {m}"
            )));
        }
        Ok(())
    }

    fn stem(&mut self, g: &mut Graph<T>, pass: Pass, branch: Branch, x: Var) -> Result<Var> {
        let p = branch.prefix();
        let h = layers::conv(g, &self.store, pass, &format!("{p}.stem.conv"), x, 2, 1)?;
        let h = layers::batchnorm(g, &mut self.store, pass, &format!("{p}.stem.bn"), h)?;
        Ok(g.relu(h))
    }

    fn stage(&mut self, g: &mut Graph<T>, pass: Pass, branch: Branch, s: usize, mut x: Var) -> Result<Var> {
        let p = branch.prefix();
        for j in 0..self.config.blocks_per_stage[s] {
            x = bottleneck_block(g, &mut self.store, pass, &format!("{p}.layer{}.{j}", s + 1), x, j == 0)?;
        }
        Ok(x)
    }

    /// Run one encoder branch on its own, returning per-level features.
    pub fn encode_branch(&mut self, g: &mut Graph<T>, pass: Pass, branch: Branch, x: Var) -> Result<StageFeatures> {
        let mut levels = vec![self.stem(g, pass, branch, x)?];
        for s in 0..4 {
            let prev = *levels.last().expect("stem present");
            levels.push(self.stage(g, pass, branch, s, prev)?);
        }
        Ok(StageFeatures { levels })
    }

    /// Both branches plus the fused features at every level.
    pub fn encode(
        &mut self,
        g: &mut Graph<T>,
        pass: Pass,
        v: Var,
        i: Var,
    ) -> Result<(StageFeatures, StageFeatures, Vec<Var>)> {
        let mode = self.config.latent_fusion;
        let mut fv = vec![self.stem(g, pass, Branch::Visible, v)?];
        let mut fi = vec![self.stem(g, pass, Branch::Infrared, i)?];
        let mut fused = vec![fuse_latents(g, fv[0], fi[0], mode)?];
        for s in 0..4 {
            let (inv, ini) = if self.config.fused_feed_forward {
                (fused[s], fused[s])
            } else {
                (fv[s], fi[s])
            };
            fv.push(self.stage(g, pass, Branch::Visible, s, inv)?);
            fi.push(self.stage(g, pass, Branch::Infrared, s, ini)?);
            fused.push(fuse_latents(g, fv[s + 1], fi[s + 1], mode)?);
        }
        Ok((StageFeatures { levels: fv }, StageFeatures { levels: fi }, fused))
    }

    /// Fused image `F = RAE(V, I)`, same shape as the inputs, values in (0, 1).
    pub fn forward(&mut self, g: &mut Graph<T>, pass: Pass, v: Var, i: Var) -> Result<Var> {
        let (vs, is) = (g.shape(v), g.shape(i));
        if vs != is {
            return Err(Error::Input(format!("visible {vs:?} and infrared {is:?} shapes differ")));
        }
        self.check_input(vs)?;
        let (_, _, fused) = self.encode(g, pass, v, i)?;
        let mut x = layers::agant(g, &mut self.store, pass, "gen.agant4", fused[4], 1)?;
        for d in 0..4 {
            let blocks = self.config.blocks_per_stage[3 - d];
            for j in 0..blocks {
                let name = format!("gen.dec.layer{}.{j}", d + 1);
                x = transbasic_block(g, &mut self.store, pass, &name, x, j + 1 == blocks)?;
            }
            let level = 3 - d;
            let skip = layers::agant(g, &mut self.store, pass, &format!("gen.agant{level}"), fused[level], 1)?;
            x = g.add(x, skip)?;
        }
        x = transbasic_block(g, &mut self.store, pass, "gen.final.block", x, false)?;
        let logits = layers::conv_transpose(g, &self.store, pass, "gen.final.deconv", x, 2, 0, 0)?;
        let f = g.sigmoid(logits);
        // A saturated sigmoid rounds to exactly 0 or 1; keep F strictly inside.
        let lo = T::min_positive_value().as_f64();
        let hi = (T::one() - T::epsilon() / T::from_f64(2.0)).as_f64();
        Ok(g.clamp(f, lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_configs() {
        let mut c = GeneratorConfig::default();
        c.decoder_widths = [16, 32, 64, 128];
        assert!(matches!(build_generator::<f32>(&c, 0), Err(Error::Config(_))));
        let mut c = GeneratorConfig::default();
        c.input_multiple = 16;
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.blocks_per_stage[2] = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn fuse_latents_sum_and_average() {
        use crate::tensor::Tensor;
        let mut g = Graph::<f64>::new();
        let a = g.constant(Tensor::vector(vec![1.0, -2.0]));
        let b = g.constant(Tensor::vector(vec![0.5, 4.0]));
        let z = g.constant(Tensor::zeros([2, 1, 1, 1]));
        let s = fuse_latents(&mut g, a, z, LatentFusion::Sum).unwrap();
        assert_eq!(g.value(s).data(), g.value(a).data());
        let d = fuse_latents(&mut g, a, a, LatentFusion::Sum).unwrap();
        assert_eq!(g.value(d).data(), &[2.0, -4.0]);
        let ab = fuse_latents(&mut g, a, b, LatentFusion::Sum).unwrap();
        let ba = fuse_latents(&mut g, b, a, LatentFusion::Sum).unwrap();
        assert_eq!(g.value(ab).data(), g.value(ba).data());
        let avg = fuse_latents(&mut g, a, b, LatentFusion::Average).unwrap();
        assert_eq!(g.value(avg).data(), &[0.75, 1.0]);
        let other = g.constant(Tensor::zeros([3, 1, 1, 1]));
        assert!(fuse_latents(&mut g, a, other, LatentFusion::Sum).is_err());
    }
}
