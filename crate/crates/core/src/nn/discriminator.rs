//! Discriminator: encoder-style stem and bottleneck stages, then a hidden
//! fully connected layer and a single sigmoid unit scoring how likely an
//! image is a real visible image.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::blocks::{add_bottleneck, bottleneck_block};
use super::layers::{self, Pass};
use crate::error::{Error, Result};
use crate::tensor::{Element, Graph, ParamStore, Var};

pub const PREFIX: &str = "disc.";

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorConfig {
    pub stem_channels: usize,
    pub stage_widths: Vec<usize>,
    pub blocks_per_stage: Vec<usize>,
    pub hidden: usize,
    /// Square input extent the fully connected layer is sized for.
    pub input_extent: usize,
    pub bottleneck_expansion: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            stem_channels: 16,
            stage_widths: vec![16, 32],
            blocks_per_stage: vec![2, 2],
            hidden: 128,
            input_extent: 64,
            bottleneck_expansion: 4,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage_widths.is_empty() || self.stage_widths.len() != self.blocks_per_stage.len() {
            return Err(Error::Config(
                "discriminator needs matching, non-empty stage widths and block counts".into(),
            ));
        }
        if self.stem_channels == 0
            || self.hidden == 0
            || self.stage_widths.contains(&0)
            || self.blocks_per_stage.contains(&0)
            || self.bottleneck_expansion == 0
        {
            return Err(Error::Config("discriminator sizes must be positive".into()));
        }
        let factor = 1usize << (self.stage_widths.len() + 1);
        if self.input_extent == 0 || self.input_extent % factor != 0 {
            return Err(Error::Config(format!(
                "discriminator input extent {} must be a positive multiple of {factor}",
                self.input_extent
            )));
        }
        Ok(())
    }

    /// Flattened feature count entering the hidden layer.
    pub fn fc_inputs(&self) -> usize {
        let side = self.input_extent >> (self.stage_widths.len() + 1);
        self.stage_widths.last().copied().unwrap_or(0) * side * side
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorParams<T> {
    pub config: DiscriminatorConfig,
    pub store: ParamStore<T>,
}

pub fn build_discriminator<T: Element>(
    config: &DiscriminatorConfig,
    seed: u64,
) -> Result<DiscriminatorParams<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    layers::add_conv(&mut store, &mut rng, "disc.stem.conv", 1, config.stem_channels, 3, false)?;
    layers::add_batchnorm(&mut store, "disc.stem.bn", config.stem_channels)?;
    let mut cin = config.stem_channels;
    for (s, (&width, &blocks)) in config.stage_widths.iter().zip(&config.blocks_per_stage).enumerate() {
        for j in 0..blocks {
            let name = format!("disc.layer{}.{j}", s + 1);
            add_bottleneck(&mut store, &mut rng, &name, cin, width, config.bottleneck_expansion, j == 0)?;
            cin = width;
        }
    }
    layers::add_linear(&mut store, &mut rng, "disc.fc1", config.fc_inputs(), config.hidden)?;
    layers::add_linear(&mut store, &mut rng, "disc.fc2", config.hidden, 1)?;
    Ok(DiscriminatorParams {
        config: config.clone(),
        store,
    })
}

impl<T: Element> DiscriminatorParams<T> {
    /// One probability per batch item, shaped `(N, 1, 1, 1)`.
    pub fn forward(&mut self, g: &mut Graph<T>, pass: Pass, image: Var) -> Result<Var> {
        let [_, c, h, w] = g.shape(image);
        let e = self.config.input_extent;
        if c != 1 || h != e || w != e {
            return Err(Error::Input(format!(
                "discriminator expects 1x{e}x{e} images, got {c}x{h}x{w}"
            )));
        }
        let x = layers::conv(g, &self.store, pass, "disc.stem.conv", image, 2, 1)?;
        let x = layers::batchnorm(g, &mut self.store, pass, "disc.stem.bn", x)?;
        let mut x = g.relu(x);
        for s in 0..self.config.stage_widths.len() {
            for j in 0..self.config.blocks_per_stage[s] {
                let name = format!("disc.layer{}.{j}", s + 1);
                x = bottleneck_block(g, &mut self.store, pass, &name, x, j == 0)?;
            }
        }
        let x = layers::linear(g, &self.store, pass, "disc.fc1", x)?;
        let x = g.relu(x);
        let x = layers::linear(g, &self.store, pass, "disc.fc2", x)?;
        Ok(g.sigmoid(x))
    }
}
