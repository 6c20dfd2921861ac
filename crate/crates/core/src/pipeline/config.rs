//! Line-oriented `key = value` training configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::PatchSpec;
use crate::error::{Error, Result};
use crate::nn::{DiscriminatorConfig, GeneratorConfig, LatentFusion};
use crate::objectives::{AdversarialVariant, LossWeights};

/// Batchnorm statistics the discriminator uses when scoring fused images for the generator update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiscScoring {
    /// Statistics of the scored batch, as in the discriminator's own updates.
    #[default]
    BatchStats,
    /// Running statistics, as at inference.
    RunningStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub steps: usize,
    pub batch_size: usize,
    pub gen_lr: f64,
    pub disc_lr: f64,
    pub disc_steps_per_gen_step: usize,
    pub weights: LossWeights,
    pub adversarial: AdversarialVariant,
    pub disc_scoring: DiscScoring,
    pub patch: PatchSpec,
    /// Steps between intermediate checkpoints; the final checkpoint is always written.
    pub checkpoint_interval: usize,
    /// Loss log destination; defaults to `log.csv` in the output directory.
    pub log: Option<PathBuf>,
    /// Fraction of manifest pairs held out for evaluation and grid selection.
    pub eval_fraction: f64,
    pub generator: GeneratorConfig,
    /// `input_extent` always follows the patch size.
    pub discriminator: DiscriminatorConfig,
    /// Dataset root and output directory, used when not given on the command line.
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let patch = PatchSpec::default();
        Self {
            seed: 0,
            steps: 200,
            batch_size: 8,
            gen_lr: 1e-4,
            disc_lr: 1e-4,
            disc_steps_per_gen_step: 1,
            weights: LossWeights::default(),
            adversarial: AdversarialVariant::Saturating,
            disc_scoring: DiscScoring::BatchStats,
            patch,
            checkpoint_interval: 100,
            log: None,
            eval_fraction: 0.25,
            generator: GeneratorConfig::default(),
            discriminator: DiscriminatorConfig {
                input_extent: patch.size,
                ..DiscriminatorConfig::default()
            },
            data: None,
            out: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

fn parse_array4(key: &str, v: &str) -> Result<[usize; 4]> {
    parse_list(key, v)?
        .try_into()
        .map_err(|_| Error::Config(format!("{key}: expected 4 comma-separated values")))
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl TrainConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "steps" => self.steps = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "gen_lr" => self.gen_lr = parse_num(key, v)?,
            "disc_lr" => self.disc_lr = parse_num(key, v)?,
            "disc_steps_per_gen_step" => self.disc_steps_per_gen_step = parse_num(key, v)?,
            "alpha" => self.weights.alpha = parse_num(key, v)?,
            "beta" => self.weights.beta = parse_num(key, v)?,
            "adversarial" => {
                self.adversarial = match v {
                    "saturating" => AdversarialVariant::Saturating,
                    "non_saturating" => AdversarialVariant::NonSaturating,
                    _ => return Err(Error::Config(format!("{key}: unknown variant {v:?}"))),
                }
            }
            "disc_scoring" => {
                self.disc_scoring = match v {
                    "batch" => DiscScoring::BatchStats,
                    "running" => DiscScoring::RunningStats,
                    _ => return Err(Error::Config(format!("{key}: expected batch or running, got {v:?}"))),
                }
            }
            "patch_size" => {
                self.patch.size = parse_num(key, v)?;
                self.discriminator.input_extent = self.patch.size;
            }
            "patch_stride" => self.patch.stride = parse_num(key, v)?,
            "patch_seed" => self.patch.seed = parse_num(key, v)?,
            "checkpoint_interval" => self.checkpoint_interval = parse_num(key, v)?,
            "log" => self.log = Some(PathBuf::from(v)),
            "eval_fraction" => self.eval_fraction = parse_num(key, v)?,
            "data" => self.data = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "gen.stem_channels" => self.generator.stem_channels = parse_num(key, v)?,
            "gen.stage_widths" => {
                let w = parse_array4(key, v)?;
                self.generator.stage_widths = w;
                self.generator.decoder_widths = [w[3], w[2], w[1], w[0]];
            }
            "gen.blocks" => self.generator.blocks_per_stage = parse_array4(key, v)?,
            "gen.expansion" => self.generator.bottleneck_expansion = parse_num(key, v)?,
            "gen.latent_fusion" => {
                self.generator.latent_fusion = match v {
                    "sum" => LatentFusion::Sum,
                    "average" => LatentFusion::Average,
                    _ => return Err(Error::Config(format!("{key}: unknown mode {v:?}"))),
                }
            }
            "gen.fused_feed_forward" => self.generator.fused_feed_forward = parse_bool(key, v)?,
            "disc.stem_channels" => self.discriminator.stem_channels = parse_num(key, v)?,
            "disc.stage_widths" => self.discriminator.stage_widths = parse_list(key, v)?,
            "disc.blocks" => self.discriminator.blocks_per_stage = parse_list(key, v)?,
            "disc.hidden" => self.discriminator.hidden = parse_num(key, v)?,
            "disc.expansion" => self.discriminator.bottleneck_expansion = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parse config text over the defaults. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            c.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("steps", self.steps),
            ("batch_size", self.batch_size),
            ("disc_steps_per_gen_step", self.disc_steps_per_gen_step),
            ("checkpoint_interval", self.checkpoint_interval),
        ] {
            if n == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for (name, lr) in [("gen_lr", self.gen_lr), ("disc_lr", self.disc_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {lr}")));
            }
        }
        if !(0.0..1.0).contains(&self.eval_fraction) {
            return Err(Error::Config(format!(
                "eval_fraction must be in [0, 1), got {}",
                self.eval_fraction
            )));
        }
        self.weights.validate()?;
        self.generator.validate()?;
        self.patch.validate(self.generator.input_multiple)?;
        if self.discriminator.input_extent != self.patch.size {
            return Err(Error::Config(
                "discriminator input extent must equal the patch size".into(),
            ));
        }
        self.discriminator.validate()
    }

    /// Canonical echo: every key, one per line, in a fixed order. Parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("steps", self.steps.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("gen_lr", self.gen_lr.to_string());
        kv("disc_lr", self.disc_lr.to_string());
        kv("disc_steps_per_gen_step", self.disc_steps_per_gen_step.to_string());
        kv("alpha", self.weights.alpha.to_string());
        kv("beta", self.weights.beta.to_string());
        kv(
            "adversarial",
            match self.adversarial {
                AdversarialVariant::Saturating => "saturating",
                AdversarialVariant::NonSaturating => "non_saturating",
            }
            .into(),
        );
        kv(
            "disc_scoring",
            match self.disc_scoring {
                DiscScoring::BatchStats => "batch",
                DiscScoring::RunningStats => "running",
            }
            .into(),
        );
        kv("patch_size", self.patch.size.to_string());
        kv("patch_stride", self.patch.stride.to_string());
        kv("patch_seed", self.patch.seed.to_string());
        kv("checkpoint_interval", self.checkpoint_interval.to_string());
        if let Some(p) = &self.log {
            kv("log", p.display().to_string());
        }
        kv("eval_fraction", self.eval_fraction.to_string());
        if let Some(p) = &self.data {
            kv("data", p.display().to_string());
        }
        if let Some(p) = &self.out {
            kv("out", p.display().to_string());
        }
        let g = &self.generator;
        kv("gen.stem_channels", g.stem_channels.to_string());
        kv("gen.stage_widths", join(&g.stage_widths));
        kv("gen.blocks", join(&g.blocks_per_stage));
        kv("gen.expansion", g.bottleneck_expansion.to_string());
        kv(
            "gen.latent_fusion",
            match g.latent_fusion {
                LatentFusion::Sum => "sum",
                LatentFusion::Average => "average",
            }
            .into(),
        );
        kv("gen.fused_feed_forward", g.fused_feed_forward.to_string());
        let d = &self.discriminator;
        kv("disc.stem_channels", d.stem_channels.to_string());
        kv("disc.stage_widths", join(&d.stage_widths));
        kv("disc.blocks", join(&d.blocks_per_stage));
        kv("disc.hidden", d.hidden.to_string());
        kv("disc.expansion", d.bottleneck_expansion.to_string());
        s
    }
}
