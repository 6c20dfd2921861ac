//! Alternating adversarial training.
//!
//! Each step draws one batch of patches, runs `disc_steps_per_gen_step`
//! discriminator updates against the current fused batch, then one generator
//! update on content loss plus the adversarial term.

use std::path::Path;
use std::time::{Instant, SystemTime};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DiscScoring, TrainConfig};
use crate::data::{sample_patches, DatasetManifest, ImagePair, Split};
use crate::error::{Error, Result};
use crate::nn::{build_discriminator, build_generator, DiscriminatorParams, GeneratorParams, Pass};
use crate::objectives::{content_loss, disc_loss, gen_adv_loss, generator_total, LossReport};
use crate::tensor::checkpoint::{self, Record};
use crate::tensor::{Adam, AdamConfig, Element, Graph, Tensor, Var};

pub const CONFIG_RECORD: &str = "meta.config";

/// A stacked batch of co-located patches, `[N, 1, S, S]` each.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub visible: Tensor<f32>,
    pub infrared: Tensor<f32>,
}

impl Batch {
    pub fn from_pairs(pairs: &[&ImagePair]) -> Result<Self> {
        let vis: Vec<_> = pairs.iter().map(|p| p.visible.to_tensor()).collect();
        let ir: Vec<_> = pairs.iter().map(|p| p.infrared.to_tensor()).collect();
        Ok(Self {
            visible: Tensor::stack(&vis)?,
            infrared: Tensor::stack(&ir)?,
        })
    }
}

/// Cycles through a patch pool in seeded epoch permutations.
#[derive(Clone, Debug)]
struct BatchSampler {
    pool: Vec<ImagePair>,
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    fn new(pool: Vec<ImagePair>, seed: u64) -> Self {
        let order = (0..pool.len()).collect();
        let mut s = Self {
            pool,
            order,
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.order.shuffle(&mut s.rng);
        s
    }

    fn next(&mut self, n: usize) -> Result<Batch> {
        let mut picked = Vec::with_capacity(n);
        for _ in 0..n {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            picked.push(&self.pool[self.order[self.cursor]]);
            self.cursor += 1;
        }
        Batch::from_pairs(&picked)
    }
}

/// Cut every pair into training patches.
pub fn patch_pool(pairs: &[ImagePair], config: &TrainConfig) -> Result<Vec<ImagePair>> {
    if pairs.is_empty() {
        return Err(Error::Dataset("no training pairs".into()));
    }
    let mut pool = Vec::new();
    for p in pairs {
        pool.extend(sample_patches(p, &config.patch)?);
    }
    Ok(pool)
}

/// Per-step losses plus timing. Only the loss rows are part of the deterministic log.
#[derive(Clone, Debug)]
pub struct RunLog {
    pub config_echo: String,
    pub rows: Vec<(usize, LossReport)>,
    pub started: SystemTime,
    pub step_seconds: Vec<f64>,
}

impl RunLog {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", LossReport::CSV_HEADER);
        for (step, r) in &self.rows {
            s.push_str(&r.csv_row(*step));
            s.push('\n');
        }
        s
    }

    pub fn timing_csv(&self) -> String {
        let start = self
            .started
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let mut s = format!("# started_unix = {start}\nstep,seconds\n");
        for ((step, _), t) in self.rows.iter().zip(&self.step_seconds) {
            s.push_str(&format!("{step},{t}\n"));
        }
        s
    }
}

pub struct Trainer {
    pub config: TrainConfig,
    pub generator: GeneratorParams<f32>,
    pub discriminator: DiscriminatorParams<f32>,
    gen_opt: Adam<f32>,
    disc_opt: Adam<f32>,
    sampler: BatchSampler,
    step: usize,
    pub log: RunLog,
}

impl Trainer {
    /// Networks, optimizers and sampler are seeded from `config.seed`.
    pub fn new(config: &TrainConfig, pairs: &[ImagePair]) -> Result<Self> {
        config.validate()?;
        let generator = build_generator(&config.generator, config.seed)?;
        let discriminator = build_discriminator(&config.discriminator, config.seed.wrapping_add(1))?;
        let adam = |lr| AdamConfig {
            lr,
            ..AdamConfig::default()
        };
        let gen_opt = Adam::new(adam(config.gen_lr), &generator.store)?;
        let disc_opt = Adam::new(adam(config.disc_lr), &discriminator.store)?;
        let sampler = BatchSampler::new(patch_pool(pairs, config)?, config.seed.wrapping_add(2));
        Ok(Self {
            config: config.clone(),
            generator,
            discriminator,
            gen_opt,
            disc_opt,
            sampler,
            step: 0,
            log: RunLog {
                config_echo: config.to_text(),
                rows: Vec::new(),
                started: SystemTime::now(),
                step_seconds: Vec::new(),
            },
        })
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn next_batch(&mut self) -> Result<Batch> {
        self.sampler.next(self.config.batch_size)
    }

    /// One discriminator update. The generator runs with batch statistics but is not modified.
    pub fn disc_step(&mut self, batch: &Batch) -> Result<f64> {
        let mut g = Graph::new();
        let v = g.constant(batch.visible.clone());
        let i = g.constant(batch.infrared.clone());
        let f = self.generator.forward(&mut g, Pass::train_frozen(), v, i)?;
        let d_f = self.discriminator.forward(&mut g, Pass::train(), f)?;
        let d_v = self.discriminator.forward(&mut g, Pass::train(), v)?;
        let loss = disc_loss(&mut g, d_f, d_v)?;
        let value = g.item(loss).as_f64();
        if !value.is_finite() {
            return Ok(value);
        }
        g.backward(loss)?;
        self.discriminator.store.accumulate_grads(&g);
        self.disc_opt.step(&mut self.discriminator.store)?;
        Ok(value)
    }

    /// One generator update. Discriminator parameters and running statistics stay frozen.
    pub fn gen_step(&mut self, batch: &Batch) -> Result<LossReport> {
        let mut g = Graph::new();
        let v = g.constant(batch.visible.clone());
        let i = g.constant(batch.infrared.clone());
        let f = self.generator.forward(&mut g, Pass::train(), v, i)?;
        let terms = content_loss(&mut g, f, v, i, self.config.weights)?;
        let scoring = match self.config.disc_scoring {
            DiscScoring::BatchStats => Pass::train_frozen(),
            DiscScoring::RunningStats => Pass::eval(),
        };
        let d_f = self.discriminator.forward(&mut g, scoring, f)?;
        let adv = gen_adv_loss(&mut g, d_f, self.config.adversarial)?;
        let total = generator_total(&mut g, terms.content, adv)?;
        let item = |x: Var| g.item(x).as_f64();
        let report = LossReport {
            content: item(terms.content),
            mse_ir: item(terms.mse_ir),
            mse_vis: item(terms.mse_vis),
            tv: item(terms.tv),
            gen_adv: item(adv),
            disc: f64::NAN,
            generator_total: item(total),
        };
        if report.generator_total.is_finite() {
            g.backward(total)?;
            self.generator.store.accumulate_grads(&g);
            self.gen_opt.step(&mut self.generator.store)?;
        }
        Ok(report)
    }

    /// One full alternation. Aborts with [`Error::Numeric`] on any non-finite loss.
    pub fn step(&mut self) -> Result<LossReport> {
        let started = Instant::now();
        let step = self.step + 1;
        let batch = self.next_batch()?;
        let mut disc = 0.0;
        for _ in 0..self.config.disc_steps_per_gen_step {
            disc = self.disc_step(&batch)?;
            if !disc.is_finite() {
                return Err(Error::Numeric {
                    step,
                    detail: format!("discriminator loss = {disc}"),
                });
            }
        }
        let mut report = self.gen_step(&batch)?;
        report.disc = disc;
        if !report.is_finite() {
            return Err(Error::Numeric {
                step,
                detail: format!("{} = {}", LossReport::CSV_HEADER, report.csv_row(step)),
            });
        }
        self.step = step;
        self.log.rows.push((step, report));
        self.log.step_seconds.push(started.elapsed().as_secs_f64());
        Ok(report)
    }

    /// Generator and discriminator parameters plus the config echo.
    pub fn checkpoint_records(&self) -> Vec<Record> {
        let mut r = checkpoint::records_from_store(&self.generator.store);
        r.extend(checkpoint::records_from_store(&self.discriminator.store));
        r.push(Record::text(CONFIG_RECORD, &self.log.config_echo));
        r
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        checkpoint::save(path, &self.checkpoint_records())
    }
}

/// Run `config.steps` alternations in memory.
pub fn train(config: &TrainConfig, pairs: &[ImagePair]) -> Result<Trainer> {
    let mut t = Trainer::new(config, pairs)?;
    for _ in 0..config.steps {
        t.step()?;
    }
    Ok(t)
}

/// Train on the manifest's `train` split, writing logs and checkpoints into `out`.
///
/// Files: `config.txt`, `log.csv` (or `config.log`), `timing.csv`,
/// `step_NNNNNN.ffc` every `checkpoint_interval` steps and `final.ffc`.
/// On a numeric failure the log so far is written and no further checkpoint is saved.
pub fn train_to_dir(config: &TrainConfig, manifest: &DatasetManifest, out: &Path) -> Result<Trainer> {
    let pairs = manifest.load_split(Split::Train)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.txt"), config.to_text())?;
    let log_path = config.log.clone().unwrap_or_else(|| out.join("log.csv"));
    let mut t = Trainer::new(config, &pairs)?;
    let write_logs = |t: &Trainer| -> Result<()> {
        std::fs::write(&log_path, t.log.to_csv())?;
        std::fs::write(out.join("timing.csv"), t.log.timing_csv())?;
        Ok(())
    };
    for _ in 0..config.steps {
        if let Err(e) = t.step() {
            write_logs(&t)?;
            return Err(e);
        }
        let s = t.steps_done();
        if s % config.checkpoint_interval == 0 && s != config.steps {
            t.save_checkpoint(out.join(format!("step_{s:06}.ffc")))?;
        }
    }
    write_logs(&t)?;
    t.save_checkpoint(out.join("final.ffc"))?;
    Ok(t)
}

/// Restore the configuration and generator stored in a checkpoint.
pub fn load_generator(path: impl AsRef<Path>) -> Result<(TrainConfig, GeneratorParams<f32>)> {
    let records = checkpoint::load(path)?;
    let config = config_from_records(&records)?;
    let mut gen = build_generator(&config.generator, 0)?;
    checkpoint::restore_store(&mut gen.store, &records)?;
    Ok((config, gen))
}

/// Restore both networks from a checkpoint.
pub fn load_networks(
    path: impl AsRef<Path>,
) -> Result<(TrainConfig, GeneratorParams<f32>, DiscriminatorParams<f32>)> {
    let records = checkpoint::load(path)?;
    let config = config_from_records(&records)?;
    let mut gen = build_generator(&config.generator, 0)?;
    checkpoint::restore_store(&mut gen.store, &records)?;
    let mut disc = build_discriminator(&config.discriminator, 0)?;
    checkpoint::restore_store(&mut disc.store, &records)?;
    Ok((config, gen, disc))
}

fn config_from_records(records: &[Record]) -> Result<TrainConfig> {
    let rec = records
        .iter()
        .find(|r| r.name == CONFIG_RECORD)
        .ok_or_else(|| Error::Checkpoint(format!("no '{CONFIG_RECORD}' record")))?;
    TrainConfig::parse(&rec.as_text()?)
        .map_err(|e| Error::Checkpoint(format!("stored configuration is invalid: {e}")))
}
