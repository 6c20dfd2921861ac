//! Generator and discriminator objectives.
//!
//! Expectations are means over batch and pixels. Probabilities are clamped to
//! `[PROB_CLAMP, 1 - PROB_CLAMP]` before any logarithm.

use crate::error::{Error, Result};
use crate::tensor::{Element, Graph, Var};

pub const PROB_CLAMP: f64 = 1e-7;

/// Weights of the content loss: `alpha` scales the total-variation term,
/// `beta` balances infrared against visible reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
        }
    }
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = Self { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        Ok(())
    }
}

/// Which generator adversarial term to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AdversarialVariant {
    /// `mean(log(1 - D(F)))`, minimized as written.
    #[default]
    Saturating,
    /// `-mean(log(D(F)))`.
    NonSaturating,
}

/// Scalar loss values of one training step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossReport {
    pub content: f64,
    pub mse_ir: f64,
    pub mse_vis: f64,
    pub tv: f64,
    pub gen_adv: f64,
    pub disc: f64,
    pub generator_total: f64,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "step,disc,content,mse_ir,mse_vis,tv,gen_adv,generator_total";

    pub fn csv_row(&self, step: usize) -> String {
        format!(
            "{step},{},{},{},{},{},{},{}",
            self.disc, self.content, self.mse_ir, self.mse_vis, self.tv, self.gen_adv, self.generator_total
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.content,
            self.mse_ir,
            self.mse_vis,
            self.tv,
            self.gen_adv,
            self.disc,
            self.generator_total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Graph handles for each part of the content loss.
#[derive(Clone, Copy, Debug)]
pub struct ContentTerms {
    pub content: Var,
    pub mse_ir: Var,
    pub mse_vis: Var,
    pub tv: Var,
}

pub fn mse<T: Element>(g: &mut Graph<T>, a: Var, b: Var) -> Result<Var> {
    let d = g.sub(a, b)?;
    let sq = g.square(d);
    Ok(g.mean(sq))
}

/// Anisotropic total variation normalized by pixel count.
pub fn tv_norm<T: Element>(g: &mut Graph<T>, d: Var) -> Var {
    g.total_variation(d)
}

/// `beta*mse(f, i) + (1 - beta)*mse(f, v) + alpha*tv(f - v)`.
pub fn content_loss<T: Element>(
    g: &mut Graph<T>,
    f: Var,
    v: Var,
    i: Var,
    w: LossWeights,
) -> Result<ContentTerms> {
    w.validate()?;
    let mse_ir = mse(g, f, i)?;
    let mse_vis = mse(g, f, v)?;
    let diff = g.sub(f, v)?;
    let tv = tv_norm(g, diff);
    let a = g.scale(mse_ir, w.beta);
    let b = g.scale(mse_vis, 1.0 - w.beta);
    let c = g.scale(tv, w.alpha);
    let ab = g.add(a, b)?;
    let content = g.add(ab, c)?;
    Ok(ContentTerms {
        content,
        mse_ir,
        mse_vis,
        tv,
    })
}

fn clamp_prob<T: Element>(g: &mut Graph<T>, p: Var) -> Var {
    g.clamp(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `mean(log(1 - clamp(p)))`.
fn mean_log_complement<T: Element>(g: &mut Graph<T>, p: Var) -> Result<Var> {
    let p = clamp_prob(g, p);
    let neg = g.scale(p, -1.0);
    let q = g.add_scalar(neg, 1.0);
    let l = g.log(q)?;
    Ok(g.mean(l))
}

fn mean_log<T: Element>(g: &mut Graph<T>, p: Var) -> Result<Var> {
    let p = clamp_prob(g, p);
    let l = g.log(p)?;
    Ok(g.mean(l))
}

/// `-mean(log(1 - D(F))) - mean(log(D(V)))`.
pub fn disc_loss<T: Element>(g: &mut Graph<T>, d_fused: Var, d_visible: Var) -> Result<Var> {
    let fake = mean_log_complement(g, d_fused)?;
    let real = mean_log(g, d_visible)?;
    let s = g.add(fake, real)?;
    Ok(g.scale(s, -1.0))
}

/// Adversarial term of the generator loss.
pub fn gen_adv_loss<T: Element>(g: &mut Graph<T>, d_fused: Var, variant: AdversarialVariant) -> Result<Var> {
    match variant {
        AdversarialVariant::Saturating => mean_log_complement(g, d_fused),
        AdversarialVariant::NonSaturating => {
            let l = mean_log(g, d_fused)?;
            Ok(g.scale(l, -1.0))
        }
    }
}

pub fn generator_total<T: Element>(g: &mut Graph<T>, content: Var, gen_adv: Var) -> Result<Var> {
    g.add(content, gen_adv)
}
