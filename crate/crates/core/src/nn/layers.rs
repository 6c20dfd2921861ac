//! Named-parameter layer helpers shared by the generator and discriminator.
//!
//! Each `add_*` function registers parameters under a name prefix, and the
//! matching forward function looks them up again by that prefix. Conv and
//! linear weights get Kaiming-normal fan-in initialization, biases start at
//! zero, batchnorm starts at gamma = 1 / beta = 0 with running statistics
//! (0, 1).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::tensor::{BatchNormMode, Element, Graph, ParamKind, ParamStore, Tensor, Var};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// How a forward pass treats batchnorm and parameter gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pass {
    pub mode: BatchNormMode,
    /// Fold batch statistics into running statistics (train mode only).
    pub update_stats: bool,
    /// Record parameters as gradient-requiring leaves.
    pub param_grads: bool,
}

impl Pass {
    /// Training pass for the network being optimized.
    pub fn train() -> Self {
        Self {
            mode: BatchNormMode::Train,
            update_stats: true,
            param_grads: true,
        }
    }

    /// Batch statistics, but no running-stat updates and no parameter gradients.
    pub fn train_frozen() -> Self {
        Self {
            mode: BatchNormMode::Train,
            update_stats: false,
            param_grads: false,
        }
    }

    /// Running statistics and frozen parameters.
    pub fn eval() -> Self {
        Self {
            mode: BatchNormMode::Eval,
            update_stats: false,
            param_grads: false,
        }
    }

    pub fn with_param_grads(mut self, on: bool) -> Self {
        self.param_grads = on;
        self
    }
}

fn kaiming<T: Element, R: Rng>(rng: &mut R, shape: [usize; 4], fan_in: usize) -> Tensor<T> {
    let std = (2.0 / fan_in as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("finite std");
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::from_f64(normal.sample(rng))).collect();
    Tensor::new(shape, data).expect("shape matches")
}

/// Weight `(cout, cin, k, k)` at `{name}.w`, optional bias at `{name}.b`.
pub fn add_conv<T: Element, R: Rng>(
    store: &mut ParamStore<T>,
    rng: &mut R,
    name: &str,
    cin: usize,
    cout: usize,
    k: usize,
    bias: bool,
) -> Result<()> {
    store.insert(
        format!("{name}.w"),
        kaiming(rng, [cout, cin, k, k], cin * k * k),
        ParamKind::Trainable,
    )?;
    if bias {
        store.insert(format!("{name}.b"), Tensor::zeros([cout, 1, 1, 1]), ParamKind::Trainable)?;
    }
    Ok(())
}

/// Transposed-conv weight `(cin, cout, k, k)` at `{name}.w`, optional bias.
///
/// Each output of a stride-`s` transposed conv sums about `cin * k^2 / s^2`
/// inputs; that is the fan-in used for scaling.
#[allow(clippy::too_many_arguments)]
pub fn add_conv_transpose<T: Element, R: Rng>(
    store: &mut ParamStore<T>,
    rng: &mut R,
    name: &str,
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    bias: bool,
) -> Result<()> {
    let fan_in = (cin * k * k / (stride * stride).max(1)).max(1);
    store.insert(
        format!("{name}.w"),
        kaiming(rng, [cin, cout, k, k], fan_in),
        ParamKind::Trainable,
    )?;
    if bias {
        store.insert(format!("{name}.b"), Tensor::zeros([cout, 1, 1, 1]), ParamKind::Trainable)?;
    }
    Ok(())
}

pub fn add_batchnorm<T: Element>(store: &mut ParamStore<T>, name: &str, c: usize) -> Result<()> {
    store.insert(format!("{name}.gamma"), Tensor::full([c, 1, 1, 1], T::one()), ParamKind::Trainable)?;
    store.insert(format!("{name}.beta"), Tensor::zeros([c, 1, 1, 1]), ParamKind::Trainable)?;
    store.insert(format!("{name}.running_mean"), Tensor::zeros([c, 1, 1, 1]), ParamKind::Buffer)?;
    store.insert(
        format!("{name}.running_var"),
        Tensor::full([c, 1, 1, 1], T::one()),
        ParamKind::Buffer,
    )?;
    Ok(())
}

pub fn add_linear<T: Element, R: Rng>(
    store: &mut ParamStore<T>,
    rng: &mut R,
    name: &str,
    inputs: usize,
    outputs: usize,
) -> Result<()> {
    store.insert(
        format!("{name}.w"),
        kaiming(rng, [inputs, outputs, 1, 1], inputs),
        ParamKind::Trainable,
    )?;
    store.insert(format!("{name}.b"), Tensor::zeros([outputs, 1, 1, 1]), ParamKind::Trainable)?;
    Ok(())
}

fn optional_bias<T: Element>(
    g: &mut Graph<T>,
    store: &ParamStore<T>,
    pass: Pass,
    name: &str,
) -> Result<Option<Var>> {
    let b = format!("{name}.b");
    if store.get(&b).is_some() {
        Ok(Some(g.param(store, &b, pass.param_grads)?))
    } else {
        Ok(None)
    }
}

pub fn conv<T: Element>(
    g: &mut Graph<T>,
    store: &ParamStore<T>,
    pass: Pass,
    name: &str,
    x: Var,
    stride: usize,
    padding: usize,
) -> Result<Var> {
    let w = g.param(store, &format!("{name}.w"), pass.param_grads)?;
    let b = optional_bias(g, store, pass, name)?;
    g.conv2d(x, w, b, stride, padding)
}

pub fn conv_transpose<T: Element>(
    g: &mut Graph<T>,
    store: &ParamStore<T>,
    pass: Pass,
    name: &str,
    x: Var,
    stride: usize,
    padding: usize,
    output_padding: usize,
) -> Result<Var> {
    let w = g.param(store, &format!("{name}.w"), pass.param_grads)?;
    let b = optional_bias(g, store, pass, name)?;
    g.conv_transpose2d(x, w, b, stride, padding, output_padding)
}

/// Batchnorm, folding batch statistics into the running estimates when the
/// pass asks for it.
pub fn batchnorm<T: Element>(
    g: &mut Graph<T>,
    store: &mut ParamStore<T>,
    pass: Pass,
    name: &str,
    x: Var,
) -> Result<Var> {
    let gamma = g.param(store, &format!("{name}.gamma"), pass.param_grads)?;
    let beta = g.param(store, &format!("{name}.beta"), pass.param_grads)?;
    let rm_name = format!("{name}.running_mean");
    let rv_name = format!("{name}.running_var");
    let (y, stats) = {
        let rm = store.value(&rm_name)?.data();
        let rv = store.value(&rv_name)?.data();
        g.batchnorm2d(x, gamma, beta, Some((rm, rv)), pass.mode, BN_EPS)?
    };
    if let (true, Some((mean, var))) = (pass.update_stats, stats) {
        let m = T::from_f64(BN_MOMENTUM);
        let keep = T::one() - m;
        for (dst, src) in [(rm_name, mean), (rv_name, var)] {
            for (r, b) in store.value_mut(&dst)?.data_mut().iter_mut().zip(src) {
                *r = keep * *r + m * b;
            }
        }
    }
    Ok(y)
}

pub fn linear<T: Element>(
    g: &mut Graph<T>,
    store: &ParamStore<T>,
    pass: Pass,
    name: &str,
    x: Var,
) -> Result<Var> {
    let w = g.param(store, &format!("{name}.w"), pass.param_grads)?;
    let b = g.param(store, &format!("{name}.b"), pass.param_grads)?;
    g.fully_connected(x, w, b)
}

/// Agant layer: 1x1 convolution followed by batchnorm.
pub fn add_agant<T: Element, R: Rng>(
    store: &mut ParamStore<T>,
    rng: &mut R,
    name: &str,
    cin: usize,
    cout: usize,
) -> Result<()> {
    add_conv(store, rng, &format!("{name}.conv"), cin, cout, 1, false)?;
    add_batchnorm(store, &format!("{name}.bn"), cout)
}

pub fn agant<T: Element>(
    g: &mut Graph<T>,
    store: &mut ParamStore<T>,
    pass: Pass,
    name: &str,
    x: Var,
    stride: usize,
) -> Result<Var> {
    let y = conv(g, store, pass, &format!("{name}.conv"), x, stride, 0)?;
    batchnorm(g, store, pass, &format!("{name}.bn"), y)
}
