use std::collections::HashMap;

use super::conv::{
    conv2d_output_extent, conv_backward_input, conv_backward_weight, conv_forward,
    conv_transpose2d_output_extent, Geometry,
};
use super::param::ParamStore;
use super::{Element, Shape, Tensor};
use crate::error::{dim_err, Error, Result};

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchNormMode {
    /// Normalize with batch statistics.
    Train,
    /// Normalize with the supplied running statistics.
    Eval,
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Conv2d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: Geometry,
    },
    ConvTranspose2d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: Geometry,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<T>,
        inv_std: Vec<T>,
        mode: BatchNormMode,
    },
    Relu(Var),
    Sigmoid(Var),
    Linear {
        input: Var,
        weight: Var,
        bias: Var,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddScalar(Var),
    Clamp {
        input: Var,
        lo: T,
        hi: T,
    },
    Mean(Var),
    Abs(Var),
    Log(Var),
    Square(Var),
    TotalVariation(Var),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
    grad: Option<Vec<T>>,
}

/// A recording of one forward computation.
///
/// Values are appended in evaluation order, so reverse iteration is a valid
/// topological order for backpropagation. Parameters from a [`ParamStore`]
/// enter as named leaves via [`Graph::param`]; after [`Graph::backward`]
/// their gradients are folded back with [`ParamStore::accumulate_grads`].
pub struct Graph<T: Element> {
    nodes: Vec<Node<T>>,
    params: HashMap<String, Var>,
}

impl<T: Element> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn sigmoid<T: Element>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn sign<T: Element>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

fn add_into<T: Element>(dst: &mut Option<Vec<T>>, src: Vec<T>) {
    match dst {
        Some(d) => d.iter_mut().zip(src).for_each(|(a, b)| *a = *a + b),
        None => *dst = Some(src),
    }
}

impl<T: Element> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Record an input value.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    /// Bind a named parameter as a leaf. Repeated calls with the same name
    /// return the same handle, so fan-out accumulates correctly.
    pub fn param(&mut self, store: &ParamStore<T>, name: &str, requires_grad: bool) -> Result<Var> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let p = store
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown parameter '{name}'")))?;
        let v = self.leaf(p.value.clone(), requires_grad && p.kind.is_trainable());
        self.params.insert(name.to_owned(), v);
        Ok(v)
    }

    pub(crate) fn bound_params(&self) -> impl Iterator<Item = (&str, Var)> {
        self.params.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self, v: Var) -> T {
        self.nodes[v.0].value.data()[0]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient accumulated by the last [`Graph::backward`] call.
    pub fn grad(&self, v: Var) -> Option<Tensor<T>> {
        let n = &self.nodes[v.0];
        n.grad
            .as_ref()
            .map(|g| Tensor::new(n.value.shape(), g.clone()).expect("gradient shape"))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    // ---------------------------------------------------------------- ops

    /// Cross-correlation with zero padding. `weight` is `(C_out, C_in, k, k)`.
    pub fn conv2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let xs = self.shape(input);
        let ws = self.shape(weight);
        let [n, cin, h, w] = xs;
        let [cout, wcin, kh, kw] = ws;
        if wcin != cin {
            return Err(dim_err!(
                "conv2d weight {:?} expects {} input channels, got {:?}",
                ws,
                wcin,
                xs
            ));
        }
        if kh != kw {
            return Err(dim_err!("conv2d kernel must be square, got {:?}", ws));
        }
        self.check_bias(bias, cout)?;
        let oh = conv2d_output_extent(h, kh, stride, padding)?;
        let ow = conv2d_output_extent(w, kw, stride, padding)?;
        let geom = Geometry { stride, padding };
        let mut y = conv_forward(
            self.value(input).data(),
            xs,
            self.value(weight).data(),
            ws,
            geom,
            (oh, ow),
        );
        if let Some(b) = bias {
            add_channel_bias(&mut y, self.value(b).data(), oh * ow);
        }
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let rg = self.needs(&deps);
        let value = Tensor::new([n, cout, oh, ow], y)?;
        Ok(self.push(
            value,
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
            },
            rg,
        ))
    }

    /// Transposed convolution, the adjoint of [`Graph::conv2d`] with the same
    /// geometry. `weight` is `(C_in, C_out, k, k)`.
    pub fn conv_transpose2d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
        output_padding: usize,
    ) -> Result<Var> {
        let xs = self.shape(input);
        let ws = self.shape(weight);
        let [n, cin, h, w] = xs;
        let [wcin, cout, kh, kw] = ws;
        if wcin != cin {
            return Err(dim_err!(
                "conv_transpose2d weight {:?} expects {} input channels, got {:?}",
                ws,
                wcin,
                xs
            ));
        }
        if kh != kw {
            return Err(dim_err!("conv_transpose2d kernel must be square, got {:?}", ws));
        }
        self.check_bias(bias, cout)?;
        let oh = conv_transpose2d_output_extent(h, kh, stride, padding, output_padding)?;
        let ow = conv_transpose2d_output_extent(w, kw, stride, padding, output_padding)?;
        let geom = Geometry { stride, padding };
        let ys = [n, cout, oh, ow];
        let mut y = conv_backward_input(
            self.value(input).data(),
            xs,
            self.value(weight).data(),
            ws,
            geom,
            ys,
        );
        if let Some(b) = bias {
            add_channel_bias(&mut y, self.value(b).data(), oh * ow);
        }
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let rg = self.needs(&deps);
        let value = Tensor::new(ys, y)?;
        Ok(self.push(
            value,
            Op::ConvTranspose2d {
                input,
                weight,
                bias,
                geom,
            },
            rg,
        ))
    }

    fn check_bias(&self, bias: Option<Var>, channels: usize) -> Result<()> {
        if let Some(b) = bias {
            if self.value(b).len() != channels {
                return Err(dim_err!(
                    "bias of length {} for {} output channels",
                    self.value(b).len(),
                    channels
                ));
            }
        }
        Ok(())
    }

    /// Per-channel batch normalization.
    ///
    /// In [`BatchNormMode::Train`] the returned statistics are the batch mean
    /// and unbiased batch variance per channel, for the caller to fold into
    /// its running estimates. In eval mode `running` must be supplied and
    /// `None` statistics are returned.
    pub fn batchnorm2d(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        running: Option<(&[T], &[T])>,
        mode: BatchNormMode,
        eps: f64,
    ) -> Result<(Var, Option<(Vec<T>, Vec<T>)>)> {
        if eps <= 0.0 {
            return Err(Error::Config("batchnorm eps must be positive".into()));
        }
        let xs = self.shape(input);
        let [n, c, h, w] = xs;
        if self.value(gamma).len() != c || self.value(beta).len() != c {
            return Err(dim_err!(
                "batchnorm affine parameters of length {}/{} for {} channels",
                self.value(gamma).len(),
                self.value(beta).len(),
                c
            ));
        }
        let hw = h * w;
        let count = n * hw;
        let eps_t = T::from_f64(eps);
        let x = self.value(input).data();
        let (mean, inv_std, stats) = match mode {
            BatchNormMode::Train => {
                let mut mean = vec![T::zero(); c];
                let mut var = vec![T::zero(); c];
                for ch in 0..c {
                    let mut s = 0.0f64;
                    for b in 0..n {
                        let o = (b * c + ch) * hw;
                        s += x[o..o + hw].iter().map(|v| v.as_f64()).sum::<f64>();
                    }
                    let m = s / count as f64;
                    let mut ss = 0.0f64;
                    for b in 0..n {
                        let o = (b * c + ch) * hw;
                        ss += x[o..o + hw]
                            .iter()
                            .map(|v| (v.as_f64() - m).powi(2))
                            .sum::<f64>();
                    }
                    mean[ch] = T::from_f64(m);
                    var[ch] = T::from_f64(ss / count as f64);
                }
                let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps_t).sqrt()).collect();
                let unbiased: Vec<T> = if count > 1 {
                    let f = T::from_f64(count as f64 / (count - 1) as f64);
                    var.iter().map(|&v| v * f).collect()
                } else {
                    var.clone()
                };
                (mean.clone(), inv_std, Some((mean, unbiased)))
            }
            BatchNormMode::Eval => {
                let (rm, rv) = running.ok_or_else(|| {
                    Error::Usage("eval-mode batchnorm requires running statistics".into())
                })?;
                if rm.len() != c || rv.len() != c {
                    return Err(dim_err!("running statistics length does not match {c} channels"));
                }
                let inv_std = rv.iter().map(|&v| T::one() / (v + eps_t).sqrt()).collect();
                (rm.to_vec(), inv_std, None)
            }
        };
        let g = self.value(gamma).data();
        let bt = self.value(beta).data();
        let mut y = vec![T::zero(); x.len()];
        for b in 0..n {
            for ch in 0..c {
                let o = (b * c + ch) * hw;
                let (m, is, gg, bb) = (mean[ch], inv_std[ch], g[ch], bt[ch]);
                for (yv, &xv) in y[o..o + hw].iter_mut().zip(&x[o..o + hw]) {
                    *yv = gg * ((xv - m) * is) + bb;
                }
            }
        }
        let rg = self.needs(&[input, gamma, beta]);
        let value = Tensor::new(xs, y)?;
        let v = self.push(
            value,
            Op::BatchNorm {
                input,
                gamma,
                beta,
                mean,
                inv_std,
                mode,
            },
            rg,
        );
        Ok((v, stats))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.map(x, |v| if v < T::zero() { T::zero() } else { v });
        let rg = self.needs(&[x]);
        self.push(value, Op::Relu(x), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.map(x, sigmoid);
        let rg = self.needs(&[x]);
        self.push(value, Op::Sigmoid(x), rg)
    }

    /// Affine map of each batch row: the input is flattened to `N x D`,
    /// `weight` is `(D, M, 1, 1)` and `bias` has `M` entries. Output is `(N, M, 1, 1)`.
    pub fn fully_connected(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let [n, c, h, w] = self.shape(input);
        let d = c * h * w;
        let [wd, m, a, b] = self.shape(weight);
        if wd != d || a != 1 || b != 1 {
            return Err(dim_err!(
                "fully_connected weight {:?} does not accept {} features",
                self.shape(weight),
                d
            ));
        }
        if self.value(bias).len() != m {
            return Err(dim_err!("fully_connected bias length {} for {} outputs", self.value(bias).len(), m));
        }
        let x = self.value(input).data();
        let wt = self.value(weight).data();
        let bs = self.value(bias).data();
        let mut y = vec![T::zero(); n * m];
        for r in 0..n {
            let yrow = &mut y[r * m..(r + 1) * m];
            yrow.copy_from_slice(bs);
            for (k, &xv) in x[r * d..(r + 1) * d].iter().enumerate() {
                if xv == T::zero() {
                    continue;
                }
                for (yv, &wv) in yrow.iter_mut().zip(&wt[k * m..(k + 1) * m]) {
                    *yv = *yv + xv * wv;
                }
            }
        }
        let rg = self.needs(&[input, weight, bias]);
        let value = Tensor::new([n, m, 1, 1], y)?;
        Ok(self.push(value, Op::Linear { input, weight, bias }, rg))
    }

    fn binary(&mut self, a: Var, b: Var, what: &str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(dim_err!("{what} of {:?} and {:?}", sa, sb));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(sa, data)
    }

    fn map(&self, x: Var, f: impl Fn(T) -> T) -> Tensor<T> {
        let t = self.value(x);
        Tensor::new(t.shape(), t.data().iter().map(|&v| f(v)).collect()).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary(a, b, "add", |x, y| x + y)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary(a, b, "subtract", |x, y| x - y)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary(a, b, "multiply", |x, y| x * y)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let f = T::from_f64(factor);
        let value = self.map(x, |v| v * f);
        let rg = self.needs(&[x]);
        self.push(value, Op::Scale(x, f), rg)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let c = T::from_f64(c);
        let value = self.map(x, |v| v + c);
        let rg = self.needs(&[x]);
        self.push(value, Op::AddScalar(x), rg)
    }

    /// Clamp into `[lo, hi]`; the gradient is zero outside the interval.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let (lo, hi) = (T::from_f64(lo), T::from_f64(hi));
        // NaN passes through so divergence stays visible downstream.
        let value = self.map(x, |v| if v < lo { lo } else if v > hi { hi } else { v });
        let rg = self.needs(&[x]);
        self.push(value, Op::Clamp { input: x, lo, hi }, rg)
    }

    /// Mean of all elements as a `[1,1,1,1]` scalar.
    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s: f64 = t.data().iter().map(|v| v.as_f64()).sum();
        let value = Tensor::scalar(T::from_f64(s / t.len() as f64));
        let rg = self.needs(&[x]);
        self.push(value, Op::Mean(x), rg)
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let value = self.map(x, |v| v.abs());
        let rg = self.needs(&[x]);
        self.push(value, Op::Abs(x), rg)
    }

    /// Natural logarithm; every entry must be strictly positive. NaN propagates.
    pub fn log(&mut self, x: Var) -> Result<Var> {
        if let Some(bad) = self.value(x).data().iter().find(|v| **v <= T::zero()) {
            return Err(Error::Input(format!(
                "log of non-positive value {:?}; clamp probabilities before taking logs",
                bad
            )));
        }
        let value = self.map(x, |v| v.ln());
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::Log(x), rg))
    }

    pub fn square(&mut self, x: Var) -> Var {
        let value = self.map(x, |v| v * v);
        let rg = self.needs(&[x]);
        self.push(value, Op::Square(x), rg)
    }

    /// Anisotropic total variation: the sum of absolute horizontal and
    /// vertical neighbour differences over every image plane, divided by the
    /// total number of pixels (`N*C*H*W`).
    pub fn total_variation(&mut self, x: Var) -> Var {
        let [n, c, h, w] = self.shape(x);
        let d = self.value(x).data();
        let mut s = 0.0f64;
        for p in 0..n * c {
            let plane = &d[p * h * w..(p + 1) * h * w];
            for r in 0..h {
                for col in 0..w {
                    let v = plane[r * w + col].as_f64();
                    if col + 1 < w {
                        s += (plane[r * w + col + 1].as_f64() - v).abs();
                    }
                    if r + 1 < h {
                        s += (plane[(r + 1) * w + col].as_f64() - v).abs();
                    }
                }
            }
        }
        let value = Tensor::scalar(T::from_f64(s / (n * c * h * w) as f64));
        let rg = self.needs(&[x]);
        self.push(value, Op::TotalVariation(x), rg)
    }

    // ----------------------------------------------------------- backward

    /// Populate `grad` for every node reachable from `loss` that requires
    /// gradients. Gradients from earlier calls are discarded.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.nodes[loss.0].grad = Some(vec![T::one()]);
        for idx in (0..=loss.0).rev() {
            let Some(gy) = self.nodes[idx].grad.take() else {
                continue;
            };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let contributions = self.local_grads(idx, &gy);
            self.nodes[idx].grad = Some(gy);
            for (v, g) in contributions {
                if self.nodes[v.0].requires_grad {
                    add_into(&mut self.nodes[v.0].grad, g);
                }
            }
        }
        Ok(())
    }

    fn local_grads(&self, idx: usize, gy: &[T]) -> Vec<(Var, Vec<T>)> {
        let node = &self.nodes[idx];
        let y = node.value.data();
        let ys = node.value.shape();
        let rg = |v: Var| self.nodes[v.0].requires_grad;
        let val = |v: Var| self.nodes[v.0].value.data();
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
            } => {
                let xs = self.shape(*input);
                let ws = self.shape(*weight);
                if rg(*input) {
                    out.push((*input, conv_backward_input(gy, ys, val(*weight), ws, *geom, xs)));
                }
                if rg(*weight) {
                    out.push((*weight, conv_backward_weight(val(*input), xs, gy, ys, *geom, ws)));
                }
                if let Some(b) = bias.filter(|b| rg(*b)) {
                    out.push((b, channel_sums(gy, ys)));
                }
            }
            Op::ConvTranspose2d {
                input,
                weight,
                bias,
                geom,
            } => {
                let xs = self.shape(*input);
                let ws = self.shape(*weight);
                if rg(*input) {
                    let gx = conv_forward(gy, ys, val(*weight), ws, *geom, (xs[2], xs[3]));
                    out.push((*input, gx));
                }
                if rg(*weight) {
                    // The transpose op is conv2d's input-adjoint with the
                    // roles of input and output swapped.
                    out.push((*weight, conv_backward_weight(gy, ys, val(*input), xs, *geom, ws)));
                }
                if let Some(b) = bias.filter(|b| rg(*b)) {
                    out.push((b, channel_sums(gy, ys)));
                }
            }
            Op::BatchNorm {
                input,
                gamma,
                beta,
                mean,
                inv_std,
                mode,
            } => {
                let [n, c, h, w] = ys;
                let hw = h * w;
                let count = T::from_f64((n * hw) as f64);
                let x = val(*input);
                let g = val(*gamma);
                let mut dgamma = vec![T::zero(); c];
                let mut dbeta = vec![T::zero(); c];
                for ch in 0..c {
                    for b in 0..n {
                        let o = (b * c + ch) * hw;
                        for k in o..o + hw {
                            let xhat = (x[k] - mean[ch]) * inv_std[ch];
                            dgamma[ch] = dgamma[ch] + gy[k] * xhat;
                            dbeta[ch] = dbeta[ch] + gy[k];
                        }
                    }
                }
                if rg(*input) {
                    let mut dx = vec![T::zero(); x.len()];
                    for ch in 0..c {
                        let scale = g[ch] * inv_std[ch];
                        // train: dx = g*is/M * (M*dy - sum(dy) - xhat*sum(dy*xhat))
                        let (sum_dy, sum_dy_xhat) = match mode {
                            BatchNormMode::Train => (dbeta[ch] / count, dgamma[ch] / count),
                            BatchNormMode::Eval => (T::zero(), T::zero()),
                        };
                        for b in 0..n {
                            let o = (b * c + ch) * hw;
                            for k in o..o + hw {
                                let xhat = (x[k] - mean[ch]) * inv_std[ch];
                                dx[k] = scale * (gy[k] - sum_dy - xhat * sum_dy_xhat);
                            }
                        }
                    }
                    out.push((*input, dx));
                }
                if rg(*gamma) {
                    out.push((*gamma, dgamma));
                }
                if rg(*beta) {
                    out.push((*beta, dbeta));
                }
            }
            Op::Relu(x) => {
                let g = val(*x)
                    .iter()
                    .zip(gy)
                    .map(|(&xv, &g)| if xv > T::zero() { g } else { T::zero() })
                    .collect();
                out.push((*x, g));
            }
            Op::Sigmoid(x) => {
                let g = y.iter().zip(gy).map(|(&s, &g)| g * s * (T::one() - s)).collect();
                out.push((*x, g));
            }
            Op::Linear {
                input,
                weight,
                bias,
            } => {
                let xs = self.shape(*input);
                let n = xs[0];
                let d = xs[1] * xs[2] * xs[3];
                let m = ys[1];
                let x = val(*input);
                let wt = val(*weight);
                if rg(*input) {
                    let mut gx = vec![T::zero(); n * d];
                    for r in 0..n {
                        let grow = &gy[r * m..(r + 1) * m];
                        for k in 0..d {
                            gx[r * d + k] = wt[k * m..(k + 1) * m]
                                .iter()
                                .zip(grow)
                                .fold(T::zero(), |a, (&w, &g)| a + w * g);
                        }
                    }
                    out.push((*input, gx));
                }
                if rg(*weight) {
                    let mut gw = vec![T::zero(); d * m];
                    for r in 0..n {
                        let grow = &gy[r * m..(r + 1) * m];
                        for k in 0..d {
                            let xv = x[r * d + k];
                            for (gwv, &g) in gw[k * m..(k + 1) * m].iter_mut().zip(grow) {
                                *gwv = *gwv + xv * g;
                            }
                        }
                    }
                    out.push((*weight, gw));
                }
                if rg(*bias) {
                    let mut gb = vec![T::zero(); m];
                    for r in 0..n {
                        for j in 0..m {
                            gb[j] = gb[j] + gy[r * m + j];
                        }
                    }
                    out.push((*bias, gb));
                }
            }
            Op::Add(a, b) => {
                out.push((*a, gy.to_vec()));
                out.push((*b, gy.to_vec()));
            }
            Op::Sub(a, b) => {
                out.push((*a, gy.to_vec()));
                out.push((*b, gy.iter().map(|&g| -g).collect()));
            }
            Op::Mul(a, b) => {
                out.push((*a, gy.iter().zip(val(*b)).map(|(&g, &v)| g * v).collect()));
                out.push((*b, gy.iter().zip(val(*a)).map(|(&g, &v)| g * v).collect()));
            }
            Op::Scale(x, f) => out.push((*x, gy.iter().map(|&g| g * *f).collect())),
            Op::AddScalar(x) => out.push((*x, gy.to_vec())),
            Op::Clamp { input, lo, hi } => {
                let g = val(*input)
                    .iter()
                    .zip(gy)
                    .map(|(&v, &g)| if v < *lo || v > *hi { T::zero() } else { g })
                    .collect();
                out.push((*input, g));
            }
            Op::Mean(x) => {
                let len = val(*x).len();
                let g = gy[0] / T::from_f64(len as f64);
                out.push((*x, vec![g; len]));
            }
            Op::Abs(x) => {
                let g = val(*x).iter().zip(gy).map(|(&v, &g)| g * sign(v)).collect();
                out.push((*x, g));
            }
            Op::Log(x) => {
                let g = val(*x).iter().zip(gy).map(|(&v, &g)| g / v).collect();
                out.push((*x, g));
            }
            Op::Square(x) => {
                let two = T::from_f64(2.0);
                let g = val(*x).iter().zip(gy).map(|(&v, &g)| g * two * v).collect();
                out.push((*x, g));
            }
            Op::TotalVariation(x) => {
                let [n, c, h, w] = self.shape(*x);
                let d = val(*x);
                let scale = gy[0] / T::from_f64((n * c * h * w) as f64);
                let mut g = vec![T::zero(); d.len()];
                for p in 0..n * c {
                    let o = p * h * w;
                    for r in 0..h {
                        for col in 0..w {
                            let k = o + r * w + col;
                            if col + 1 < w {
                                let s = sign(d[k + 1] - d[k]) * scale;
                                g[k + 1] = g[k + 1] + s;
                                g[k] = g[k] - s;
                            }
                            if r + 1 < h {
                                let s = sign(d[k + w] - d[k]) * scale;
                                g[k + w] = g[k + w] + s;
                                g[k] = g[k] - s;
                            }
                        }
                    }
                }
                out.push((*x, g));
            }
        }
        out
    }
}

fn add_channel_bias<T: Element>(y: &mut [T], bias: &[T], plane: usize) {
    let c = bias.len();
    for (p, chunk) in y.chunks_mut(plane).enumerate() {
        let b = bias[p % c];
        chunk.iter_mut().for_each(|v| *v = *v + b);
    }
}

fn channel_sums<T: Element>(gy: &[T], ys: Shape) -> Vec<T> {
    let [_, c, h, w] = ys;
    let mut out = vec![T::zero(); c];
    for (p, chunk) in gy.chunks(h * w).enumerate() {
        out[p % c] = out[p % c] + chunk.iter().copied().fold(T::zero(), |a, b| a + b);
    }
    out
}
