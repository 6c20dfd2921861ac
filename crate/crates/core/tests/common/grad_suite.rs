//! Central finite-difference checks for every differentiable operation, the
//! losses, and both full networks.

use fforge::nn::{build_discriminator, build_generator, DiscriminatorConfig, GeneratorConfig, Pass};
use fforge::objectives::{self, AdversarialVariant, LossWeights};
use fforge::tensor::gradcheck::{max_coordinate_error, relative_error, STEP};
use fforge::tensor::{BatchNormMode, Graph, ParamStore, Tensor, Var};
use rand::Rng;

pub const TOLERANCE: f64 = 1e-4;

type Build = dyn Fn(&mut Graph<f64>, &[Var]) -> Var;

/// Worst relative error of `d build / d input_j` over all inputs and coordinates.
fn check(inputs: &[Tensor<f64>], build: &Build) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let out = build(&mut g, &vars);
    g.backward(out).unwrap();
    let mut worst: f64 = 0.0;
    for (j, x) in inputs.iter().enumerate() {
        let analytic = g.grad(vars[j]).unwrap_or_else(|| Tensor::zeros(x.shape()));
        let mut f = |probe: &Tensor<f64>| {
            let mut h = Graph::new();
            let vs: Vec<Var> = inputs
                .iter()
                .enumerate()
                .map(|(k, t)| h.constant(if k == j { probe.clone() } else { t.clone() }))
                .collect();
            let o = build(&mut h, &vs);
            h.item(o)
        };
        worst = worst.max(max_coordinate_error(&mut f, x, &analytic, None));
    }
    worst
}

/// `mean(y * probe)` for a fixed random probe, making any tensor op scalar.
fn project(g: &mut Graph<f64>, y: Var, seed: u64) -> Var {
    let mut r = super::rng(seed);
    let probe = super::random_tensor(&mut r, g.shape(y));
    let p = g.constant(probe);
    let m = g.mul(y, p).unwrap();
    g.mean(m)
}

fn rand_t(r: &mut impl Rng, shape: [usize; 4]) -> Tensor<f64> {
    super::random_tensor(r, shape)
}

fn probabilities(r: &mut impl Rng, n: usize) -> Tensor<f64> {
    Tensor::new([n, 1, 1, 1], (0..n).map(|_| r.random_range(0.05..0.95)).collect()).unwrap()
}

fn positive(r: &mut impl Rng, shape: [usize; 4]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| r.random_range(0.2..2.0)).collect()).unwrap()
}

pub fn op_cases() -> Vec<(&'static str, f64)> {
    let mut r = super::rng(2024);
    let x = rand_t(&mut r, [1, 2, 6, 6]);
    let x2 = rand_t(&mut r, [1, 2, 6, 6]);
    let mut out = Vec::new();
    let mut run = |name: &'static str, inputs: Vec<Tensor<f64>>, build: &Build| {
        out.push((name, check(&inputs, build)));
    };

    run("conv2d", vec![x.clone(), rand_t(&mut r, [3, 2, 3, 3]), rand_t(&mut r, [3, 1, 1, 1])], &|g, v| {
        let y = g.conv2d(v[0], v[1], Some(v[2]), 2, 1).unwrap();
        project(g, y, 1)
    });
    run("conv_transpose2d", vec![x.clone(), rand_t(&mut r, [2, 3, 3, 3]), rand_t(&mut r, [3, 1, 1, 1])], &|g, v| {
        let y = g.conv_transpose2d(v[0], v[1], Some(v[2]), 2, 1, 1).unwrap();
        project(g, y, 2)
    });
    run("batchnorm2d", vec![rand_t(&mut r, [2, 2, 6, 6]), rand_t(&mut r, [2, 1, 1, 1]), rand_t(&mut r, [2, 1, 1, 1])], &|g, v| {
        let (y, _) = g.batchnorm2d(v[0], v[1], v[2], None, BatchNormMode::Train, 1e-5).unwrap();
        project(g, y, 3)
    });
    run("relu", vec![x.clone()], &|g, v| {
        let y = g.relu(v[0]);
        project(g, y, 4)
    });
    run("sigmoid", vec![x.clone()], &|g, v| {
        let y = g.sigmoid(v[0]);
        project(g, y, 5)
    });
    run("fully_connected", vec![x.clone(), rand_t(&mut r, [72, 4, 1, 1]), rand_t(&mut r, [4, 1, 1, 1])], &|g, v| {
        let y = g.fully_connected(v[0], v[1], v[2]).unwrap();
        project(g, y, 6)
    });
    run("add", vec![x.clone(), x2.clone()], &|g, v| {
        let y = g.add(v[0], v[1]).unwrap();
        project(g, y, 7)
    });
    run("sub", vec![x.clone(), x2.clone()], &|g, v| {
        let y = g.sub(v[0], v[1]).unwrap();
        project(g, y, 8)
    });
    run("mul", vec![x.clone(), x2.clone()], &|g, v| {
        let y = g.mul(v[0], v[1]).unwrap();
        project(g, y, 9)
    });
    run("scale", vec![x.clone()], &|g, v| {
        let y = g.scale(v[0], -1.7);
        project(g, y, 10)
    });
    run("add_scalar", vec![x.clone()], &|g, v| {
        let y = g.add_scalar(v[0], 0.3);
        project(g, y, 11)
    });
    run("clamp", vec![x.clone()], &|g, v| {
        let y = g.clamp(v[0], -0.5, 0.5);
        project(g, y, 12)
    });
    run("mean", vec![x.clone()], &|g, v| g.mean(v[0]));
    run("abs", vec![x.clone()], &|g, v| {
        let y = g.abs(v[0]);
        project(g, y, 13)
    });
    run("log", vec![positive(&mut r, [1, 2, 6, 6])], &|g, v| {
        let y = g.log(v[0]).unwrap();
        project(g, y, 14)
    });
    run("square", vec![x.clone()], &|g, v| {
        let y = g.square(v[0]);
        project(g, y, 15)
    });
    run("tv_norm", vec![x.clone()], &|g, v| objectives::tv_norm(g, v[0]));
    run("mse", vec![x.clone(), x2.clone()], &|g, v| objectives::mse(g, v[0], v[1]).unwrap());
    let img = |r: &mut _| {
        let t = positive(r, [2, 1, 6, 6]);
        Tensor::new(t.shape(), t.data().iter().map(|v| v / 2.0).collect()).unwrap()
    };
    let (f, vis, ir) = (img(&mut r), img(&mut r), img(&mut r));
    run("content_loss", vec![f, vis, ir], &|g, v| {
        objectives::content_loss(g, v[0], v[1], v[2], LossWeights::new(0.7, 0.3).unwrap())
            .unwrap()
            .content
    });
    run("disc_loss", vec![probabilities(&mut r, 4), probabilities(&mut r, 4)], &|g, v| {
        objectives::disc_loss(g, v[0], v[1]).unwrap()
    });
    run("gen_adv_loss", vec![probabilities(&mut r, 4)], &|g, v| {
        objectives::gen_adv_loss(g, v[0], AdversarialVariant::Saturating).unwrap()
    });
    run("gen_adv_loss_non_saturating", vec![probabilities(&mut r, 4)], &|g, v| {
        objectives::gen_adv_loss(g, v[0], AdversarialVariant::NonSaturating).unwrap()
    });
    run("generator_total", vec![rand_t(&mut r, [1, 1, 1, 1]), rand_t(&mut r, [1, 1, 1, 1])], &|g, v| {
        objectives::generator_total(g, v[0], v[1]).unwrap()
    });
    out
}

/// Finite differences through a whole ReLU network can straddle a kink. A
/// probe counts only when central differences at two step sizes agree;
/// otherwise it is skipped, and too many skips fail the check.
struct Probes {
    worst: f64,
    used: usize,
    skipped: usize,
}

impl Probes {
    fn probe(&mut self, label: &str, analytic: f64, line: &mut dyn FnMut(f64) -> f64) {
        let central = |line: &mut dyn FnMut(f64) -> f64, h: f64| (line(h) - line(-h)) / (2.0 * h);
        let coarse = central(line, STEP);
        let fine = central(line, STEP / 4.0);
        if relative_error(coarse, fine, 1e-6) > 1e-5 {
            self.skipped += 1;
            return;
        }
        let e = relative_error(analytic, fine, 1e-6);
        if std::env::var("GRAD_DEBUG").is_ok() && e > 1e-6 {
            eprintln!("{label}: analytic {analytic:e} numeric {fine:e} err {e:e}");
        }
        self.used += 1;
        self.worst = self.worst.max(e);
    }

    fn result(&self) -> f64 {
        if self.skipped * 4 > self.used + self.skipped {
            return f64::INFINITY;
        }
        self.worst
    }
}

/// Check a whole network: the input gradient along a random direction and at
/// sampled pixels, and parameter gradients along a random direction over all
/// trainable parameters plus one sampled coordinate of every parameter tensor.
fn network_error(
    store: &ParamStore<f64>,
    inputs: &[Tensor<f64>],
    forward: &dyn Fn(&ParamStore<f64>, &mut Graph<f64>, &[Var]) -> Var,
    seed: u64,
) -> f64 {
    let mut r = super::rng(seed);
    let scalar = |s: &ParamStore<f64>, ins: &[Tensor<f64>], grads: bool| {
        let mut g = Graph::new();
        let vars: Vec<Var> = ins.iter().map(|t| g.leaf(t.clone(), grads)).collect();
        let y = forward(s, &mut g, &vars);
        let out = project(&mut g, y, seed);
        (g, vars, out)
    };
    let value = |s: &ParamStore<f64>, ins: &[Tensor<f64>]| {
        let (h, _, o) = scalar(s, ins, false);
        h.item(o)
    };
    let (mut g, vars, out) = scalar(store, inputs, true);
    g.backward(out).unwrap();
    let mut grads = store.clone();
    grads.zero_grads();
    grads.accumulate_grads(&g);
    let mut probes = Probes {
        worst: 0.0,
        used: 0,
        skipped: 0,
    };

    for (j, x) in inputs.iter().enumerate() {
        let analytic = g.grad(vars[j]).unwrap();
        let dir = super::random_tensor(&mut r, x.shape());
        let a: f64 = analytic.data().iter().zip(dir.data()).map(|(p, q)| p * q).sum();
        probes.probe(&format!("input{j} directional"), a, &mut |t| {
            let mut ins = inputs.to_vec();
            ins[j].data_mut().iter_mut().zip(dir.data()).for_each(|(v, d)| *v += t * d);
            value(store, &ins)
        });
        for _ in 0..24 {
            let k = r.random_range(0..x.len());
            probes.probe(&format!("input{j}[{k}]"), analytic.data()[k], &mut |t| {
                let mut ins = inputs.to_vec();
                ins[j].data_mut()[k] += t;
                value(store, &ins)
            });
        }
    }

    let trainable: Vec<(String, usize)> = store
        .iter()
        .filter(|p| p.kind.is_trainable())
        .map(|p| (p.name.clone(), p.value.len()))
        .collect();
    let dirs: Vec<Vec<f64>> = trainable
        .iter()
        .map(|(_, n)| (0..*n).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let norm = dirs.iter().flatten().map(|d| d * d).sum::<f64>().sqrt();
    let mut a = 0.0;
    for ((name, _), d) in trainable.iter().zip(&dirs) {
        let gp = &grads.get(name).unwrap().grad;
        a += gp.data().iter().zip(d).map(|(p, q)| p * q / norm).sum::<f64>();
    }
    probes.probe("parameters directional", a, &mut |t| {
        let mut s = store.clone();
        for ((name, _), d) in trainable.iter().zip(&dirs) {
            for (v, dv) in s.value_mut(name).unwrap().data_mut().iter_mut().zip(d) {
                *v += t * dv / norm;
            }
        }
        value(&s, inputs)
    });

    for (name, n) in &trainable {
        let k = r.random_range(0..*n);
        let a = grads.get(name).unwrap().grad.data()[k];
        probes.probe(&format!("{name}[{k}]"), a, &mut |t| {
            let mut s = store.clone();
            s.value_mut(name).unwrap().data_mut()[k] += t;
            value(&s, inputs)
        });
    }
    if std::env::var("GRAD_DEBUG").is_ok() {
        eprintln!("probes used {} skipped {}", probes.used, probes.skipped);
    }
    probes.result()
}

/// Move batchnorm affine parameters and running statistics off their
/// initial values so no activation sits exactly on a ReLU kink.
fn jitter_norms(store: &mut ParamStore<f64>, seed: u64) {
    let mut r = super::rng(seed);
    let names: Vec<String> = store.iter().map(|p| p.name.clone()).collect();
    for name in names {
        let (lo, hi) = if name.ends_with(".gamma") || name.ends_with(".running_var") {
            (0.5, 1.5)
        } else if name.ends_with(".beta") || name.ends_with(".running_mean") {
            (-0.3, 0.3)
        } else {
            continue;
        };
        for v in store.value_mut(&name).unwrap().data_mut() {
            *v = r.random_range(lo..hi);
        }
    }
}

pub fn generator_case(batch: usize, size: usize, pass: Pass, seed: u64) -> f64 {
    let mut gen = build_generator::<f64>(&GeneratorConfig::minimal(), 5).unwrap();
    jitter_norms(&mut gen.store, seed);
    let mut r = super::rng(seed);
    let side = |r: &mut _| {
        let imgs: Vec<_> = (0..batch).map(|_| super::random_image(r, size, size).to_tensor::<f64>()).collect();
        Tensor::stack(&imgs).unwrap()
    };
    let (v, i) = (side(&mut r), side(&mut r));
    let config = gen.config.clone();
    network_error(
        &gen.store,
        &[v, i],
        &|s, g, vars| {
            let mut p = fforge::nn::GeneratorParams {
                config: config.clone(),
                store: s.clone(),
            };
            p.forward(g, pass.with_param_grads(true), vars[0], vars[1]).unwrap()
        },
        seed + 10,
    )
}

fn discriminator_case(batch: usize, pass: Pass, seed: u64) -> f64 {
    let config = DiscriminatorConfig {
        input_extent: 32,
        ..DiscriminatorConfig::default()
    };
    let mut disc = build_discriminator::<f64>(&config, 6).unwrap();
    jitter_norms(&mut disc.store, seed);
    let mut r = super::rng(seed);
    let imgs: Vec<_> = (0..batch).map(|_| super::random_image(&mut r, 32, 32).to_tensor::<f64>()).collect();
    let x = Tensor::stack(&imgs).unwrap();
    network_error(
        &disc.store,
        &[x],
        &|s, g, vars| {
            let mut p = fforge::nn::DiscriminatorParams {
                config: config.clone(),
                store: s.clone(),
            };
            p.forward(g, pass.with_param_grads(true), vars[0]).unwrap()
        },
        seed + 10,
    )
}

/// Full generator: a single 1x1x32x32 pair with running statistics, and a
/// batch of two 64x64 pairs with batch statistics. At 32x32 the deepest
/// batchnorm sees two values per channel and finite differences there are
/// too ill-conditioned to be informative.
pub fn generator_error() -> f64 {
    generator_case(1, 32, Pass::eval(), 31).max(generator_case(2, 64, Pass::train_frozen(), 32))
}

/// Full discriminator sized for 32x32 inputs, in the same two settings.
pub fn discriminator_error() -> f64 {
    discriminator_case(1, Pass::eval(), 33).max(discriminator_case(2, Pass::train_frozen(), 34))
}
