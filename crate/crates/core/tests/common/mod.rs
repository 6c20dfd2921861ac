//! Brute-force reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use fforge::metrics::GrayImage;
use fforge::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, shape: [usize; 4]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..=1.0)).collect()).unwrap()
}

/// Smooth image with random structure, so local statistics are not pure noise.
pub fn textured_image(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    let (a, b, c) = (rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.0..6.0));
    let noise: Vec<f64> = (0..w * h).map(|_| rng.random_range(-0.15..0.15)).collect();
    GrayImage::from_fn(w, h, |x, y| {
        let s = 0.5 + 0.3 * ((x as f64 * a + c).sin() * (y as f64 * b).cos());
        (s + noise[y * w + x]).clamp(0.0, 1.0)
    })
    .unwrap()
}

// ------------------------------------------------------------------ tensors

fn at(shape: [usize; 4], n: usize, c: usize, y: usize, x: usize) -> usize {
    ((n * shape[1] + c) * shape[2] + y) * shape[3] + x
}

/// Direct cross-correlation with zero padding.
pub fn conv2d(x: &Tensor<f64>, w: &Tensor<f64>, stride: usize, pad: usize) -> Tensor<f64> {
    let [n, cin, h, wd] = x.shape();
    let [cout, _, k, _] = w.shape();
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (wd + 2 * pad - k) / stride + 1;
    let os = [n, cout, oh, ow];
    let mut out = vec![0.0; os.iter().product()];
    for b in 0..n {
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut s = 0.0;
                    for ci in 0..cin {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                    continue;
                                }
                                s += x.data()[at(x.shape(), b, ci, iy as usize, ix as usize)]
                                    * w.data()[at(w.shape(), co, ci, ky, kx)];
                            }
                        }
                    }
                    out[at(os, b, co, oy, ox)] = s;
                }
            }
        }
    }
    Tensor::new(os, out).unwrap()
}

/// Scatter-form transposed convolution; `w` is `(C_in, C_out, k, k)`.
pub fn conv_transpose2d(x: &Tensor<f64>, w: &Tensor<f64>, stride: usize, pad: usize, out_pad: usize) -> Tensor<f64> {
    let [n, cin, h, wd] = x.shape();
    let [_, cout, k, _] = w.shape();
    let oh = (h - 1) * stride + k + out_pad - 2 * pad;
    let ow = (wd - 1) * stride + k + out_pad - 2 * pad;
    let os = [n, cout, oh, ow];
    let mut out = vec![0.0; os.iter().product()];
    for b in 0..n {
        for ci in 0..cin {
            for iy in 0..h {
                for ix in 0..wd {
                    let v = x.data()[at(x.shape(), b, ci, iy, ix)];
                    for co in 0..cout {
                        for ky in 0..k {
                            for kx in 0..k {
                                let oy = (iy * stride + ky) as isize - pad as isize;
                                let ox = (ix * stride + kx) as isize - pad as isize;
                                if oy < 0 || ox < 0 || oy >= oh as isize || ox >= ow as isize {
                                    continue;
                                }
                                out[at(os, b, co, oy as usize, ox as usize)] +=
                                    v * w.data()[at(w.shape(), ci, co, ky, kx)];
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(os, out).unwrap()
}

/// Train-mode batch normalization with biased batch variance.
pub fn batchnorm(x: &Tensor<f64>, gamma: &[f64], beta: &[f64], eps: f64) -> Tensor<f64> {
    let [n, c, h, w] = x.shape();
    let mut out = x.data().to_vec();
    for ch in 0..c {
        let mut vals = Vec::new();
        for b in 0..n {
            for y in 0..h {
                for xx in 0..w {
                    vals.push(x.data()[at(x.shape(), b, ch, y, xx)]);
                }
            }
        }
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
        for b in 0..n {
            for y in 0..h {
                for xx in 0..w {
                    let i = at(x.shape(), b, ch, y, xx);
                    out[i] = (x.data()[i] - m) / (var + eps).sqrt() * gamma[ch] + beta[ch];
                }
            }
        }
    }
    Tensor::new(x.shape(), out).unwrap()
}

/// `y[n][m] = sum_d x[n][d] * w[d][m] + b[m]`.
pub fn fully_connected(x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]) -> Tensor<f64> {
    let n = x.shape()[0];
    let d = x.len() / n;
    let m = b.len();
    let mut out = vec![0.0; n * m];
    for r in 0..n {
        for j in 0..m {
            let mut s = b[j];
            for k in 0..d {
                s += x.data()[r * d + k] * w.data()[k * m + j];
            }
            out[r * m + j] = s;
        }
    }
    Tensor::new([n, m, 1, 1], out).unwrap()
}

/// Anisotropic total variation divided by the element count.
pub fn total_variation(x: &Tensor<f64>) -> f64 {
    let [n, c, h, w] = x.shape();
    let mut s = 0.0;
    for b in 0..n {
        for ch in 0..c {
            for y in 0..h {
                for xx in 0..w {
                    let v = x.data()[at(x.shape(), b, ch, y, xx)];
                    if y + 1 < h {
                        s += (x.data()[at(x.shape(), b, ch, y + 1, xx)] - v).abs();
                    }
                    if xx + 1 < w {
                        s += (x.data()[at(x.shape(), b, ch, y, xx + 1)] - v).abs();
                    }
                }
            }
        }
    }
    s / x.len() as f64
}

pub fn mse(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

// ------------------------------------------------------------------ metrics

fn level(v: f64) -> usize {
    (v * 255.0).round() as usize
}

pub fn entropy(img: &GrayImage) -> f64 {
    let mut counts = [0usize; 256];
    for &v in img.data() {
        counts[level(v)] += 1;
    }
    let n = img.data().len() as f64;
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    h
}

/// `sum p(a,b) log2(p(a,b) / (p(a) p(b)))` over the 256x256 joint histogram.
pub fn mutual_information_pair(a: &GrayImage, b: &GrayImage) -> f64 {
    let mut joint = vec![vec![0usize; 256]; 256];
    for (&x, &y) in a.data().iter().zip(b.data()) {
        joint[level(x)][level(y)] += 1;
    }
    let n = a.data().len() as f64;
    let pa: Vec<f64> = (0..256).map(|i| joint[i].iter().sum::<usize>() as f64 / n).collect();
    let pb: Vec<f64> = (0..256).map(|j| (0..256).map(|i| joint[i][j]).sum::<usize>() as f64 / n).collect();
    let mut mi = 0.0;
    for i in 0..256 {
        for j in 0..256 {
            if joint[i][j] > 0 {
                let p = joint[i][j] as f64 / n;
                mi += p * (p / (pa[i] * pb[j])).log2();
            }
        }
    }
    mi
}

pub fn gaussian_window_2d(size: usize, sigma: f64) -> Vec<Vec<f64>> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut w = vec![vec![0.0; size]; size];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - c, j as f64 - c);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    for row in &mut w {
        for v in row {
            *v /= total;
        }
    }
    w
}

type Grid = Vec<Vec<f64>>;

fn to_grid(img: &GrayImage, scale: f64) -> Grid {
    (0..img.height())
        .map(|y| (0..img.width()).map(|x| img.get(x, y) * scale).collect())
        .collect()
}

/// Weighted local statistics `(mu_a, mu_b, var_a, var_b, cov)` of the window at `(y, x)`.
fn window_stats(a: &Grid, b: &Grid, win: &Grid, y: usize, x: usize) -> (f64, f64, f64, f64, f64) {
    let k = win.len();
    let (mut ma, mut mb) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            ma += win[i][j] * a[y + i][x + j];
            mb += win[i][j] * b[y + i][x + j];
        }
    }
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let (da, db) = (a[y + i][x + j] - ma, b[y + i][x + j] - mb);
            va += win[i][j] * da * da;
            vb += win[i][j] * db * db;
            cov += win[i][j] * da * db;
        }
    }
    (ma, mb, va, vb, cov)
}

pub fn ssim_pair(a: &GrayImage, b: &GrayImage) -> f64 {
    let win = gaussian_window_2d(11, 1.5);
    let (ga, gb) = (to_grid(a, 1.0), to_grid(b, 1.0));
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let (h, w) = (a.height() - 10, a.width() - 10);
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (ma, mb, va, vb, cov) = window_stats(&ga, &gb, &win, y, x);
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    total / (h * w) as f64
}

fn filter_valid(g: &Grid, win: &Grid) -> Grid {
    let k = win.len();
    let (h, w) = (g.len() + 1 - k, g[0].len() + 1 - k);
    (0..h)
        .map(|y| {
            (0..w)
                .map(|x| {
                    let mut s = 0.0;
                    for i in 0..k {
                        for j in 0..k {
                            s += win[i][j] * g[y + i][x + j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// Multi-scale pixel-domain VIF, written directly from the per-window model.
pub fn vif_pair(reference: &GrayImage, distorted: &GrayImage) -> f64 {
    let (sigma_nsq, eps) = (2.0, 1e-10);
    let mut r = to_grid(reference, 255.0);
    let mut d = to_grid(distorted, 255.0);
    let (mut num, mut den) = (0.0, 0.0);
    for scale in 1..=4u32 {
        let n = 2usize.pow(5 - scale) + 1;
        let win = gaussian_window_2d(n, n as f64 / 5.0);
        if scale > 1 {
            if r.len() < n || r[0].len() < n {
                continue;
            }
            let decimate = |g: Grid| -> Grid { g.into_iter().step_by(2).map(|row| row.into_iter().step_by(2).collect()).collect() };
            r = decimate(filter_valid(&r, &win));
            d = decimate(filter_valid(&d, &win));
        }
        if r.len() < n || r[0].len() < n {
            continue;
        }
        for y in 0..=r.len() - n {
            for x in 0..=r[0].len() - n {
                let (_, _, s1, s2, s12) = window_stats(&r, &d, &win, y, x);
                let (s1, s2) = (s1.max(0.0), s2.max(0.0));
                let (mut g, mut sv) = (s12 / (s1 + eps), 0.0);
                sv += s2 - g * s12;
                let mut s1e = s1;
                if s1 < eps {
                    g = 0.0;
                    sv = s2;
                    s1e = 0.0;
                }
                if s2 < eps {
                    g = 0.0;
                    sv = 0.0;
                }
                if g < 0.0 {
                    sv = s2;
                    g = 0.0;
                }
                let sv = sv.max(eps);
                num += (1.0 + g * g * s1e / (sv + sigma_nsq)).log10();
                den += (1.0 + s1e / sigma_nsq).log10();
            }
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Xydeas-Petrovic edge-transfer index with Sobel operators on interior pixels.
pub fn qabf(a: &GrayImage, b: &GrayImage, f: &GrayImage) -> f64 {
    const HX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const HY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (w, h) = a.dims();
    let grad = |img: &GrayImage, x: usize, y: usize| {
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let v = img.get(x + j - 1, y + i - 1);
                sx += HX[i][j] * v;
                sy += HY[i][j] * v;
            }
        }
        let g = sx.hypot(sy);
        let alpha = if sx == 0.0 { std::f64::consts::FRAC_PI_2 } else { (sy / sx).atan() };
        (g, alpha)
    };
    let q = |(gs, as_): (f64, f64), (gf, af): (f64, f64)| {
        let g = if gs == 0.0 || gf == 0.0 { 0.0 } else { gs.min(gf) / gs.max(gf) };
        let al = 1.0 - (as_ - af).abs() / std::f64::consts::FRAC_PI_2;
        let qg = 0.9994 / (1.0 + (-15.0 * (g - 0.5)).exp());
        let qa = 0.9879 / (1.0 + (-22.0 * (al - 0.8)).exp());
        qg * qa
    };
    let (mut num, mut den) = (0.0, 0.0);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (ga, gb, gf) = (grad(a, x, y), grad(b, x, y), grad(f, x, y));
            num += q(ga, gf) * ga.0 + q(gb, gf) * gb.0;
            den += ga.0 + gb.0;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Per-image rows of the published objective-score table:
/// (id, VIF, Q^AB/F, SSIM, MI, EN).
pub const PUBLISHED_ROWS: [(&str, [f64; 5]); 7] = [
    ("Athena", [0.8808, 0.3066, 0.7571, 3.3386, 7.0596]),
    ("Bench", [2.2271, 0.5524, 0.5749, 3.732, 7.281]),
    ("Bunker", [2.3969, 0.2585, 0.6256, 3.5013, 7.0987]),
    ("Tank", [2.3075, 0.2496, 0.7470, 3.9900, 7.3848]),
    ("Sandpath", [2.0796, 0.3594, 0.6478, 3.1729, 6.8665]),
    ("Nato_camp", [1.8117, 0.4077, 0.70965, 3.1738, 6.8165]),
    ("Kaptein", [1.8738, 0.2423, 0.6763, 3.3626, 7.0055]),
];

/// Published average row in the same column order.
pub const PUBLISHED_AVERAGE: [f64; 5] = [1.9396, 0.3395, 0.6769, 3.4673, 7.0732];

pub mod grad_suite;

/// Small networks on 32x32 patches, for tests that exercise the pipeline
/// rather than learning.
pub fn tiny_config() -> fforge::pipeline::TrainConfig {
    fforge::pipeline::TrainConfig::parse(
        "steps = 3
batch_size = 2
gen_lr = 1e-3
disc_lr = 1e-3
patch_size = 32
patch_stride = 32
checkpoint_interval = 2
gen.stem_channels = 8
gen.stage_widths = 8,8,16,16
gen.blocks = 1,1,1,1
disc.stem_channels = 8
disc.stage_widths = 8,8
disc.blocks = 1,1
disc.hidden = 8
",
    )
    .expect("tiny config parses")
}

/// `count` synthetic pairs written under `root` with consecutive seeds.
pub fn synth_dataset(root: &std::path::Path, count: u64, size: usize) {
    for s in 0..count {
        let pair = fforge::data::synthesize_pair(s, size).unwrap();
        fforge::data::write_pair(root, &pair).unwrap();
    }
}
