//! Pixel-domain multi-scale visual information fidelity.
//!
//! Four scales with Gaussian windows of size `2^(5-s) + 1` (17, 9, 5, 3) and
//! standard deviation `size / 5`. Scales after the first low-pass filter and
//! decimate both images. Local statistics feed a Gaussian scale mixture
//! channel model with HVS noise variance `SIGMA_NSQ` on 0-255 intensities.
//! A scale whose image has become smaller than its window contributes
//! nothing, so images down to 17x17 are accepted.

use super::filter::{gaussian_1d, Plane};
use super::image::GrayImage;
use crate::error::{Error, Result};

pub const SCALES: usize = 4;
pub const SIGMA_NSQ: f64 = 2.0;
const EPS: f64 = 1e-10;

pub fn window_size(scale: usize) -> usize {
    (1 << (SCALES - scale + 1)) + 1
}

/// Per-scale `(numerator, denominator)` sums; `None` for skipped scales.
pub fn vif_scales(reference: &GrayImage, distorted: &GrayImage) -> Result<Vec<Option<(f64, f64)>>> {
    reference.same_dims(distorted, "vif")?;
    let finest = window_size(1);
    if reference.width() < finest || reference.height() < finest {
        return Err(Error::Input(format!(
            "vif needs images of at least {finest}x{finest}, got {}x{}",
            reference.width(),
            reference.height()
        )));
    }
    let mut r = Plane::new(reference.width(), reference.height(), reference.scaled_255());
    let mut d = Plane::new(distorted.width(), distorted.height(), distorted.scaled_255());
    let mut out = Vec::with_capacity(SCALES);
    for scale in 1..=SCALES {
        let n = window_size(scale);
        let k = gaussian_1d(n, n as f64 / 5.0);
        if scale > 1 {
            match (r.filter_valid(&k), d.filter_valid(&k)) {
                (Some(rf), Some(df)) => {
                    r = rf.decimate();
                    d = df.decimate();
                }
                _ => {
                    out.push(None);
                    continue;
                }
            }
        }
        let Some(mu1) = r.filter_valid(&k) else {
            out.push(None);
            continue;
        };
        let mu2 = d.filter_valid(&k).expect("same dims");
        let e11 = r.map2(&r, |a, b| a * b).filter_valid(&k).expect("same dims");
        let e22 = d.map2(&d, |a, b| a * b).filter_valid(&k).expect("same dims");
        let e12 = r.map2(&d, |a, b| a * b).filter_valid(&k).expect("same dims");
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..mu1.data.len() {
            let (m1, m2) = (mu1.data[j], mu2.data[j]);
            let s1 = (e11.data[j] - m1 * m1).max(0.0);
            let s2 = (e22.data[j] - m2 * m2).max(0.0);
            let s12 = e12.data[j] - m1 * m2;
            let (g, sv) = channel(s1, s2, s12);
            let s1 = if s1 < EPS { 0.0 } else { s1 };
            num += (1.0 + g * g * s1 / (sv + SIGMA_NSQ)).log10();
            den += (1.0 + s1 / SIGMA_NSQ).log10();
        }
        out.push(Some((num, den)));
    }
    Ok(out)
}

/// Gain `g` and distortion-noise variance of the local channel model.
fn channel(s1: f64, s2: f64, s12: f64) -> (f64, f64) {
    let mut g = s12 / (s1 + EPS);
    let mut sv = s2 - g * s12;
    if s1 < EPS {
        g = 0.0;
        sv = s2;
    }
    if s2 < EPS {
        g = 0.0;
        sv = 0.0;
    }
    if g < 0.0 {
        sv = s2;
        g = 0.0;
    }
    (g, sv.max(EPS))
}

/// Information preserved in `distorted` relative to `reference`. Returns 0
/// when the reference carries no information at any evaluated scale.
pub fn vif_pair(reference: &GrayImage, distorted: &GrayImage) -> Result<f64> {
    let (num, den) = vif_scales(reference, distorted)?
        .into_iter()
        .flatten()
        .fold((0.0, 0.0), |(a, b), (n, d)| (a + n, b + d));
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// `vif(V, F) + vif(I, F)`.
pub fn vif_fusion(f: &GrayImage, v: &GrayImage, i: &GrayImage) -> Result<f64> {
    Ok(vif_pair(v, f)? + vif_pair(i, f)?)
}
