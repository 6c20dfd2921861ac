//! Structural similarity with an 11x11 Gaussian window (sigma 1.5) on
//! `[0, 1]` intensities, averaged over all positions where the window fits.

use super::filter::{gaussian_1d, Plane};
use super::image::GrayImage;
use crate::error::{Error, Result};

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const C1: f64 = 0.01 * 0.01;
pub const C2: f64 = 0.03 * 0.03;

fn plane(img: &GrayImage) -> Plane {
    Plane::new(img.width(), img.height(), img.data().to_vec())
}

pub fn ssim_pair(x: &GrayImage, y: &GrayImage) -> Result<f64> {
    x.same_dims(y, "ssim")?;
    if x.width() < WINDOW || x.height() < WINDOW {
        return Err(Error::Input(format!(
            "ssim needs images of at least {WINDOW}x{WINDOW}, got {}x{}",
            x.width(),
            x.height()
        )));
    }
    let k = gaussian_1d(WINDOW, SIGMA);
    let (px, py) = (plane(x), plane(y));
    let filt = |p: &Plane| p.filter_valid(&k).expect("size checked");
    let mx = filt(&px);
    let my = filt(&py);
    let exx = filt(&px.map2(&px, |a, b| a * b));
    let eyy = filt(&py.map2(&py, |a, b| a * b));
    let exy = filt(&px.map2(&py, |a, b| a * b));
    let n = mx.data.len();
    let total: f64 = (0..n)
        .map(|j| {
            let (ux, uy) = (mx.data[j], my.data[j]);
            let vx = exx.data[j] - ux * ux;
            let vy = eyy.data[j] - uy * uy;
            let cxy = exy.data[j] - ux * uy;
            ((2.0 * ux * uy + C1) * (2.0 * cxy + C2)) / ((ux * ux + uy * uy + C1) * (vx + vy + C2))
        })
        .sum();
    Ok(total / n as f64)
}

/// `(ssim(F, V) + ssim(F, I)) / 2`.
pub fn ssim_fusion(f: &GrayImage, v: &GrayImage, i: &GrayImage) -> Result<f64> {
    Ok((ssim_pair(f, v)? + ssim_pair(f, i)?) / 2.0)
}
