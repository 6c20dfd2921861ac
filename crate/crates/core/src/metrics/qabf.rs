//! Gradient-based edge-transfer index `Q^{AB/F}`.
//!
//! Sobel responses are taken on interior pixels (the 3x3 window never leaves
//! the image). For each source, relative edge strength and orientation
//! agreement with the fused image pass through sigmoid preservation curves;
//! their product is averaged with weights equal to the source edge strength.

use std::f64::consts::FRAC_PI_2;

use super::image::GrayImage;
use crate::error::{Error, Result};

pub const GAMMA_G: f64 = 0.9994;
pub const KAPPA_G: f64 = -15.0;
pub const SIGMA_G: f64 = 0.5;
pub const GAMMA_A: f64 = 0.9879;
pub const KAPPA_A: f64 = -22.0;
pub const SIGMA_A: f64 = 0.8;

/// Edge strength and orientation of every interior pixel.
pub(crate) fn sobel(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = img.dims();
    let mut strength = Vec::with_capacity((w - 2) * (h - 2));
    let mut angle = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let p = |dx: isize, dy: isize| img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
            let sx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            strength.push((sx * sx + sy * sy).sqrt());
            angle.push(if sx == 0.0 { FRAC_PI_2 } else { (sy / sx).atan() });
        }
    }
    (strength, angle)
}

/// Per-pixel edge preservation of one source in the fused image.
fn preservation(gs: f64, as_: f64, gf: f64, af: f64) -> f64 {
    let g = if gs == 0.0 || gf == 0.0 {
        0.0
    } else if gs > gf {
        gf / gs
    } else {
        gs / gf
    };
    let a = 1.0 - (as_ - af).abs() / FRAC_PI_2;
    let qg = GAMMA_G / (1.0 + (KAPPA_G * (g - SIGMA_G)).exp());
    let qa = GAMMA_A / (1.0 + (KAPPA_A * (a - SIGMA_A)).exp());
    qg * qa
}

/// Edge information transferred from sources `v` and `i` into `f`, in `[0, 1]`.
/// Returns 0 when neither source has any edges.
pub fn qabf(v: &GrayImage, i: &GrayImage, f: &GrayImage) -> Result<f64> {
    v.same_dims(i, "qabf")?;
    v.same_dims(f, "qabf")?;
    if v.width() < 3 || v.height() < 3 {
        return Err(Error::Input("qabf needs images of at least 3x3".into()));
    }
    let (ga, aa) = sobel(v);
    let (gb, ab) = sobel(i);
    let (gf, af) = sobel(f);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..ga.len() {
        let qa = preservation(ga[k], aa[k], gf[k], af[k]);
        let qb = preservation(gb[k], ab[k], gf[k], af[k]);
        num += qa * ga[k] + qb * gb[k];
        den += ga[k] + gb[k];
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}
