//! Full-image inference with reflect padding to the generator's input multiple.

use crate::data::ImagePair;
use crate::error::{Error, Result};
use crate::metrics::GrayImage;
use crate::nn::{GeneratorParams, Pass};
use crate::tensor::{Element, Graph, Tensor};

/// Mirror index `i` into `0..n` without repeating the edge sample.
fn reflect(i: usize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i % period;
    if m < n {
        m
    } else {
        period - m
    }
}

/// Smallest multiple of `m` that is at least `n`.
pub fn padded_extent(n: usize, m: usize) -> usize {
    n.div_ceil(m) * m
}

/// Reflect-pad on the right and bottom to `width x height`, as a `[1, 1, H, W]` tensor.
pub fn reflect_pad<T: Element>(img: &GrayImage, width: usize, height: usize) -> Tensor<T> {
    let (w, h) = img.dims();
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = reflect(y, h);
        for x in 0..width {
            data.push(T::from_f64(img.get(reflect(x, w), sy)));
        }
    }
    Tensor::new([1, 1, height, width], data).expect("dimensions match")
}

/// Raw generator output cropped back to the pair's size, before 8-bit quantization.
pub fn fuse_values<T: Element>(gen: &mut GeneratorParams<T>, pair: &ImagePair) -> Result<Tensor<T>> {
    let (w, h) = pair.visible.dims();
    if w == 0 || h == 0 {
        return Err(Error::Input(format!("pair {} is empty", pair.id)));
    }
    let m = gen.config.input_multiple;
    let (pw, ph) = (padded_extent(w, m), padded_extent(h, m));
    let mut g = Graph::new();
    let v = g.constant(reflect_pad(&pair.visible, pw, ph));
    let i = g.constant(reflect_pad(&pair.infrared, pw, ph));
    let f = gen.forward(&mut g, Pass::eval(), v, i)?;
    let full = g.value(f).data();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        out.extend_from_slice(&full[y * pw..y * pw + w]);
    }
    Tensor::new([1, 1, h, w], out)
}

/// Fused image with the pair's dimensions.
pub fn fuse_pair<T: Element>(gen: &mut GeneratorParams<T>, pair: &ImagePair) -> Result<GrayImage> {
    GrayImage::from_tensor(&fuse_values(gen, pair)?, 0)
}
