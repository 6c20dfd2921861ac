//! Raw NCHW cross-correlation kernels.
//!
//! `conv_forward` is the only true sliding-window routine; its two
//! adjoints (`conv_backward_input`, `conv_backward_weight`) serve both
//! conv2d backward and conv_transpose2d forward/backward.

use super::{Element, Shape};
use crate::error::{Error, Result};

/// `floor((extent + 2*padding - kernel) / stride) + 1`, or a configuration
/// error when the window does not fit.
pub fn conv2d_output_extent(
    extent: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<usize> {
    if stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    let padded = extent + 2 * padding;
    if kernel == 0 || padded < kernel {
        return Err(Error::Config(format!(
            "kernel {kernel} does not fit extent {extent} with padding {padding}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// `(extent - 1)*stride - 2*padding + kernel + output_padding`.
pub fn conv_transpose2d_output_extent(
    extent: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    output_padding: usize,
) -> Result<usize> {
    if stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    if output_padding >= stride {
        return Err(Error::Config(format!(
            "output_padding {output_padding} must be smaller than stride {stride}"
        )));
    }
    if extent == 0 {
        return Err(Error::Config("empty input extent".into()));
    }
    let full = (extent - 1) * stride + kernel + output_padding;
    if full <= 2 * padding {
        return Err(Error::Config(format!(
            "transpose convolution output extent is non-positive (extent {extent}, kernel {kernel}, stride {stride}, padding {padding})"
        )));
    }
    Ok(full - 2 * padding)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Geometry {
    pub stride: usize,
    pub padding: usize,
}

/// Range of output positions `o` whose tap `o*stride + k - padding` lands in `[0, extent)`.
#[inline]
fn valid_outputs(k: usize, extent: usize, out_extent: usize, g: Geometry) -> (usize, usize) {
    let lo = if g.padding > k {
        (g.padding - k).div_ceil(g.stride)
    } else {
        0
    };
    let hi_num = extent + g.padding;
    let hi = if hi_num > k {
        ((hi_num - k - 1) / g.stride + 1).min(out_extent)
    } else {
        0
    };
    (lo, hi.max(lo))
}

/// `y[n,co,oy,ox] = sum x[n,ci,oy*s+ky-p, ox*s+kx-p] * w[co,ci,ky,kx]`.
pub(crate) fn conv_forward<T: Element>(
    x: &[T],
    xs: Shape,
    w: &[T],
    ws: Shape,
    g: Geometry,
    out_hw: (usize, usize),
) -> Vec<T> {
    let [n, cin, h, wd] = xs;
    let [cout, _, kh, kw] = ws;
    let (oh, ow) = out_hw;
    let mut y = vec![T::zero(); n * cout * oh * ow];
    for b in 0..n {
        for co in 0..cout {
            let yo = (b * cout + co) * oh * ow;
            let yplane = &mut y[yo..yo + oh * ow];
            for ci in 0..cin {
                let xplane = &x[(b * cin + ci) * h * wd..(b * cin + ci + 1) * h * wd];
                for ky in 0..kh {
                    let (oy_lo, oy_hi) = valid_outputs(ky, h, oh, g);
                    for kx in 0..kw {
                        let wv = w[((co * cin + ci) * kh + ky) * kw + kx];
                        if wv == T::zero() {
                            continue;
                        }
                        let (ox_lo, ox_hi) = valid_outputs(kx, wd, ow, g);
                        for oy in oy_lo..oy_hi {
                            let iy = oy * g.stride + ky - g.padding;
                            let xrow = &xplane[iy * wd..(iy + 1) * wd];
                            let yrow = &mut yplane[oy * ow..(oy + 1) * ow];
                            if g.stride == 1 {
                                let ix0 = ox_lo + kx - g.padding;
                                for (yv, &xv) in yrow[ox_lo..ox_hi]
                                    .iter_mut()
                                    .zip(&xrow[ix0..ix0 + (ox_hi - ox_lo)])
                                {
                                    *yv = *yv + wv * xv;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    let ix = ox * g.stride + kx - g.padding;
                                    yrow[ox] = yrow[ox] + wv * xrow[ix];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

/// Adjoint of [`conv_forward`] with respect to `x`: scatters `gy` back through
/// the kernel into a buffer of shape `xs`.
pub(crate) fn conv_backward_input<T: Element>(
    gy: &[T],
    ys: Shape,
    w: &[T],
    ws: Shape,
    g: Geometry,
    xs: Shape,
) -> Vec<T> {
    let [n, cin, h, wd] = xs;
    let [_, cout, oh, ow] = ys;
    let [_, _, kh, kw] = ws;
    let mut gx = vec![T::zero(); n * cin * h * wd];
    for b in 0..n {
        for co in 0..cout {
            let gplane = &gy[(b * cout + co) * oh * ow..(b * cout + co + 1) * oh * ow];
            for ci in 0..cin {
                let xo = (b * cin + ci) * h * wd;
                let xplane = &mut gx[xo..xo + h * wd];
                for ky in 0..kh {
                    let (oy_lo, oy_hi) = valid_outputs(ky, h, oh, g);
                    for kx in 0..kw {
                        let wv = w[((co * cin + ci) * kh + ky) * kw + kx];
                        if wv == T::zero() {
                            continue;
                        }
                        let (ox_lo, ox_hi) = valid_outputs(kx, wd, ow, g);
                        for oy in oy_lo..oy_hi {
                            let iy = oy * g.stride + ky - g.padding;
                            let grow = &gplane[oy * ow..(oy + 1) * ow];
                            let xrow = &mut xplane[iy * wd..(iy + 1) * wd];
                            if g.stride == 1 {
                                let ix0 = ox_lo + kx - g.padding;
                                for (xv, &gv) in xrow[ix0..ix0 + (ox_hi - ox_lo)]
                                    .iter_mut()
                                    .zip(&grow[ox_lo..ox_hi])
                                {
                                    *xv = *xv + wv * gv;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    let ix = ox * g.stride + kx - g.padding;
                                    xrow[ix] = xrow[ix] + wv * grow[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    gx
}

/// Gradient of [`conv_forward`] with respect to the kernel.
pub(crate) fn conv_backward_weight<T: Element>(
    x: &[T],
    xs: Shape,
    gy: &[T],
    ys: Shape,
    g: Geometry,
    ws: Shape,
) -> Vec<T> {
    let [n, cin, h, wd] = xs;
    let [_, cout, oh, ow] = ys;
    let [_, _, kh, kw] = ws;
    let mut gw = vec![T::zero(); cout * cin * kh * kw];
    for b in 0..n {
        for co in 0..cout {
            let gplane = &gy[(b * cout + co) * oh * ow..(b * cout + co + 1) * oh * ow];
            for ci in 0..cin {
                let xplane = &x[(b * cin + ci) * h * wd..(b * cin + ci + 1) * h * wd];
                for ky in 0..kh {
                    let (oy_lo, oy_hi) = valid_outputs(ky, h, oh, g);
                    for kx in 0..kw {
                        let (ox_lo, ox_hi) = valid_outputs(kx, wd, ow, g);
                        let mut acc = T::zero();
                        for oy in oy_lo..oy_hi {
                            let iy = oy * g.stride + ky - g.padding;
                            let grow = &gplane[oy * ow..(oy + 1) * ow];
                            let xrow = &xplane[iy * wd..(iy + 1) * wd];
                            if g.stride == 1 {
                                let ix0 = ox_lo + kx - g.padding;
                                for (&gv, &xv) in grow[ox_lo..ox_hi]
                                    .iter()
                                    .zip(&xrow[ix0..ix0 + (ox_hi - ox_lo)])
                                {
                                    acc = acc + gv * xv;
                                }
                            } else {
                                for ox in ox_lo..ox_hi {
                                    acc = acc + grow[ox] * xrow[ox * g.stride + kx - g.padding];
                                }
                            }
                        }
                        let idx = ((co * cin + ci) * kh + ky) * kw + kx;
                        gw[idx] = gw[idx] + acc;
                    }
                }
            }
        }
    }
    gw
}
