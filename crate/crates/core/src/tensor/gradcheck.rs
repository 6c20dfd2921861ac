//! Central finite-difference gradient checking at 64-bit.

use super::Tensor;

/// Default finite-difference step.
pub const STEP: f64 = 1e-5;

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central difference of `f` at `x` along coordinate `k`.
pub fn partial(f: &mut dyn FnMut(&Tensor<f64>) -> f64, x: &Tensor<f64>, k: usize, step: f64) -> f64 {
    let mut probe = x.clone();
    let orig = probe.data()[k];
    probe.data_mut()[k] = orig + step;
    let up = f(&probe);
    probe.data_mut()[k] = orig - step;
    let down = f(&probe);
    (up - down) / (2.0 * step)
}

/// Central difference of `f` at `x` along `direction`.
pub fn directional(
    f: &mut dyn FnMut(&Tensor<f64>) -> f64,
    x: &Tensor<f64>,
    direction: &[f64],
    step: f64,
) -> f64 {
    let shifted = |sign: f64| {
        let mut p = x.clone();
        p.data_mut()
            .iter_mut()
            .zip(direction)
            .for_each(|(v, d)| *v += sign * step * d);
        p
    };
    (f(&shifted(1.0)) - f(&shifted(-1.0))) / (2.0 * step)
}

/// Worst relative error between `analytic` and central differences over the
/// given coordinates (all coordinates when `coords` is `None`).
pub fn max_coordinate_error(
    f: &mut dyn FnMut(&Tensor<f64>) -> f64,
    x: &Tensor<f64>,
    analytic: &Tensor<f64>,
    coords: Option<&[usize]>,
) -> f64 {
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..x.len()).collect();
            &all
        }
    };
    coords
        .iter()
        .map(|&k| relative_error(analytic.data()[k], partial(f, x, k, STEP), 1e-6))
        .fold(0.0, f64::max)
}
