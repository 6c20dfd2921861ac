//! Separable Gaussian windows and 'valid'-mode filtering on row-major planes.

/// Normalized 1-D Gaussian of odd length `size`. The outer product of this
/// with itself is the normalized 2-D window.
pub fn gaussian_1d(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|k| {
            let d = k as f64 - c;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// A width x height plane of f64 values.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(width * height, data.len());
        Self { width, height, data }
    }

    pub fn map2(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        Plane::new(
            self.width,
            self.height,
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    /// Keep every second row and column, starting at the first.
    pub fn decimate(&self) -> Plane {
        let w = self.width.div_ceil(2);
        let h = self.height.div_ceil(2);
        let mut data = Vec::with_capacity(w * h);
        for y in (0..self.height).step_by(2) {
            for x in (0..self.width).step_by(2) {
                data.push(self.data[y * self.width + x]);
            }
        }
        Plane::new(w, h, data)
    }

    /// Correlate with the separable window `k x k` keeping only positions
    /// where the window fits. Returns `None` when it does not fit anywhere.
    pub fn filter_valid(&self, k: &[f64]) -> Option<Plane> {
        let n = k.len();
        if self.width < n || self.height < n {
            return None;
        }
        let ow = self.width - n + 1;
        let oh = self.height - n + 1;
        let mut rows = vec![0.0; self.height * ow];
        for y in 0..self.height {
            let src = &self.data[y * self.width..(y + 1) * self.width];
            for x in 0..ow {
                rows[y * ow + x] = k.iter().zip(&src[x..x + n]).map(|(a, b)| a * b).sum();
            }
        }
        let mut out = vec![0.0; oh * ow];
        for y in 0..oh {
            for x in 0..ow {
                out[y * ow + x] = k
                    .iter()
                    .enumerate()
                    .map(|(j, &kv)| kv * rows[(y + j) * ow + x])
                    .sum();
            }
        }
        Some(Plane::new(ow, oh, out))
    }
}
