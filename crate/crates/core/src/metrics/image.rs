use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Single-channel image with values in `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::Input(format!(
                "{width}x{height} image needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Input(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Build from 8-bit levels, scaling by 1/255.
    pub fn from_levels(width: usize, height: usize, levels: &[u8]) -> Result<Self> {
        Self::new(width, height, levels.iter().map(|&l| f64::from(l) / 255.0).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Nearest 8-bit level of every pixel.
    pub fn levels(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    /// Pixel values scaled to `[0, 255]` without rounding.
    pub fn scaled_255(&self) -> Vec<f64> {
        self.data.iter().map(|v| v * 255.0).collect()
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Input(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + width]);
        }
        Ok(Self { width, height, data })
    }

    /// `1 - v` for every pixel.
    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| 1.0 - v).collect(),
        }
    }

    /// `[1, 1, H, W]` tensor.
    pub fn to_tensor<T: Element>(&self) -> Tensor<T> {
        Tensor::new(
            [1, 1, self.height, self.width],
            self.data.iter().map(|&v| T::from_f64(v)).collect(),
        )
        .expect("dimensions match")
    }

    /// Batch item `n` of a single-channel tensor. Values are clamped into `[0, 1]`.
    pub fn from_tensor<T: Element>(t: &Tensor<T>, n: usize) -> Result<Self> {
        let [b, c, h, w] = t.shape();
        if c != 1 || n >= b {
            return Err(Error::Input(format!(
                "cannot take image {n} from tensor of shape {:?}",
                t.shape()
            )));
        }
        let data = t.data()[n * h * w..(n + 1) * h * w]
            .iter()
            .map(|v| v.as_f64().clamp(0.0, 1.0))
            .collect();
        Self::new(w, h, data)
    }

    pub(crate) fn same_dims(&self, other: &Self, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Input(format!(
                "{what}: image dimensions {:?} and {:?} differ",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}
