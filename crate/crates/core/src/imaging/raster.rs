use super::image::{quantize, ImageRGB};
use crate::error::{dim_err, Result};
use crate::tensor::{Scalar, Tensor};

/// Planar three-channel floating-point image on the 0–255 scale.
///
/// Degradations run on rasters so that rounding to 8 bits happens once, when
/// the result is emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return dim_err(format!("raster dimensions must be positive, got {width}x{height}"));
        }
        if data.len() != 3 * width * height {
            return dim_err(format!(
                "{width}x{height} raster needs {} values, got {}",
                3 * width * height,
                data.len()
            ));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; 3 * width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * width * height);
        for c in 0..3 {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(width, height, data)
    }

    pub fn from_image(img: &ImageRGB) -> Self {
        let (w, h) = (img.width(), img.height());
        let px = img.pixels();
        let mut data = vec![0.0; 3 * w * h];
        for (i, rgb) in px.chunks_exact(3).enumerate() {
            for c in 0..3 {
                data[c * w * h + i] = rgb[c] as f64;
            }
        }
        Self { width: w, height: h, data }
    }

    /// Rounds half away from zero and clamps to `0..=255`.
    pub fn to_image(&self) -> ImageRGB {
        let plane = self.width * self.height;
        let mut px = Vec::with_capacity(3 * plane);
        for i in 0..plane {
            for c in 0..3 {
                px.push(quantize(self.data[c * plane + i]));
            }
        }
        ImageRGB::new(self.width, self.height, px).expect("raster dimensions are valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.width * self.height;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x + width > self.width || y + height > self.height {
            return dim_err(format!(
                "crop {width}x{height}+{x}+{y} outside {}x{}",
                self.width, self.height
            ));
        }
        Self::from_fn(width, height, |c, r, col| self.at(c, y + r, x + col))
    }

    /// `(1, 3, H, W)` tensor with values divided by 255.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        let data = self.data.iter().map(|&v| T::from_f64(v / 255.0)).collect();
        Tensor::new([1, 3, self.height, self.width], data).expect("raster layout matches NCHW")
    }

    /// Inverse of [`Raster::to_tensor`]; no clamping.
    pub fn from_tensor<T: Scalar>(t: &Tensor<T>) -> Result<Self> {
        let s = t.shape();
        if s.n != 1 || s.c != 3 {
            return dim_err(format!("expected a (1, 3, H, W) tensor, got {s}"));
        }
        Self::new(s.w, s.h, t.data().iter().map(|v| v.as_f64() * 255.0).collect())
    }
}
