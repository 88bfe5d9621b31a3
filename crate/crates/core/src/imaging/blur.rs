use super::raster::Raster;
use super::resize::mirror_index;
use crate::error::{EpsrError, Result};

pub const BD_KERNEL_SIZE: usize = 7;
pub const BD_SIGMA: f64 = 1.6;

fn check_size(size: usize) -> Result<()> {
    if size % 2 == 0 {
        return Err(EpsrError::Config(format!("Gaussian kernel size must be odd, got {size}")));
    }
    Ok(())
}

/// Normalized 1-D Gaussian taps centred on `size / 2`.
pub fn gaussian_kernel_1d(size: usize, sigma: f64) -> Result<Vec<f64>> {
    check_size(size)?;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(EpsrError::Config(format!("Gaussian sigma must be positive, got {sigma}")));
    }
    let r = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - r;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / sum).collect())
}

/// Normalized 2-D kernel, row-major `size x size`.
pub fn gaussian_kernel_2d(size: usize, sigma: f64) -> Result<Vec<f64>> {
    let k = gaussian_kernel_1d(size, sigma)?;
    Ok(k.iter().flat_map(|a| k.iter().map(move |b| a * b)).collect())
}

/// Separable Gaussian blur with symmetric (mirrored) borders.
pub fn gaussian_blur(src: &Raster, size: usize, sigma: f64) -> Result<Raster> {
    let k = gaussian_kernel_1d(size, sigma)?;
    let r = (size / 2) as isize;
    let (w, h) = (src.width(), src.height());
    let mut out = src.clone();
    let mut tmp = vec![0.0; w * h];
    for c in 0..3 {
        let p = src.plane(c);
        for y in 0..h {
            for x in 0..w {
                tmp[y * w + x] = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * p[y * w + mirror_index(x as isize + i as isize - r, w)])
                    .sum();
            }
        }
        let dst = out.plane_mut(c);
        for y in 0..h {
            for x in 0..w {
                dst[y * w + x] = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * tmp[mirror_index(y as isize + i as isize - r, h) * w + x])
                    .sum();
            }
        }
    }
    Ok(out)
}
