use crate::error::{dim_err, Result};
use crate::imaging::{gaussian_kernel_1d, rgb_to_ycbcr_y, ImageRGB};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const PEAK: f64 = 255.0;

/// Row-major luminance plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn y_of(img: &ImageRGB) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: rgb_to_ycbcr_y(img),
        }
    }

    /// Drops `shave` pixels from every border.
    pub fn shave(&self, shave: usize) -> Result<Self> {
        if 2 * shave >= self.width || 2 * shave >= self.height {
            return dim_err(format!("cannot shave {shave} px from {}x{}", self.width, self.height));
        }
        let (w, h) = (self.width - 2 * shave, self.height - 2 * shave);
        let mut data = Vec::with_capacity(w * h);
        for y in shave..shave + h {
            data.extend_from_slice(&self.data[y * self.width + shave..][..w]);
        }
        Ok(Self { width: w, height: h, data })
    }
}

fn y_pair(sr: &ImageRGB, hr: &ImageRGB, shave: usize) -> Result<(Plane, Plane)> {
    if (sr.width(), sr.height()) != (hr.width(), hr.height()) {
        return dim_err(format!(
            "image sizes differ: {}x{} vs {}x{}",
            sr.width(),
            sr.height(),
            hr.width(),
            hr.height()
        ));
    }
    Ok((Plane::y_of(sr).shave(shave)?, Plane::y_of(hr).shave(shave)?))
}

/// PSNR in dB on a pair of planes; `+inf` when they are identical.
pub fn psnr_planes(a: &Plane, b: &Plane) -> f64 {
    let mse = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// Y-channel PSNR after removing `shave` border pixels.
pub fn psnr_y(sr: &ImageRGB, hr: &ImageRGB, shave: usize) -> Result<f64> {
    let (a, b) = y_pair(sr, hr, shave)?;
    Ok(psnr_planes(&a, &b))
}

/// Valid-mode separable filtering with a symmetric 1-D window.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..][..w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over all fully-contained 11x11 Gaussian windows.
pub fn ssim_planes(a: &Plane, b: &Plane) -> Result<f64> {
    let (w, h) = (a.width, a.height);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return dim_err(format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"));
    }
    let k = gaussian_kernel_1d(SSIM_WINDOW, SSIM_SIGMA)?;
    let c1 = (K1 * PEAK).powi(2);
    let c2 = (K2 * PEAK).powi(2);
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(&a.data, w, h, &k);
    let mu_b = filter_valid(&b.data, w, h, &k);
    let e_aa = filter_valid(&prod(|x, _| x * x), w, h, &k);
    let e_bb = filter_valid(&prod(|_, y| y * y), w, h, &k);
    let e_ab = filter_valid(&prod(|x, y| x * y), w, h, &k);
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(sum / mu_a.len() as f64)
}

/// Y-channel SSIM after removing `shave` border pixels.
pub fn ssim_y(sr: &ImageRGB, hr: &ImageRGB, shave: usize) -> Result<f64> {
    let (a, b) = y_pair(sr, hr, shave)?;
    ssim_planes(&a, &b)
}
