//! Bicubic resampling following MATLAB's `imresize` conventions: Keys cubic
//! with `a = -0.5`, kernel widening when shrinking, symmetric (mirrored)
//! borders and the half-pixel centre mapping.

use rayon::prelude::*;

use super::image::ImageRGB;
use super::raster::Raster;
use crate::error::{dim_err, Result};

const KERNEL_WIDTH: f64 = 4.0;

/// Keys cubic convolution kernel with `a = -0.5`.
pub fn cubic(x: f64) -> f64 {
    let ax = x.abs();
    let ax2 = ax * ax;
    let ax3 = ax2 * ax;
    if ax <= 1.0 {
        1.5 * ax3 - 2.5 * ax2 + 1.0
    } else if ax <= 2.0 {
        -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0
    } else {
        0.0
    }
}

/// Mirrors an out-of-range 0-based index back into `0..len`, repeating the
/// edge sample.
pub(crate) fn mirror_index(i: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Per-output-sample source indices and normalized weights.
#[derive(Debug, Clone)]
pub struct Contributions {
    pub taps: usize,
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

pub fn contributions(in_len: usize, out_len: usize, antialias: bool) -> Contributions {
    let scale = out_len as f64 / in_len as f64;
    let shrink = scale < 1.0 && antialias;
    let width = if shrink { KERNEL_WIDTH / scale } else { KERNEL_WIDTH };
    let taps = width.ceil() as usize + 2;
    let mut indices = Vec::with_capacity(out_len * taps);
    let mut weights = Vec::with_capacity(out_len * taps);
    for o in 1..=out_len {
        let u = o as f64 / scale + 0.5 * (1.0 - 1.0 / scale);
        let left = (u - width / 2.0).floor() as isize;
        let start = weights.len();
        for j in 0..taps as isize {
            let idx = left + j;
            let d = u - idx as f64;
            let w = if shrink { scale * cubic(scale * d) } else { cubic(d) };
            weights.push(w);
            indices.push(mirror_index(idx - 1, in_len));
        }
        let total: f64 = weights[start..].iter().sum();
        weights[start..].iter_mut().for_each(|w| *w /= total);
    }
    Contributions { taps, indices, weights }
}

fn resize_rows(src: &[f64], w: usize, h: usize, out_h: usize) -> Vec<f64> {
    let c = contributions(h, out_h, true);
    let mut out = vec![0.0; w * out_h];
    for (oy, row) in out.chunks_exact_mut(w).enumerate() {
        for t in 0..c.taps {
            let k = oy * c.taps + t;
            let wt = c.weights[k];
            if wt == 0.0 {
                continue;
            }
            let srow = &src[c.indices[k] * w..][..w];
            for (d, s) in row.iter_mut().zip(srow) {
                *d += wt * s;
            }
        }
    }
    out
}

fn resize_cols(src: &[f64], w: usize, h: usize, out_w: usize) -> Vec<f64> {
    let c = contributions(w, out_w, true);
    let mut out = vec![0.0; out_w * h];
    for (y, row) in out.chunks_exact_mut(out_w).enumerate() {
        let srow = &src[y * w..][..w];
        for (ox, d) in row.iter_mut().enumerate() {
            let base = ox * c.taps;
            let mut acc = 0.0;
            for t in 0..c.taps {
                acc += c.weights[base + t] * srow[c.indices[base + t]];
            }
            *d = acc;
        }
    }
    out
}

fn resize_plane(src: &[f64], w: usize, h: usize, out_w: usize, out_h: usize) -> Vec<f64> {
    let sy = out_h as f64 / h as f64;
    let sx = out_w as f64 / w as f64;
    // The dimension shrunk most goes first; ties resize rows first.
    if sy <= sx {
        let tmp = if out_h == h { src.to_vec() } else { resize_rows(src, w, h, out_h) };
        if out_w == w {
            tmp
        } else {
            resize_cols(&tmp, w, out_h, out_w)
        }
    } else {
        let tmp = if out_w == w { src.to_vec() } else { resize_cols(src, w, h, out_w) };
        if out_h == h {
            tmp
        } else {
            resize_rows(&tmp, out_w, h, out_h)
        }
    }
}

/// Resizes a raster to `out_w x out_h` without any rounding.
pub fn resize(src: &Raster, out_w: usize, out_h: usize) -> Result<Raster> {
    if out_w == 0 || out_h == 0 {
        return dim_err(format!("resize target must be positive, got {out_w}x{out_h}"));
    }
    let (w, h) = (src.width(), src.height());
    let planes: Vec<Vec<f64>> = (0..3)
        .into_par_iter()
        .map(|c| resize_plane(src.plane(c), w, h, out_w, out_h))
        .collect();
    Raster::new(out_w, out_h, planes.concat())
}

/// Bicubic resize of an 8-bit image; the result stays real-valued.
pub fn bicubic_resize(img: &ImageRGB, out_w: usize, out_h: usize) -> Result<Raster> {
    resize(&Raster::from_image(img), out_w, out_h)
}

/// Resizes both sides by an integer factor up (`up = true`) or down.
pub fn rescale(src: &Raster, factor: usize, up: bool) -> Result<Raster> {
    let (w, h) = (src.width(), src.height());
    if up {
        resize(src, w * factor, h * factor)
    } else {
        if w % factor != 0 || h % factor != 0 {
            return dim_err(format!("{w}x{h} is not divisible by {factor}"));
        }
        resize(src, w / factor, h / factor)
    }
}
