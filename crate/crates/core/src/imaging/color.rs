use super::image::ImageRGB;
use super::raster::Raster;

/// ITU-R BT.601 studio-swing luma from 0–255 RGB.
#[inline]
pub fn rgb_to_y(r: f64, g: f64, b: f64) -> f64 {
    16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0
}

/// Real-valued Y plane of an 8-bit image, row-major.
pub fn rgb_to_ycbcr_y(img: &ImageRGB) -> Vec<f64> {
    img.pixels()
        .chunks_exact(3)
        .map(|p| rgb_to_y(p[0] as f64, p[1] as f64, p[2] as f64))
        .collect()
}

pub fn raster_y(r: &Raster) -> Vec<f64> {
    let (p0, p1, p2) = (r.plane(0), r.plane(1), r.plane(2));
    (0..p0.len()).map(|i| rgb_to_y(p0[i], p1[i], p2[i])).collect()
}
