use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{dim_err, EpsrError, Result};
use crate::tensor::{Dihedral, Scalar, Tensor};

/// 8-bit interleaved RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRGB {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageRGB {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return dim_err(format!("image dimensions must be positive, got {width}x{height}"));
        }
        if pixels.len() != 3 * width * height {
            return dim_err(format!(
                "{width}x{height} RGB image needs {} bytes, got {}",
                3 * width * height,
                pixels.len()
            ));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, rgb.repeat(width * height))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x + width > self.width || y + height > self.height {
            return dim_err(format!(
                "crop {width}x{height}+{x}+{y} outside {}x{}",
                self.width, self.height
            ));
        }
        let mut pixels = Vec::with_capacity(3 * width * height);
        for row in y..y + height {
            let start = 3 * (row * self.width + x);
            pixels.extend_from_slice(&self.pixels[start..start + 3 * width]);
        }
        Self::new(width, height, pixels)
    }

    /// Crops to the largest size whose sides are multiples of `scale`.
    pub fn modcrop(&self, scale: usize) -> Result<Self> {
        let (w, h) = (self.width - self.width % scale, self.height - self.height % scale);
        if w == 0 || h == 0 {
            return dim_err(format!("{}x{} image is smaller than scale {scale}", self.width, self.height));
        }
        if (w, h) == (self.width, self.height) {
            return Ok(self.clone());
        }
        self.crop(0, 0, w, h)
    }

    pub fn transform(&self, d: Dihedral) -> Self {
        let (h, w) = d.output_dims(self.height, self.width);
        Self {
            width: w,
            height: h,
            pixels: d.apply_interleaved(&self.pixels, self.height, self.width, 3),
        }
    }

    /// `(1, 3, H, W)` tensor with values in `[0, 1]`.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        let scale = 1.0 / 255.0;
        Tensor::from_fn([1, 3, self.height, self.width], |_, c, y, x| {
            T::from_f64(self.pixels[3 * (y * self.width + x) + c] as f64 * scale)
        })
    }

    /// Clamps a `(1, 3, H, W)` tensor in `[0, 1]` scale and rounds to 8 bits.
    pub fn from_tensor<T: Scalar>(t: &Tensor<T>) -> Result<Self> {
        let s = t.shape();
        if s.n != 1 || s.c != 3 {
            return dim_err(format!("expected a (1, 3, H, W) tensor, got {s}"));
        }
        Self::from_fn(s.w, s.h, |x, y| {
            let q = |c| quantize(t.at(0, c, y, x).as_f64() * 255.0);
            [q(0), q(1), q(2)]
        })
    }
}

/// Rounds half away from zero and saturates to `0..=255`.
#[inline]
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

fn img_err(path: &Path, reason: impl Into<String>) -> EpsrError {
    EpsrError::Image {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads an 8-bit PNG. Grayscale is replicated to RGB, palettes are
/// expanded and alpha is discarded; 16-bit images are rejected.
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageRGB> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| img_err(path, e.to_string()))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| img_err(path, e.to_string()))?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(img_err(path, "16-bit PNG is not supported; convert to 8-bit"));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| img_err(path, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| img_err(path, e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(img_err(path, format!("unsupported bit depth {:?}", info.bit_depth)));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => return Err(img_err(path, format!("unsupported color type {other:?}"))),
    };
    let mut pixels = Vec::with_capacity(3 * w * h);
    for y in 0..h {
        let row = &buf[y * info.line_size..][..w * channels];
        for px in row.chunks(channels) {
            if channels < 3 {
                pixels.extend_from_slice(&[px[0]; 3]);
            } else {
                pixels.extend_from_slice(&px[..3]);
            }
        }
    }
    ImageRGB::new(w, h, pixels).map_err(|e| img_err(path, e.to_string()))
}

/// Writes an 8-bit RGB PNG.
pub fn save_png(img: &ImageRGB, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| img_err(path, e.to_string()))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| img_err(path, e.to_string()))?;
    writer
        .write_image_data(&img.pixels)
        .map_err(|e| img_err(path, e.to_string()))?;
    writer.finish().map_err(|e| img_err(path, e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ImageRGB {
        ImageRGB::from_fn(7, 5, |x, y| [(x * 30) as u8, (y * 50) as u8, (x * y) as u8]).unwrap()
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = sample();
        save_png(&img, &p).unwrap();
        assert_eq!(load_png(&p).unwrap(), img);
    }

    #[test]
    fn grayscale_is_replicated() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        let mut enc = png::Encoder::new(File::create(&p).unwrap(), 2, 1);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[10, 200]).unwrap();
        w.finish().unwrap();
        let img = load_png(&p).unwrap();
        assert_eq!(img.pixels(), &[10, 10, 10, 200, 200, 200]);
    }

    #[test]
    fn sixteen_bit_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let mut enc = png::Encoder::new(File::create(&p).unwrap(), 1, 1);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[0; 6]).unwrap();
        w.finish().unwrap();
        let err = load_png(&p).unwrap_err().to_string();
        assert!(err.contains("16-bit"), "{err}");
        assert!(load_png(dir.path().join("missing.png")).is_err());
    }

    #[test]
    fn tensor_round_trip_and_clamp() {
        let img = sample();
        let t = img.to_tensor::<f32>();
        assert_eq!(ImageRGB::from_tensor(&t).unwrap(), img);
        let wild = t.map(|v| v * 4.0 - 1.5);
        let q = ImageRGB::from_tensor(&wild).unwrap();
        assert!(q.pixels().contains(&0) && q.pixels().contains(&255));
    }

    #[test]
    fn modcrop_and_crop() {
        let img = sample();
        let m = img.modcrop(2).unwrap();
        assert_eq!((m.width(), m.height()), (6, 4));
        assert_eq!(m.pixel(5, 3), img.pixel(5, 3));
        assert!(img.crop(5, 0, 3, 1).is_err());
    }

    #[test]
    fn transform_matches_tensor_transform() {
        let img = sample();
        for d in Dihedral::all() {
            let a = img.transform(d).to_tensor::<f64>();
            let b = d.apply(&img.to_tensor::<f64>());
            assert_eq!(a, b);
        }
    }
}
