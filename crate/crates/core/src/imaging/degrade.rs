use std::fmt;
use std::str::FromStr;

use super::blur::{gaussian_blur, BD_KERNEL_SIZE, BD_SIGMA};
use super::image::ImageRGB;
use super::noise::{add_gaussian_noise, DN_SIGMA};
use super::raster::Raster;
use super::resize::resize;
use crate::error::{EpsrError, Result};

/// Scale used by the blur-downscale and noise models.
pub const BD_DN_SCALE: u32 = 3;

/// How the blurred image is reduced in the BD model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Downsample {
    #[default]
    Bicubic,
    /// Keeps every `scale`-th pixel starting at the top-left one.
    Decimate,
}

/// Degradation model turning an HR image into its LR counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradationSpec {
    /// Bicubic downscale by 2, 3 or 4.
    Bi { scale: u32 },
    /// 7x7 Gaussian blur (sigma 1.6), then x3 downscale.
    Bd { downsample: Downsample },
    /// Bicubic x3 downscale, then Gaussian noise (sigma 30).
    Dn,
}

impl DegradationSpec {
    pub fn bi(scale: u32) -> Result<Self> {
        if !matches!(scale, 2..=4) {
            return Err(EpsrError::Config(format!("BI scale must be 2, 3 or 4, got {scale}")));
        }
        Ok(Self::Bi { scale })
    }

    pub fn bd() -> Self {
        Self::Bd {
            downsample: Downsample::Bicubic,
        }
    }

    pub fn scale(self) -> u32 {
        match self {
            Self::Bi { scale } => scale,
            Self::Bd { .. } | Self::Dn => BD_DN_SCALE,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::Bi { .. } => "BI",
            Self::Bd { .. } => "BD",
            Self::Dn => "DN",
        }
    }

    /// Parses a tag (`BI`, `BD`, `BD-decimate`, `DN`) together with a scale.
    /// BD and DN only exist at x3.
    pub fn from_tag(tag: &str, scale: u32) -> Result<Self> {
        let spec = match tag.to_ascii_uppercase().as_str() {
            "BI" => return Self::bi(scale),
            "BD" => Self::bd(),
            "BD-DECIMATE" => Self::Bd {
                downsample: Downsample::Decimate,
            },
            "DN" => Self::Dn,
            other => return Err(EpsrError::Config(format!("unknown degradation `{other}`"))),
        };
        if scale != BD_DN_SCALE {
            return Err(EpsrError::Config(format!("{} is defined only for x3, got x{scale}", spec.tag())));
        }
        Ok(spec)
    }

    /// `<stem>_x<scale>_<tag>.png`
    pub fn lr_file_name(self, stem: &str) -> String {
        format!("{stem}_x{}_{}.png", self.scale(), self.tag())
    }
}

impl fmt::Display for DegradationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bd {
                downsample: Downsample::Decimate,
            } => write!(f, "BD-decimate x{}", self.scale()),
            _ => write!(f, "{} x{}", self.tag(), self.scale()),
        }
    }
}

impl FromStr for DegradationSpec {
    type Err = EpsrError;

    /// Accepts `BI`, `BIx4`, `BD`, `DN`, `BD-decimate` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.strip_prefix("bix") {
            Some(n) => {
                let scale = n
                    .parse()
                    .map_err(|_| EpsrError::Config(format!("bad BI scale in `{s}`")))?;
                Self::bi(scale)
            }
            None if lower == "bi" => Self::bi(2),
            None => Self::from_tag(&lower, BD_DN_SCALE),
        }
    }
}

fn decimate(src: &Raster, factor: usize) -> Result<Raster> {
    Raster::from_fn(src.width() / factor, src.height() / factor, |c, y, x| {
        src.at(c, y * factor, x * factor)
    })
}

/// Crops `img` to sides divisible by `scale`, then applies the model. The
/// result is real-valued; quantize with [`Raster::to_image`] when emitting.
pub fn degrade_raster(hr: &Raster, spec: DegradationSpec, seed: u64) -> Result<Raster> {
    let s = spec.scale() as usize;
    let (w, h) = (hr.width() - hr.width() % s, hr.height() - hr.height() % s);
    if w == 0 || h == 0 {
        return Err(EpsrError::Dimension(format!(
            "{}x{} image is smaller than scale {s}",
            hr.width(),
            hr.height()
        )));
    }
    let cropped;
    let hr = if (w, h) == (hr.width(), hr.height()) {
        hr
    } else {
        cropped = hr.crop(0, 0, w, h)?;
        &cropped
    };
    let (lw, lh) = (w / s, h / s);
    match spec {
        DegradationSpec::Bi { .. } => resize(hr, lw, lh),
        DegradationSpec::Bd { downsample } => {
            let blurred = gaussian_blur(hr, BD_KERNEL_SIZE, BD_SIGMA)?;
            match downsample {
                Downsample::Bicubic => resize(&blurred, lw, lh),
                Downsample::Decimate => decimate(&blurred, s),
            }
        }
        DegradationSpec::Dn => add_gaussian_noise(&resize(hr, lw, lh)?, DN_SIGMA, seed),
    }
}

pub fn degrade(img: &ImageRGB, spec: DegradationSpec, seed: u64) -> Result<Raster> {
    degrade_raster(&Raster::from_image(img), spec, seed)
}
