use rayon::prelude::*;

use super::data::Dataset;
use crate::error::{dim_err, Result};
use crate::imaging::{bicubic_resize, ImageRGB};
use crate::metrics::{psnr_y, ssim_y, ImageScore, MetricReport};
use crate::model::Epsr;

/// Anything that maps an 8-bit LR image to an 8-bit SR image.
pub trait SrModel: Sync {
    fn scale(&self) -> usize;

    fn super_resolve(&self, lr: &ImageRGB) -> Result<ImageRGB>;
}

/// The bicubic baseline.
#[derive(Debug, Clone, Copy)]
pub struct BicubicUpsampler {
    pub scale: usize,
}

impl SrModel for BicubicUpsampler {
    fn scale(&self) -> usize {
        self.scale
    }

    fn super_resolve(&self, lr: &ImageRGB) -> Result<ImageRGB> {
        Ok(bicubic_resize(lr, lr.width() * self.scale, lr.height() * self.scale)?.to_image())
    }
}

/// A network, run once or as an eight-way self-ensemble.
#[derive(Debug, Clone, Copy)]
pub struct EpsrUpsampler<'a> {
    pub net: &'a Epsr<f32>,
    pub ensemble: bool,
}

impl SrModel for EpsrUpsampler<'_> {
    fn scale(&self) -> usize {
        self.net.config.scale as usize
    }

    fn super_resolve(&self, lr: &ImageRGB) -> Result<ImageRGB> {
        let x = lr.to_tensor::<f32>();
        let y = if self.ensemble {
            self.net.self_ensemble(&x)?
        } else {
            self.net.forward(&x)?
        };
        ImageRGB::from_tensor(&y)
    }
}

/// An LR input, its HR reference and a display name.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub name: String,
    pub lr: ImageRGB,
    pub hr: ImageRGB,
}

/// Scores each pair, preserving order.
pub fn evaluate_pairs(model: &dyn SrModel, pairs: &[EvalPair], shave: usize) -> Result<Vec<ImageScore>> {
    pairs
        .par_iter()
        .map(|p| {
            let sr = model.super_resolve(&p.lr)?;
            Ok(ImageScore {
                name: p.name.clone(),
                psnr: psnr_y(&sr, &p.hr, shave)?,
                ssim: ssim_y(&sr, &p.hr, shave)?,
            })
        })
        .collect()
}

/// Degrades (or loads) every LR input, super-resolves it and scores it
/// against the HR image on the Y channel with `shave` border pixels removed.
pub fn evaluate(model: &dyn SrModel, data: &Dataset, seed: u64, shave: usize) -> Result<MetricReport> {
    if model.scale() != data.scale() {
        return dim_err(format!("model scale x{} does not match dataset x{}", model.scale(), data.scale()));
    }
    let pairs = (0..data.len())
        .map(|i| {
            Ok(EvalPair {
                name: data.images[i].name.clone(),
                lr: data.eval_lr(i, seed)?,
                hr: data.images[i].hr.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        dataset: data.name.clone(),
        scale: data.spec.scale(),
        degradation: data.spec.tag().into(),
        images: evaluate_pairs(model, &pairs, shave)?,
    })
}
