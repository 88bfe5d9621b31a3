use std::path::Path;

use rand::Rng;

use crate::error::{EpsrError, Result};
use crate::imaging::{degrade, load_png, read_manifest, DegradationSpec, ImageRGB};
use crate::tensor::{Dihedral, Scalar, Tensor};

/// Seed used when degrading the `index`-th image of a set.
pub fn image_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// One training or evaluation image.
#[derive(Debug, Clone)]
pub struct DataImage {
    pub name: String,
    /// HR cropped to sides divisible by the scale.
    pub hr: ImageRGB,
    /// Paired LR; `None` means it is derived from HR crops on the fly.
    pub lr: Option<ImageRGB>,
}

/// Images plus the degradation that links their LR and HR versions.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub spec: DegradationSpec,
    pub images: Vec<DataImage>,
}

impl Dataset {
    /// BI images without an LR file are degraded per patch; BD and DN images
    /// without one are degraded whole, once, here.
    pub fn new(name: impl Into<String>, spec: DegradationSpec, images: Vec<(String, ImageRGB, Option<ImageRGB>)>, seed: u64) -> Result<Self> {
        let s = spec.scale() as usize;
        let mut out = Vec::with_capacity(images.len());
        for (i, (name, hr, lr)) in images.into_iter().enumerate() {
            let lr = match lr {
                Some(lr) => {
                    let (w, h) = (lr.width() * s, lr.height() * s);
                    if hr.width() < w || hr.height() < h {
                        return Err(EpsrError::Dataset(format!(
                            "{name}: HR {}x{} is smaller than x{s} of LR {}x{}",
                            hr.width(),
                            hr.height(),
                            lr.width(),
                            lr.height()
                        )));
                    }
                    out.push(DataImage {
                        name,
                        hr: hr.crop(0, 0, w, h)?,
                        lr: Some(lr),
                    });
                    continue;
                }
                None if matches!(spec, DegradationSpec::Bi { .. }) => None,
                None => Some(degrade(&hr, spec, image_seed(seed, i))?.to_image()),
            };
            out.push(DataImage {
                name,
                hr: hr.modcrop(s)?,
                lr,
            });
        }
        if out.is_empty() {
            return Err(EpsrError::Dataset("dataset is empty".into()));
        }
        Ok(Self {
            name: name.into(),
            spec,
            images: out,
        })
    }

    pub fn from_manifest(path: impl AsRef<Path>, spec: DegradationSpec, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let mut images = Vec::new();
        for e in read_manifest(path)? {
            let hr = load_png(&e.hr)?;
            let lr = e.lr.as_ref().map(load_png).transpose()?;
            images.push((e.stem(), hr, lr));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(name, spec, images, seed)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn scale(&self) -> usize {
        self.spec.scale() as usize
    }

    /// LR image for evaluation: the paired file, or HR degraded whole.
    pub fn eval_lr(&self, index: usize, seed: u64) -> Result<ImageRGB> {
        let img = &self.images[index];
        match &img.lr {
            Some(lr) => Ok(lr.clone()),
            None => Ok(degrade(&img.hr, self.spec, image_seed(seed, index))?.to_image()),
        }
    }

    fn lr_dims(&self, img: &DataImage) -> (usize, usize) {
        let s = self.scale();
        (img.hr.width() / s, img.hr.height() / s)
    }
}

/// Where one batch item came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOrigin {
    pub image: usize,
    /// LR crop offset; the HR offset is `scale` times this.
    pub x: usize,
    pub y: usize,
    pub transform: Dihedral,
}

/// Aligned LR/HR patches in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SampleBatch<T: Scalar> {
    pub lr: Tensor<T>,
    pub hr: Tensor<T>,
    pub origins: Vec<SampleOrigin>,
}

const MAX_RESAMPLES: usize = 100;

/// Draws `batch` random aligned crops, each with a random dihedral transform.
/// Images too small for the patch are skipped and redrawn, up to a bound.
pub fn sample_batch<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset,
    lr_patch: usize,
    batch: usize,
    rng: &mut R,
) -> Result<SampleBatch<T>> {
    let s = data.scale();
    let hp = lr_patch * s;
    let mut lrs = Vec::with_capacity(batch);
    let mut hrs = Vec::with_capacity(batch);
    let mut origins = Vec::with_capacity(batch);
    let mut misses = 0;
    while origins.len() < batch {
        let index = rng.random_range(0..data.len());
        let img = &data.images[index];
        let (lw, lh) = data.lr_dims(img);
        if lw < lr_patch || lh < lr_patch {
            misses += 1;
            if misses > MAX_RESAMPLES {
                return Err(EpsrError::Dataset(format!(
                    "no image fits a {lr_patch}x{lr_patch} LR patch after {MAX_RESAMPLES} draws"
                )));
            }
            continue;
        }
        let x = rng.random_range(0..=lw - lr_patch);
        let y = rng.random_range(0..=lh - lr_patch);
        let transform = Dihedral::from_id(rng.random_range(0..8)).expect("id below 8");
        let hr = img.hr.crop(x * s, y * s, hp, hp)?;
        let lr = match &img.lr {
            Some(lr) => lr.crop(x, y, lr_patch, lr_patch)?,
            None => degrade(&hr, data.spec, 0)?.to_image(),
        };
        hrs.push(transform.apply(&hr.to_tensor::<T>()));
        lrs.push(transform.apply(&lr.to_tensor::<T>()));
        origins.push(SampleOrigin { image: index, x, y, transform });
    }
    Ok(SampleBatch {
        lr: Tensor::stack(&lrs)?,
        hr: Tensor::stack(&hrs)?,
        origins,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn image(w: usize, h: usize, k: usize) -> ImageRGB {
        ImageRGB::from_fn(w, h, |x, y| [((x * 7 + k) % 256) as u8, ((y * 5) % 256) as u8, ((x * y + k) % 256) as u8]).unwrap()
    }

    fn bi_set() -> Dataset {
        let imgs = vec![("a".into(), image(40, 36, 1), None), ("b".into(), image(33, 50, 2), None)];
        Dataset::new("t", DegradationSpec::bi(2).unwrap(), imgs, 0).unwrap()
    }

    #[test]
    fn hr_is_modcropped() {
        let d = bi_set();
        assert_eq!((d.images[1].hr.width(), d.images[1].hr.height()), (32, 50));
    }

    #[test]
    fn seeded_batches_repeat() {
        let d = bi_set();
        let a: SampleBatch<f32> = sample_batch(&d, 8, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b: SampleBatch<f32> = sample_batch(&d, 8, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.lr, b.lr);
        assert_eq!(a.hr, b.hr);
        assert_eq!(a.origins, b.origins);
        assert_eq!(a.lr.shape().dims(), [4, 3, 8, 8]);
        assert_eq!(a.hr.shape().dims(), [4, 3, 16, 16]);
    }

    #[test]
    fn crops_are_aligned() {
        let d = bi_set();
        let b: SampleBatch<f64> = sample_batch(&d, 6, 16, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for (i, o) in b.origins.iter().enumerate() {
            let hr = d.images[o.image].hr.crop(2 * o.x, 2 * o.y, 12, 12).unwrap();
            let lr = degrade(&hr, d.spec, 0).unwrap().to_image();
            let inv = o.transform.inverse();
            assert_eq!(inv.apply(&b.hr.batch_item(i).unwrap()), hr.to_tensor());
            assert_eq!(inv.apply(&b.lr.batch_item(i).unwrap()), lr.to_tensor());
        }
    }

    #[test]
    fn paired_lr_offsets_scale() {
        let hr = image(30, 30, 3);
        let lr = degrade(&hr, DegradationSpec::Dn, 9).unwrap().to_image();
        let d = Dataset::new("p", DegradationSpec::Dn, vec![("x".into(), hr.clone(), Some(lr.clone()))], 0).unwrap();
        let b: SampleBatch<f64> = sample_batch(&d, 4, 6, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for (i, o) in b.origins.iter().enumerate() {
            let inv = o.transform.inverse();
            assert_eq!(inv.apply(&b.lr.batch_item(i).unwrap()), lr.crop(o.x, o.y, 4, 4).unwrap().to_tensor());
            assert_eq!(inv.apply(&b.hr.batch_item(i).unwrap()), hr.crop(3 * o.x, 3 * o.y, 12, 12).unwrap().to_tensor());
        }
    }

    #[test]
    fn whole_image_degradation_for_dn() {
        let d = Dataset::new("p", DegradationSpec::Dn, vec![("x".into(), image(31, 30, 0), None)], 4).unwrap();
        let lr = d.images[0].lr.as_ref().unwrap();
        assert_eq!((lr.width(), lr.height()), (10, 10));
        assert_eq!(*lr, d.eval_lr(0, 4).unwrap());
    }

    #[test]
    fn too_small_is_an_error() {
        let d = bi_set();
        let r: Result<SampleBatch<f32>> = sample_batch(&d, 30, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(EpsrError::Dataset(_))));
        assert!(Dataset::new("e", DegradationSpec::bi(2).unwrap(), vec![], 0).is_err());
    }
}
