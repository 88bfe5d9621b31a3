use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::raster::Raster;
use crate::error::{EpsrError, Result};

pub const DN_SIGMA: f64 = 30.0;

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(EpsrError::Config(format!("noise sigma must be non-negative, got {sigma}")));
    }
    Ok(())
}

/// `len` i.i.d. zero-mean Gaussian samples.
pub fn noise_field<R: Rng + ?Sized>(len: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| EpsrError::Config(format!("invalid noise sigma {sigma}: {e}")))?;
    Ok((0..len).map(|_| normal.sample(rng)).collect())
}

/// Adds noise per channel per pixel (planar order) and clips to `[0, 255]`.
pub fn add_gaussian_noise(src: &Raster, sigma: f64, seed: u64) -> Result<Raster> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(src.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = noise_field(src.data().len(), sigma, &mut rng)?;
    let mut out = src.clone();
    for (v, n) in out.data_mut().iter_mut().zip(noise) {
        *v = (*v + n).clamp(0.0, 255.0);
    }
    Ok(out)
}
