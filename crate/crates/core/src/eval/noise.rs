use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Additive white Gaussian noise with standard deviation `sigma`.
    Awgn { sigma: f64 },
    /// Multiplicative unit-mean Gamma speckle with `looks` looks.
    Speckle { looks: f64 },
}

/// Seeded noise simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn apply(&self, img: &Image) -> Result<Image> {
        match self.kind {
            NoiseKind::Awgn { sigma } => add_awgn(img, sigma, self.seed),
            NoiseKind::Speckle { looks } => add_speckle(img, looks, self.seed),
        }
    }
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every pixel. No clipping.
pub fn add_awgn(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = img
        .pixels()
        .iter()
        .map(|&v| v + normal.sample(&mut rng))
        .collect();
    Ok(Image::new(img.height(), img.width(), pixels)?.with_dynamic_range(img.dynamic_range()))
}

/// Multiplies every pixel by an independent `Gamma(L, 1/L)` variate
/// (unit mean, variance `1/L`; exponential for `L = 1`).
pub fn add_speckle(img: &Image, looks: f64, seed: u64) -> Result<Image> {
    if !(looks.is_finite() && looks >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "looks must be at least 1, got {looks}"
        )));
    }
    if let Some(v) = img.pixels().iter().find(|&&v| v <= 0.0) {
        return Err(Error::Domain(format!(
            "speckle needs strictly positive intensities, found {v}"
        )));
    }
    let gamma = Gamma::new(looks, 1.0 / looks).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = img
        .pixels()
        .iter()
        .map(|&v| v * gamma.sample(&mut rng))
        .collect();
    Ok(Image::new(img.height(), img.width(), pixels)?.with_dynamic_range(img.dynamic_range()))
}
