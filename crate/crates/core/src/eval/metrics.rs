use crate::error::{Error, Result};
use crate::image::{Image, DEFAULT_DYNAMIC_RANGE};

/// SSIM stabilising constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub c1: f64,
    pub c2: f64,
    pub dynamic_range: f64,
}

impl MetricConfig {
    /// `c1 = (0.01 R)^2`, `c2 = (0.03 R)^2`.
    pub fn for_range(dynamic_range: f64) -> Self {
        Self {
            c1: (0.01 * dynamic_range).powi(2),
            c2: (0.03 * dynamic_range).powi(2),
            dynamic_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "SSIM constants must be positive, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self::for_range(DEFAULT_DYNAMIC_RANGE)
    }
}

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

pub fn mse(reference: &Image, test: &Image) -> Result<f64> {
    check_shapes(reference, test)?;
    let n = reference.pixels().len() as f64;
    Ok(reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// `20 log10(max S) - 10 log10(MSE)`, with the peak taken from the
/// reference image. Identical images give `+inf`.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    psnr_with_peak(reference, test, reference.max())
}

/// PSNR against an explicit peak value (e.g. 255).
pub fn psnr_with_peak(reference: &Image, test: &Image, peak: f64) -> Result<f64> {
    let e = mse(reference, test)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * peak.log10() - 10.0 * e.log10())
}

/// Means, variances and covariance of two equal-length samples.
fn moments(a: impl Iterator<Item = (f64, f64)> + Clone, n: f64) -> (f64, f64, f64, f64, f64) {
    let (sa, sb) = a.clone().fold((0.0, 0.0), |(x, y), (p, q)| (x + p, y + q));
    let (ua, ub) = (sa / n, sb / n);
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (p, q) in a {
        let (da, db) = (p - ua, q - ub);
        va += da * da;
        vb += db * db;
        cov += da * db;
    }
    (ua, ub, va / n, vb / n, cov / n)
}

fn ssim_formula(ua: f64, ub: f64, va: f64, vb: f64, cov: f64, cfg: &MetricConfig) -> f64 {
    ((2.0 * ua * ub + cfg.c1) * (2.0 * cov + cfg.c2))
        / ((ua * ua + ub * ub + cfg.c1) * (va + vb + cfg.c2))
}

/// SSIM with a single window spanning the whole image: global means,
/// variances and covariance.
pub fn ssim(reference: &Image, test: &Image, cfg: &MetricConfig) -> Result<f64> {
    check_shapes(reference, test)?;
    cfg.validate()?;
    if reference.pixels() == test.pixels() {
        return Ok(1.0);
    }
    let n = reference.pixels().len() as f64;
    let pairs = reference.pixels().iter().copied().zip(test.pixels().iter().copied());
    let (ua, ub, va, vb, cov) = moments(pairs, n);
    Ok(ssim_formula(ua, ub, va, vb, cov, cfg))
}

/// Conventional mean SSIM over 11x11 Gaussian windows (sigma 1.5), valid
/// positions only.
pub fn ssim_windowed(reference: &Image, test: &Image, cfg: &MetricConfig) -> Result<f64> {
    const EDGE: usize = 11;
    const SIGMA: f64 = 1.5;
    check_shapes(reference, test)?;
    cfg.validate()?;
    if reference.height() < EDGE || reference.width() < EDGE {
        return Err(Error::Dimension(format!(
            "windowed SSIM needs at least {EDGE}x{EDGE} pixels"
        )));
    }
    let half = (EDGE / 2) as f64;
    let mut kernel = [0.0; EDGE * EDGE];
    for r in 0..EDGE {
        for c in 0..EDGE {
            let d2 = (r as f64 - half).powi(2) + (c as f64 - half).powi(2);
            kernel[r * EDGE + c] = (-d2 / (2.0 * SIGMA * SIGMA)).exp();
        }
    }
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (h, w) = (reference.height(), reference.width());
    let mut acc = 0.0;
    let mut count = 0usize;
    for r0 in 0..=h - EDGE {
        for c0 in 0..=w - EDGE {
            let (mut ua, mut ub) = (0.0, 0.0);
            for r in 0..EDGE {
                for c in 0..EDGE {
                    let k = kernel[r * EDGE + c];
                    ua += k * reference.get(r0 + r, c0 + c);
                    ub += k * test.get(r0 + r, c0 + c);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for r in 0..EDGE {
                for c in 0..EDGE {
                    let k = kernel[r * EDGE + c];
                    let da = reference.get(r0 + r, c0 + c) - ua;
                    let db = test.get(r0 + r, c0 + c) - ub;
                    va += k * da * da;
                    vb += k * db * db;
                    cov += k * da * db;
                }
            }
            acc += ssim_formula(ua, ub, va, vb, cov, cfg);
            count += 1;
        }
    }
    Ok(acc / count as f64)
}
