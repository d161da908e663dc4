//! Quality metrics and noise simulators used by benchmarks and tests.

mod metrics;
mod noise;

pub use metrics::{mse, psnr, psnr_with_peak, ssim, ssim_windowed, MetricConfig};
pub use noise::{add_awgn, add_speckle, NoiseKind, NoiseModel};
