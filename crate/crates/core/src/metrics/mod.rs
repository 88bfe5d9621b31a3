//! Training losses and Y-channel quality metrics.

mod loss;
mod quality;
mod report;

pub use loss::{gradient_loss, l1_loss, total_loss, LossReport, GRADIENT_WEIGHT};
pub use quality::{psnr_planes, psnr_y, ssim_planes, ssim_y, Plane, SSIM_SIGMA, SSIM_WINDOW};
pub use report::{ImageScore, MetricReport};
