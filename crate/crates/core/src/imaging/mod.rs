//! Images, color conversion, resampling and degradation models.

mod augment;
mod blur;
mod color;
mod degrade;
mod image;
mod manifest;
mod noise;
mod raster;
mod resize;
mod sobel;

pub use augment::{augment, augment_images};
pub use blur::{gaussian_blur, gaussian_kernel_1d, gaussian_kernel_2d, BD_KERNEL_SIZE, BD_SIGMA};
pub use color::{raster_y, rgb_to_y, rgb_to_ycbcr_y};
pub use degrade::{degrade, degrade_raster, DegradationSpec, Downsample, BD_DN_SCALE};
pub use image::{load_png, quantize, save_png, ImageRGB};
pub use manifest::{parse_manifest, read_manifest, write_manifest, ManifestEntry};
pub use noise::{add_gaussian_noise, noise_field, DN_SIGMA};
pub use raster::Raster;
pub use resize::{bicubic_resize, contributions, cubic, rescale, resize, Contributions};
pub use sobel::{sobel, sobel_gradients, sobel_weight};
