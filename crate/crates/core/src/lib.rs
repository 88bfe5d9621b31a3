//! Edge-profile single-image super-resolution.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: NCHW tensors, numeric kernels and reverse-mode autodiff.
//! * [`model`]: the network (attention residual blocks, edge-profile and
//!   context modules, fractal skip connections, upscaling) plus parameter
//!   storage and checkpoints.
//! * [`imaging`]: PNG I/O, color conversion, resampling, degradation models,
//!   Sobel gradients and dihedral augmentation.
//! * [`metrics`]: training losses and Y-channel PSNR/SSIM.
//! * [`trainer`]: patch sampling, Adam, the learning-rate schedule, the
//!   training loop and evaluation.

pub mod error;
pub mod imaging;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod trainer;

pub use error::{EpsrError, Result};
pub use model::{Epsr, EpsrConfig, ParamStore};
pub use tensor::{Dihedral, Eager, Graph, Scalar, Shape, Tape, Tensor, Var};
