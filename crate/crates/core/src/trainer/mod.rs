//! Patch sampling, optimisation, the training loop and evaluation.

mod adam;
mod config;
mod data;
mod eval;
mod train;

pub use adam::{adam_step, AdamParams};
pub use config::{lr_at, TrainConfig};
pub use data::{image_seed, sample_batch, DataImage, Dataset, SampleBatch, SampleOrigin};
pub use eval::{evaluate, evaluate_pairs, BicubicUpsampler, EpsrUpsampler, EvalPair, SrModel};
pub use train::{format_history, parse_history, train, EvalPoint, HistoryRow, TrainOutcome, TrainState, Trainer};
