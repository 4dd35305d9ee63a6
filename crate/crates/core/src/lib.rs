//! Salt-and-pepper impulse noise removal for 8-bit grayscale images.
//!
//! The restoration pipeline ([`namf`]) has two stages:
//!
//! 1. [`detector`] flags pixels at 0 or 255 whose adaptive window contains a
//!    non-extreme value, or whose fully extreme window is not dominated by
//!    their own value. [`stage1`] replaces each flagged pixel by the mean of
//!    the unflagged pixels in that window, falling back to its three
//!    already-restored upper/left neighbours.
//! 2. [`nlm`] re-estimates the flagged pixels with non-local means, giving
//!    the pixel itself zero weight and deriving the smoothing parameter from
//!    the flagged fraction.
//!
//! Around it: noise injection ([`noise`]), a 3x3 median baseline
//! ([`median`]), PSNR/SSIM ([`metrics`]), PGM/PNG I/O ([`io`]) and a
//! density-sweep harness ([`sweep`]).

pub mod cli;
pub mod detector;
pub mod error;
pub mod image;
pub mod io;
pub mod median;
pub mod metrics;
pub mod nlm;
pub mod noise;
pub mod pipeline;
pub mod stage1;
pub mod sweep;

pub use detector::{detect, DetectionResult, DetectorParams};
pub use error::{Error, Result};
pub use image::{FloatImage, GrayImage, PadReflect, PixelMask};
pub use io::{load_image, save_image};
pub use median::median_filter;
pub use metrics::{evaluate, mse, psnr, ssim, MetricReport};
pub use nlm::{nlm_restore_fast, nlm_restore_naive, smoothing_h, NlmParams};
pub use noise::{inject_sap, NoiseSpec};
pub use pipeline::{namf, namf_detailed, Method, NamfOutput, NamfParams};
pub use stage1::{restore_stage1, Stage1Output};
pub use sweep::{run_sweep, RunConfig, SweepResult, SweepRow};
