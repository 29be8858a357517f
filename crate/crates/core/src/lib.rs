//! Patch-group image restoration.
//!
//! The restoration model works on groups of mutually similar image
//! patches. Each group gets its own square sparsifying transform, learned
//! with a closed-form log-det update, and the transform-domain
//! reconstruction of the group is then cleaned up in the image domain by
//! weighted singular value shrinkage. Aggregating all processed groups
//! yields the next image estimate; a handful of outer iterations suffice.
//!
//! Two degradations are supported end to end: additive Gaussian noise
//! ([`pipeline::denoise`], [`pipeline::denoise_color`]) and missing
//! pixels ([`pipeline::inpaint`]). Everything is deterministic given the
//! inputs and the configured seed.

pub mod error;
pub mod image;
pub mod lowrank;
pub mod metrics;
pub mod numerics;
pub mod patch;
pub mod pipeline;
pub mod synth;
pub mod transform;

#[cfg(feature = "oracles")]
pub mod oracles;

pub use error::{Error, Result};
pub use image::{
    add_gaussian_noise, clamp_quantize, derive_seed, load_image, make_mask, save_image, Image,
    PixelMask,
};
pub use metrics::{metric_pair, mse, psnr, ssim, MetricPair, Psnr, PsnrMode};
pub use numerics::{Mat, SvdResult};
pub use pipeline::{
    denoise, denoise_color, denoise_color_with_reference, denoise_with_reference, fill_missing,
    inpaint, inpaint_with_reference, schedule_for, DenoiseConfig, ParamSchedule, RestoreReport,
};
