//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by restoration, I/O and numeric kernels.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ── numeric kernels ──────────────────────────────────────────────
    #[error("singular value decomposition did not converge for a {rows}x{cols} matrix")]
    SvdNonConvergence { rows: usize, cols: usize },

    #[error("matrix is not positive definite: leading minor of order {order} is not positive")]
    NotPositiveDefinite { order: usize },

    #[error("matrix is not symmetric at ({row},{col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{len} is not a perfect square patch vector length")]
    NotPerfectSquare { len: usize },

    // ── images and degradations ──────────────────────────────────────
    #[error("{path}: malformed header at byte {offset}: {reason}")]
    MalformedHeader {
        path: PathBuf,
        offset: usize,
        reason: String,
    },

    #[error("{path}: truncated payload at byte {offset}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: unsupported maxval {maxval} at byte {offset} (only 255 is supported)")]
    UnsupportedMaxval {
        path: PathBuf,
        offset: usize,
        maxval: u32,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("pixel value {value} at index {index} is not an integer in [0,255]; quantize before saving")]
    UnquantizedPixel { index: usize, value: f64 },

    #[error("noise sigma must be non-negative, got {sigma}")]
    NegativeSigma { sigma: f64 },

    #[error("missing rate {rate} is outside [0,1]")]
    RateOutOfRange { rate: f64 },

    #[error("dimension mismatch: {expected:?} vs {found:?} (width, height, channels)")]
    DimMismatch {
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },

    // ── patching ─────────────────────────────────────────────────────
    #[error("patch side {side} exceeds image dimensions {width}x{height}")]
    PatchTooLarge {
        side: usize,
        width: usize,
        height: usize,
    },

    #[error("similar-patch search found only {found} candidates after widening, need {need}")]
    NotEnoughCandidates { found: usize, need: usize },

    #[error("aggregation left {count} pixels uncovered and no fallback image was supplied")]
    CoverageGap { count: usize },

    // ── transforms and shrinkage ─────────────────────────────────────
    #[error("sparsity {sparsity} exceeds transform dimension {dim}")]
    SparsityOutOfRange { sparsity: usize, dim: usize },

    #[error("log-det weight lambda must be positive, got {lambda}")]
    NonPositiveLambda { lambda: f64 },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    // ── pipeline and configuration ───────────────────────────────────
    #[error("noise sigma must be positive, got {sigma}")]
    NonPositiveSigma { sigma: f64 },

    #[error("expected an image with {expected} channel(s), found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("mask leaves no observed pixels")]
    FullyMasked,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
