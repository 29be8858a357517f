//! PSNR and SSIM.
//!
//! `psnr` has two modes: [`PsnrMode::Standard`] is the usual
//! `10 log10(255^2 / MSE)` and is what every threshold in this crate is
//! stated in; [`PsnrMode::Paper`] computes `10 log10(255 / MSE)` and
//! exists only so externally reported numbers using that convention can
//! be reproduced and inspected. SSIM uses uniform 8x8 sliding windows
//! (stride 1) with the reference constants `C1 = (0.01*255)^2`,
//! `C2 = (0.03*255)^2`.

use crate::error::Result;
use crate::image::Image;

const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Peak signal-to-noise ratio with an explicit marker for identical
/// inputs (infinite PSNR).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Identical,
    Db(f64),
}

impl Psnr {
    /// Numeric value in dB; positive infinity for identical inputs.
    pub fn db(&self) -> f64 {
        match self {
            Psnr::Identical => f64::INFINITY,
            Psnr::Db(v) => *v,
        }
    }

    pub fn is_identical(&self) -> bool {
        matches!(self, Psnr::Identical)
    }
}

impl std::fmt::Display for Psnr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Psnr::Identical => write!(f, "inf"),
            Psnr::Db(v) => write!(f, "{v:.4}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsnrMode {
    #[default]
    Standard,
    Paper,
}

/// PSNR and SSIM for one image pair.
#[derive(Debug, Clone, Copy)]
pub struct MetricPair {
    pub psnr: Psnr,
    pub ssim: f64,
}

/// Mean squared error over all samples.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.same_dims(b)?;
    let n = a.data().len() as f64;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

/// PSNR from a mean squared error.
pub fn psnr_from_mse(mse: f64, mode: PsnrMode) -> Psnr {
    if mse == 0.0 {
        return Psnr::Identical;
    }
    let peak = match mode {
        PsnrMode::Standard => 255.0 * 255.0,
        PsnrMode::Paper => 255.0,
    };
    Psnr::Db(10.0 * (peak / mse).log10())
}

pub fn psnr(a: &Image, b: &Image, mode: PsnrMode) -> Result<Psnr> {
    Ok(psnr_from_mse(mse(a, b)?, mode))
}

/// Mean structural similarity; multi-channel images average the
/// per-channel scores.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_dims(b)?;
    let total: f64 = (0..a.channels())
        .map(|c| ssim_plane(a.plane(c), b.plane(c), a.width(), a.height()))
        .sum();
    Ok(total / a.channels() as f64)
}

fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize) -> f64 {
    let win = SSIM_WINDOW.min(width).min(height);
    let n = (win * win) as f64;
    let mut total = 0.0;
    let mut count = 0usize;

    for y0 in 0..=height - win {
        for x0 in 0..=width - win {
            let mut sa = 0.0;
            let mut sb = 0.0;
            for dy in 0..win {
                let row = (y0 + dy) * width + x0;
                for dx in 0..win {
                    sa += a[row + dx];
                    sb += b[row + dx];
                }
            }
            let ma = sa / n;
            let mb = sb / n;
            let mut va = 0.0;
            let mut vb = 0.0;
            let mut cov = 0.0;
            for dy in 0..win {
                let row = (y0 + dy) * width + x0;
                for dx in 0..win {
                    let da = a[row + dx] - ma;
                    let db = b[row + dx] - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            }
            va /= n;
            vb /= n;
            cov /= n;

            let score = ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
            total += score;
            count += 1;
        }
    }
    total / count as f64
}

/// Computes both metrics at once.
pub fn metric_pair(a: &Image, b: &Image, mode: PsnrMode) -> Result<MetricPair> {
    Ok(MetricPair {
        psnr: psnr(a, b, mode)?,
        ssim: ssim(a, b)?,
    })
}
