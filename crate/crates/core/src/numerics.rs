//! Dense factorization kernels with fixed determinism conventions.
//!
//! Every transform update, pseudo-inverse and singular value shrinkage in
//! this crate goes through the four operations here, so the conventions
//! that make results reproducible are centralized:
//!
//! * singular values are sorted non-increasing, ties kept in the order the
//!   factorization produced them;
//! * each left singular vector is flipped so that its largest-magnitude
//!   entry is positive (the matching right vector is flipped with it);
//! * the SPD factor is the lower-triangular Cholesky factor with a strictly
//!   positive diagonal, which is unique.
//!
//! All operations are pure functions of their inputs and are safe to call
//! from any number of threads.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense double-precision matrix used throughout the crate.
pub type Mat = DMatrix<f64>;

/// Upper bound on QR sweeps before the SVD is declared non-convergent.
const SVD_MAX_SWEEPS: usize = 1_000;

/// Relative cutoff below which singular values are treated as zero when
/// inverting.
const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Thin singular value decomposition `a = u * diag(s) * v^T`.
///
/// `s` is non-increasing, `u` and `v` have orthonormal columns, and the
/// sign convention described in the module docs is applied.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Mat,
    pub s: DVector<f64>,
    pub v: Mat,
}

impl SvdResult {
    /// Reassembles `u * diag(s) * v^T`.
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for (k, col) in us.column_iter_mut().enumerate() {
            let mut col = col;
            col *= self.s[k];
        }
        &us * self.v.transpose()
    }
}

/// Singular value decomposition with deterministic ordering and signs.
pub fn svd_full(a: &Mat) -> Result<SvdResult> {
    let (rows, cols) = a.shape();
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_SWEEPS)
        .ok_or(Error::SvdNonConvergence { rows, cols })?;
    let mut u = svd.u.expect("u was requested");
    let mut v = svd.v_t.expect("v_t was requested").transpose();
    let mut s = svd.singular_values;

    // Non-increasing order with index-order tie-break.
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap().then(i.cmp(&j)));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        let up = Mat::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]);
        let vp = Mat::from_fn(v.nrows(), k, |r, c| v[(r, order[c])]);
        let sp = DVector::from_fn(k, |i, _| s[order[i]]);
        u = up;
        v = vp;
        s = sp;
    }

    // Sign convention: largest-magnitude entry of each left singular vector
    // is positive. Paired with the right vector so the product is unchanged.
    for c in 0..k {
        let col = u.column(c);
        let mut pivot = 0usize;
        let mut best = f64::NEG_INFINITY;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                pivot = i;
            }
        }
        if u[(pivot, c)] < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }

    Ok(SvdResult { u, s, v })
}

/// Lower-triangular Cholesky factor `z` with `z * z^T = a`.
///
/// `a` must be symmetric positive definite; the error names the leading
/// minor that fails.
pub fn spd_factor(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            let scale = a[(i, j)].abs().max(a[(j, i)].abs()).max(1.0);
            if diff > 1e-10 * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }

    let mut z = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= z[(j, k)] * z[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { order: j + 1 });
        }
        let djj = d.sqrt();
        z[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= z[(i, k)] * z[(j, k)];
            }
            z[(i, j)] = s / djj;
        }
    }
    Ok(z)
}

/// Orthonormal 2-D DCT-II matrix for vectorized square patches.
///
/// `p` must be a perfect square; the result is the Kronecker product of two
/// 1-D orthonormal DCT matrices of size `sqrt(p)`.
pub fn dct_matrix(p: usize) -> Result<Mat> {
    let side = (p as f64).sqrt().round() as usize;
    if p == 0 || side * side != p {
        return Err(Error::NotPerfectSquare { len: p });
    }
    let d = dct_1d(side);
    Ok(d.kronecker(&d))
}

fn dct_1d(n: usize) -> Mat {
    let nf = n as f64;
    Mat::from_fn(n, n, |k, j| {
        let scale = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        scale * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

/// Moore–Penrose pseudo-inverse of a square matrix via SVD.
///
/// Singular values below `1e-12 * s_max` are truncated to zero, so rank
/// deficiency is handled without an error path.
pub fn pinv_square(w: &Mat) -> Result<Mat> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: w.ncols(),
        });
    }
    let svd = svd_full(w)?;
    let cutoff = PINV_RELATIVE_CUTOFF * svd.s[0];
    let mut vs = svd.v;
    for (k, col) in vs.column_iter_mut().enumerate() {
        let mut col = col;
        if svd.s[k] > cutoff {
            col /= svd.s[k];
        } else {
            col.fill(0.0);
        }
    }
    Ok(&vs * svd.u.transpose())
}
