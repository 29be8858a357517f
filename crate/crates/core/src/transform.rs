//! Per-group sparse coding and the closed-form log-det transform update.
//!
//! The update minimizes
//!
//! ```text
//! ||W x - mu||_F^2 + lambda (||W||_F^2 - log10|det W|)
//! ```
//!
//! over square transforms `W` for a fixed sparse code `mu`. Writing
//! `x x^T + lambda I = Z Z^T` (Cholesky) and `O = W Z`, the data terms
//! become `tr(O O^T) - 2 tr(O N)` with `N = Z^-1 x mu^T`. For fixed
//! singular values of `O` the trace term is maximized by aligning `O`
//! with the SVD `N = P Psi Q^T`, i.e. `O = Q Phi P^T`, and the optimal
//! singular values solve `2 phi - 2 psi - lambda / (phi ln 10) = 0`,
//! whose positive root is [`singular_value_replacement`]. The base-10
//! logarithm in the objective and the `ln 10` in the root belong
//! together; mixing bases breaks the descent property.

use crate::error::{Error, Result};
use crate::numerics::{spd_factor, svd_full, Mat};

/// Applies `w` and keeps the `s` largest-magnitude entries per column.
///
/// Magnitude ties keep the lower row index. `s = 0` yields a zero matrix,
/// `s = p` skips thresholding entirely.
pub fn sparse_code(w: &Mat, x: &Mat, s: usize) -> Result<Mat> {
    let p = w.nrows();
    if s > p {
        return Err(Error::SparsityOutOfRange { sparsity: s, dim: p });
    }
    let mut mu = w * x;
    if s == p {
        return Ok(mu);
    }
    let mut order: Vec<usize> = Vec::with_capacity(p);
    for mut col in mu.column_iter_mut() {
        order.clear();
        order.extend(0..p);
        order.sort_by(|&i, &j| {
            col[j]
                .abs()
                .partial_cmp(&col[i].abs())
                .unwrap()
                .then(i.cmp(&j))
        });
        for &i in &order[s..] {
            col[i] = 0.0;
        }
    }
    Ok(mu)
}

/// Positive stationary point of `2 phi - 2 psi - lambda / (phi ln 10) = 0`.
pub fn singular_value_replacement(psi: f64, lambda: f64) -> f64 {
    (psi + (psi * psi + 2.0 * lambda / std::f64::consts::LN_10).sqrt()) / 2.0
}

/// Closed-form minimizer of the transform objective for a fixed code.
///
/// `lambda` must be strictly positive, which both makes `x x^T + lambda I`
/// positive definite and keeps every replacement singular value positive,
/// so the returned transform is always invertible.
pub fn update_transform(x: &Mat, mu: &Mat, lambda: f64) -> Result<Mat> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveLambda { lambda });
    }
    let p = x.nrows();
    assert_eq!(
        (p, x.ncols()),
        (mu.nrows(), mu.ncols()),
        "code shape must match data shape"
    );

    let mut gram = x * x.transpose();
    for i in 0..p {
        gram[(i, i)] += lambda;
    }
    let z = spd_factor(&gram)?;
    let z_inv = z
        .solve_lower_triangular(&Mat::identity(p, p))
        .expect("Cholesky factor has a positive diagonal");

    let n = &z_inv * (x * mu.transpose());
    let svd = svd_full(&n)?;

    // O = Q Phi P^T attains the trace bound; W = O Z^-1.
    let mut q_phi = svd.v;
    for (k, col) in q_phi.column_iter_mut().enumerate() {
        let mut col = col;
        col *= singular_value_replacement(svd.s[k], lambda);
    }
    Ok(q_phi * svd.u.transpose() * z_inv)
}

/// `||w x - mu||_F^2 + lambda (||w||_F^2 - log10|det w|)`; infinite for
/// singular `w`.
pub fn transform_objective(w: &Mat, x: &Mat, mu: &Mat, lambda: f64) -> f64 {
    let fit = (w * x - mu).norm_squared();
    let det = w.determinant().abs();
    if det == 0.0 || !det.is_finite() {
        return f64::INFINITY;
    }
    fit + lambda * (w.norm_squared() - det.log10())
}
