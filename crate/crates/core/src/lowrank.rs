//! Weighted singular value shrinkage of transform-reconstructed groups.
//!
//! The weights come from the singular values of the matrix being shrunk:
//! small singular values get large weights and are suppressed, large ones
//! are nearly preserved. Because the singular values are non-increasing,
//! the weights are automatically non-decreasing, which is exactly the
//! regime where shrinking each singular value by its weight solves the
//! weighted nuclear norm proximal problem globally; that ordering is
//! enforced on every call.

use crate::error::{Error, Result};
use crate::numerics::{pinv_square, svd_full, Mat, SvdResult};

/// Guard added to singular values before dividing.
pub const WEIGHT_EPS: f64 = 1e-16;

/// One shrinkage weight per singular value, non-negative and
/// non-decreasing.
#[derive(Debug, Clone)]
pub struct WeightVector {
    weights: Vec<f64>,
    c: f64,
    eps: f64,
}

impl WeightVector {
    /// Validates non-negativity and the non-decreasing order.
    pub fn new(weights: Vec<f64>, c: f64, eps: f64) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidWeights(
                "weights must be non-negative".into(),
            ));
        }
        if weights.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidWeights(
                "weights must be non-decreasing".into(),
            ));
        }
        Ok(Self { weights, c, eps })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scale(&self) -> f64 {
        self.c
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Maps a sparse code back to the image domain: `pinv(w) * mu`.
pub fn reconstruct(w: &Mat, mu: &Mat) -> Result<Mat> {
    Ok(pinv_square(w)? * mu)
}

/// Shrinkage weights `w_k = c sqrt(m) / (sigma_k + eps)`.
///
/// `singulars` must be non-increasing and non-negative, `c` positive.
pub fn compute_weights(singulars: &[f64], c: f64, m: usize, eps: f64) -> WeightVector {
    assert!(c > 0.0, "weight scale must be positive");
    assert!(eps > 0.0, "eps must be positive");
    assert!(
        singulars.windows(2).all(|s| s[0] >= s[1]) && singulars.iter().all(|&s| s >= 0.0),
        "singular values must be sorted non-increasing and non-negative"
    );
    let factor = c * (m as f64).sqrt();
    let weights = singulars.iter().map(|&s| factor / (s + eps)).collect();
    WeightVector { weights, c, eps }
}

/// Shrinks each singular value by its weight, flooring at zero.
pub fn weighted_svt(x: &Mat, w: &WeightVector) -> Result<Mat> {
    assert_eq!(
        w.len(),
        x.nrows().min(x.ncols()),
        "one weight per singular value"
    );
    let svd = svd_full(x)?;
    Ok(shrink_svd(&svd, w))
}

/// Shrinkage applied to an already-computed SVD.
pub(crate) fn shrink_svd(svd: &SvdResult, w: &WeightVector) -> Mat {
    let rank = svd
        .s
        .iter()
        .zip(&w.weights)
        .take_while(|(&s, &wk)| s > wk)
        .count();
    let rows = svd.u.nrows();
    let cols = svd.v.nrows();
    if rank == 0 {
        return Mat::zeros(rows, cols);
    }
    let mut us = svd.u.columns(0, rank).clone_owned();
    for k in 0..rank {
        let mut col = us.column_mut(k);
        col *= svd.s[k] - w.weights[k];
    }
    us * svd.v.columns(0, rank).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::svd_full;
    use nalgebra::DVector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn from_singulars(s: &[f64]) -> Mat {
        Mat::from_diagonal(&DVector::from_vec(s.to_vec()))
    }

    #[test]
    fn reconstruct_identity_and_isometry() {
        let mu = random_mat(4, 6, 1);
        let r = reconstruct(&Mat::identity(4, 4), &mu).unwrap();
        assert!((r.clone() - &mu).norm() < 1e-12);

        let q = svd_full(&random_mat(4, 4, 2)).unwrap().u;
        let r = reconstruct(&q, &mu).unwrap();
        assert!((r.norm() - mu.norm()).abs() < 1e-10);
    }

    #[test]
    fn reconstruct_round_trips_invertible_transform() {
        let w = random_mat(5, 5, 3) + Mat::identity(5, 5) * 4.0;
        let mu = random_mat(5, 8, 4);
        let r = reconstruct(&w, &mu).unwrap();
        assert!((&w * r - &mu).norm() < 1e-8);
    }

    #[test]
    fn weights_follow_formula() {
        let w = compute_weights(&[4.0, 1.0, 0.0], 1.0, 4, WEIGHT_EPS);
        assert!((w.weights()[0] - 0.5).abs() < 1e-12);
        assert!((w.weights()[1] - 2.0).abs() < 1e-12);
        assert!((w.weights()[2] - 2.0e16).abs() < 1e4);
    }

    #[test]
    fn equal_singulars_give_equal_weights_and_c_is_linear() {
        let w1 = compute_weights(&[3.0, 3.0, 3.0], 1.0, 9, WEIGHT_EPS);
        assert!(w1.weights().windows(2).all(|w| w[0] == w[1]));
        let w2 = compute_weights(&[3.0, 3.0, 3.0], 2.0, 9, WEIGHT_EPS);
        for (a, b) in w1.weights().iter().zip(w2.weights()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_vector_rejects_bad_orders() {
        assert!(WeightVector::new(vec![1.0, 0.5], 1.0, WEIGHT_EPS).is_err());
        assert!(WeightVector::new(vec![-0.1, 0.5], 1.0, WEIGHT_EPS).is_err());
        assert!(WeightVector::new(vec![0.5, 0.5, 1.0], 1.0, WEIGHT_EPS).is_ok());
    }

    #[test]
    fn shrinks_singular_values_elementwise() {
        let x = from_singulars(&[5.0, 3.0, 1.0]);
        let w = WeightVector::new(vec![1.0, 1.0, 2.0], 1.0, WEIGHT_EPS).unwrap();
        let y = weighted_svt(&x, &w).unwrap();
        let s = svd_full(&y).unwrap().s;
        assert!((s[0] - 4.0).abs() < 1e-10);
        assert!((s[1] - 2.0).abs() < 1e-10);
        assert!(s[2].abs() < 1e-10);
    }

    #[test]
    fn zero_weights_are_identity() {
        let x = random_mat(4, 7, 9);
        let w = WeightVector::new(vec![0.0; 4], 1.0, WEIGHT_EPS).unwrap();
        let y = weighted_svt(&x, &w).unwrap();
        assert!((y - &x).norm() < 1e-10);
    }

    #[test]
    fn double_shrink_equals_single_double_weight() {
        let x = random_mat(5, 5, 11) * 10.0;
        let w = WeightVector::new(vec![0.3, 0.5, 0.8, 1.0, 1.4], 1.0, WEIGHT_EPS).unwrap();
        let twice = weighted_svt(&weighted_svt(&x, &w).unwrap(), &w).unwrap();
        let s_twice = svd_full(&twice).unwrap().s;
        let s_orig = svd_full(&x).unwrap().s;
        for k in 0..5 {
            let expected = (s_orig[k] - 2.0 * w.weights()[k]).max(0.0);
            assert!(
                (s_twice[k] - expected).abs() < 1e-9,
                "k={k}: {} vs {expected}",
                s_twice[k]
            );
        }
    }

    #[test]
    fn shrinkage_never_grows_norm_or_rank() {
        for seed in 0..10u64 {
            let x = random_mat(4, 6, seed) * 5.0;
            let s = svd_full(&x).unwrap().s;
            let w = compute_weights(s.as_slice(), 1.5, 6, WEIGHT_EPS);
            let y = weighted_svt(&x, &w).unwrap();
            assert!(y.norm() <= x.norm() + 1e-12);
            let sy = svd_full(&y).unwrap().s;
            for k in 0..4 {
                assert!(sy[k] <= s[k] + 1e-9);
            }
        }
    }
}
