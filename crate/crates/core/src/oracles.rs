//! Brute-force reference minimizers for the test suites.
//!
//! These deliberately avoid the closed-form solution paths they are used
//! to check: the transform oracle minimizes the objective by gradient
//! descent with LU-based determinants and inverses, and the shrinkage
//! oracle evaluates 2x2 singular values in closed form and minimizes by
//! multi-start pattern search. Only available with the `oracles` feature.

use crate::numerics::Mat;
use crate::transform::transform_objective;

/// Best objective value found by multi-restart gradient descent on the
/// transform objective for fixed `x`, `mu`, `lambda`.
pub fn min_transform_objective_bruteforce(
    x: &Mat,
    mu: &Mat,
    lambda: f64,
    restarts: &[Mat],
) -> f64 {
    let mut best = f64::INFINITY;
    for start in restarts {
        let obj = descend(start.clone(), x, mu, lambda);
        if obj < best {
            best = obj;
        }
    }
    best
}

/// Standard restart set for a p x p problem: identity, scaled identities,
/// and seeded random perturbations (both determinant signs show up).
pub fn default_restarts(p: usize, count: usize, seed: u64) -> Vec<Mat> {
    let mut rng = SplitMix64::new(seed);
    let mut starts = vec![
        Mat::identity(p, p),
        Mat::identity(p, p) * 0.25,
        Mat::identity(p, p) * 4.0,
    ];
    while starts.len() < count.max(3) {
        let m = Mat::from_fn(p, p, |_, _| rng.next_unit() * 2.0 - 1.0);
        starts.push(m + Mat::identity(p, p) * 0.5);
    }
    starts
}

fn gradient(w: &Mat, x: &Mat, mu: &Mat, lambda: f64) -> Option<Mat> {
    // d/dW ||Wx - mu||^2 = 2 (Wx - mu) x^T
    // d/dW lambda ||W||^2 = 2 lambda W
    // d/dW (-lambda log10|det W|) = -(lambda / ln 10) W^{-T}
    let fit = (w * x - mu) * x.transpose() * 2.0;
    let w_inv_t = w.clone().try_inverse()?.transpose();
    Some(fit + w * (2.0 * lambda) - w_inv_t * (lambda / std::f64::consts::LN_10))
}

fn descend(mut w: Mat, x: &Mat, mu: &Mat, lambda: f64) -> f64 {
    let mut obj = transform_objective(&w, x, mu, lambda);
    if !obj.is_finite() {
        return f64::INFINITY;
    }
    let mut step = 1e-2;
    for _ in 0..200_000 {
        let Some(g) = gradient(&w, x, mu, lambda) else {
            break;
        };
        let gnorm = g.norm();
        if gnorm < 1e-12 {
            break;
        }
        // Backtracking with a mild growth on acceptance.
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &w - &g * step;
            let trial_obj = transform_objective(&trial, x, mu, lambda);
            if trial_obj < obj - 1e-4 * step * gnorm * gnorm {
                w = trial;
                obj = trial_obj;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    obj
}

/// `0.5 ||y - x||_F^2 + sum_k w_k sigma_k(x)` for 2x2 matrices, with the
/// singular values computed in closed form.
pub fn weighted_nuclear_objective_2x2(y: &[f64; 4], x: &[f64; 4], weights: &[f64; 2]) -> f64 {
    let fidelity: f64 = y
        .iter()
        .zip(x.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        * 0.5;
    let (s1, s2) = singular_values_2x2(x);
    fidelity + weights[0] * s1 + weights[1] * s2
}

/// Closed-form singular values of `[a b; c d]`, non-increasing.
pub fn singular_values_2x2(m: &[f64; 4]) -> (f64, f64) {
    let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
    let t = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((t + disc) / 2.0).max(0.0).sqrt();
    let s2 = ((t - disc) / 2.0).max(0.0).sqrt();
    (s1, s2)
}

/// Dense numerical minimization of the 2x2 weighted nuclear objective by
/// multi-start compass search; returns the best objective value found.
pub fn min_weighted_nuclear_objective_2x2(y: &[f64; 4], weights: &[f64; 2], seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut starts: Vec<[f64; 4]> = vec![
        *y,
        [0.0; 4],
        [y[0] / 2.0, y[1] / 2.0, y[2] / 2.0, y[3] / 2.0],
    ];
    for _ in 0..5 {
        let mut s = *y;
        for v in &mut s {
            *v += rng.next_unit() * 2.0 - 1.0;
        }
        starts.push(s);
    }

    let mut best = f64::INFINITY;
    for start in starts {
        let obj = compass_search(y, weights, start);
        if obj < best {
            best = obj;
        }
    }
    best
}

fn compass_search(y: &[f64; 4], weights: &[f64; 2], mut x: [f64; 4]) -> f64 {
    let mut obj = weighted_nuclear_objective_2x2(y, &x, weights);
    let mut step = 1.0;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..4 {
            for sign in [1.0, -1.0] {
                let mut trial = x;
                trial[i] += sign * step;
                let trial_obj = weighted_nuclear_objective_2x2(y, &trial, weights);
                if trial_obj < obj {
                    x = trial;
                    obj = trial_obj;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    obj
}

/// Small deterministic generator so the oracle module has no dependence
/// on the crate's RNG choices.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}
