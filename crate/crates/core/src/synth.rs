//! Deterministic synthetic images for tests, calibration and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::image::{clamp_quantize, Image};

/// Exactly rank-1 image: the outer product of two piecewise profiles with
/// plateaus and sharp steps, scaled into `[0,255]`.
pub fn rank_one_phantom(width: usize, height: usize) -> Image {
    let u = step_profile(height, 3);
    let v = step_profile(width, 5);
    let mut data = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            data.push(240.0 * u[r] * v[c]);
        }
    }
    Image::new(width, height, 1, data).unwrap()
}

// Piecewise-constant profile in [0.25, 1.0] with a ramp segment; the phase
// offset decorrelates the row and column profiles.
fn step_profile(n: usize, phase: usize) -> Vec<f64> {
    let levels = [0.95, 0.35, 0.7, 1.0, 0.25, 0.55, 0.85, 0.45];
    (0..n)
        .map(|i| {
            let seg = ((i + phase) * 8) / n.max(1);
            if seg == 2 {
                // one linear ramp segment for variety
                let t = ((i + phase) * 8) as f64 / n as f64 - 2.0;
                0.4 + 0.5 * t
            } else {
                levels[seg.min(7)]
            }
        })
        .collect()
}

/// A piecewise-smooth "natural" test scene: gradient background, disks,
/// rectangles and a sinusoidal texture band, quantized to 8-bit levels.
/// Deterministic for a given seed.
pub fn scene(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut data = vec![0.0f64; width * height];

    // Background gradient with a broad sinusoidal swell.
    for r in 0..height {
        for c in 0..width {
            let x = c as f64 / width as f64;
            let y = r as f64 / height as f64;
            data[r * width + c] =
                60.0 + 120.0 * x + 30.0 * y + 20.0 * (6.0 * x).sin() * (4.0 * y).cos();
        }
    }

    // Flat disks of varying intensity.
    for _ in 0..6 {
        let cx = rng.random::<f64>() * width as f64;
        let cy = rng.random::<f64>() * height as f64;
        let rad = (0.05 + 0.10 * rng.random::<f64>()) * width.min(height) as f64;
        let level = 30.0 + 200.0 * rng.random::<f64>();
        for r in 0..height {
            for c in 0..width {
                let dx = c as f64 - cx;
                let dy = r as f64 - cy;
                if dx * dx + dy * dy <= rad * rad {
                    data[r * width + c] = level;
                }
            }
        }
    }

    // Axis-aligned rectangles with sharp edges.
    for _ in 0..4 {
        let c0 = (rng.random::<f64>() * 0.8 * width as f64) as usize;
        let r0 = (rng.random::<f64>() * 0.8 * height as f64) as usize;
        let w = 4 + (rng.random::<f64>() * 0.25 * width as f64) as usize;
        let h = 4 + (rng.random::<f64>() * 0.25 * height as f64) as usize;
        let level = 20.0 + 215.0 * rng.random::<f64>();
        for r in r0..(r0 + h).min(height) {
            for c in c0..(c0 + w).min(width) {
                data[r * width + c] = level;
            }
        }
    }

    // Fine texture band across the lower quarter.
    for r in (3 * height / 4)..height {
        for c in 0..width {
            let t = 25.0 * ((c as f64) * 0.7).sin() * ((r as f64) * 0.5).cos();
            data[r * width + c] += t;
        }
    }

    clamp_quantize(&Image::new(width, height, 1, data).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{svd_full, Mat};

    #[test]
    fn phantom_is_exactly_rank_one() {
        let img = rank_one_phantom(64, 64);
        let m = Mat::from_fn(64, 64, |r, c| img.get(r, c, 0));
        let s = svd_full(&m).unwrap().s;
        assert!(s[0] > 100.0);
        for k in 1..64 {
            assert!(s[k] < 1e-9 * s[0], "sigma_{k} = {}", s[k]);
        }
        assert!(img.data().iter().all(|&v| (0.0..=255.0).contains(&v)));
    }

    #[test]
    fn scene_is_deterministic_and_quantized() {
        let a = scene(96, 96, 4);
        let b = scene(96, 96, 4);
        assert_eq!(a, b);
        assert!(a.data().iter().all(|&v| v.fract() == 0.0));
        assert_ne!(a, scene(96, 96, 5));
    }
}
