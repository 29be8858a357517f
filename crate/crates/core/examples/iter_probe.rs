//! Scratch probe: long-run iteration traces on the phantom suite.

use stlr_core::image::add_gaussian_noise;
use stlr_core::pipeline::{denoise_with_reference, DenoiseConfig};
use stlr_core::synth::{rank_one_phantom, scene};

fn main() {
    let mut cfg = DenoiseConfig::for_sigma(20.0).unwrap();
    cfg.outer_iters = 10;

    let phantom = rank_one_phantom(64, 64);
    let noisy = add_gaussian_noise(&phantom, 20.0, 7).unwrap();
    let (_, r) = denoise_with_reference(&noisy, Some(&phantom), &cfg).unwrap();
    println!(
        "phantom 64 in {:.3} trace {:?}",
        r.psnr_in.unwrap(),
        r.psnr_trace
            .iter()
            .map(|v| (v * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );

    let sc = scene(96, 96, 21);
    let noisy = add_gaussian_noise(&sc, 20.0, 8).unwrap();
    let (_, r) = denoise_with_reference(&noisy, Some(&sc), &cfg).unwrap();
    println!(
        "scene 96 in {:.3} trace {:?}",
        r.psnr_in.unwrap(),
        r.psnr_trace
            .iter()
            .map(|v| (v * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
}
