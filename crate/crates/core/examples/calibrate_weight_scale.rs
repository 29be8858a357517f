//! Grid calibration of the default shrinkage scale `c`.
//!
//! Runs the denoiser at sigma 20 on a held-out synthetic scene for each
//! candidate scale and prints the resulting PSNR; the winner is frozen
//! into `pipeline::DEFAULT_WEIGHT_SCALE`.
//!
//! Run with: `cargo run --release -p stlr-core --example calibrate_weight_scale`

use stlr_core::image::add_gaussian_noise;
use stlr_core::pipeline::{denoise_with_reference, DenoiseConfig};
use stlr_core::synth::{rank_one_phantom, scene};

fn main() {
    // Held-out image: this seed is used nowhere in the test suites.
    let clean = scene(160, 160, 0xCA11B);
    let noisy = add_gaussian_noise(&clean, 20.0, 0xCA11B + 1).unwrap();
    let phantom = rank_one_phantom(64, 64);
    let noisy_phantom = add_gaussian_noise(&phantom, 20.0, 99).unwrap();

    println!("c, scene psnr_out (dB), phantom psnr_out (dB)");
    for &c in &[0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        let mut cfg = DenoiseConfig::for_sigma(20.0).unwrap();
        cfg.weight_scale = c;

        let (_, scene_report) = denoise_with_reference(&noisy, Some(&clean), &cfg).unwrap();
        let (_, ph_report) =
            denoise_with_reference(&noisy_phantom, Some(&phantom), &cfg).unwrap();
        println!(
            "{c}, {:.3} (in {:.3}) trace {:?}, {:.3} (in {:.3}) trace {:?}",
            scene_report.psnr_out.unwrap(),
            scene_report.psnr_in.unwrap(),
            scene_report
                .psnr_trace
                .iter()
                .map(|v| (v * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            ph_report.psnr_out.unwrap(),
            ph_report.psnr_in.unwrap(),
            ph_report
                .psnr_trace
                .iter()
                .map(|v| (v * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
        );
    }
}
