//! Scratch probe: relaxation delta vs convergence and gain.

use stlr_core::image::{add_gaussian_noise, Image};
use stlr_core::pipeline::{denoise_with_reference, DenoiseConfig};
use stlr_core::synth::{rank_one_phantom, scene};

fn blocky_phantom(n: usize) -> Image {
    let levels_u = [0.3, 1.0, 0.55, 0.85];
    let levels_v = [0.9, 0.4, 1.0, 0.6];
    let u: Vec<f64> = (0..n).map(|i| levels_u[(i * 4) / n]).collect();
    let v: Vec<f64> = (0..n).map(|i| levels_v[((i + n / 8) * 4) / n % 4]).collect();
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            data.push(240.0 * u[r] * v[c]);
        }
    }
    Image::new(n, n, 1, data).unwrap()
}

fn run(name: &str, clean: &Image, delta: f64, warm: bool) {
    let noisy = add_gaussian_noise(clean, 20.0, 7).unwrap();
    let mut cfg = DenoiseConfig::for_sigma(20.0).unwrap();
    cfg.outer_iters = 10;
    cfg.relaxation = delta;
    cfg.warm_start = warm;
    let (_, r) = denoise_with_reference(&noisy, Some(clean), &cfg).unwrap();
    let t = &r.psnr_trace;
    println!(
        "{name} d={delta} warm={warm}: in {:.2} iter3 {:.3} iter10 {:.3} |3-10| {:.3} trace {:?}",
        r.psnr_in.unwrap(),
        t[2],
        t[9],
        (t[2] - t[9]).abs(),
        t.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
}

fn main() {
    let ramp = rank_one_phantom(64, 64);
    let blocky = blocky_phantom(64);
    let sc = scene(96, 96, 21);
    for &warm in &[true, false] {
        for &d in &[0.1, 0.2, 0.3] {
            run("ramp   ", &ramp, d, warm);
            run("blocky ", &blocky, d, warm);
            run("scene96", &sc, d, warm);
            println!();
        }
    }
}
