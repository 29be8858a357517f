//! Scratch diagnostics for the per-stage behavior of one outer iteration.

use stlr_core::image::add_gaussian_noise;
use stlr_core::lowrank::{compute_weights, reconstruct, weighted_svt, WEIGHT_EPS};
use stlr_core::metrics::{psnr, PsnrMode};
use stlr_core::numerics::{dct_matrix, svd_full, Mat};
use stlr_core::patch::{aggregate, extract_patches, group_similar, PatchGroup};
use stlr_core::synth::rank_one_phantom;
use stlr_core::transform::{sparse_code, transform_objective, update_transform};

fn run_variant(
    name: &str,
    clean: &stlr_core::Image,
    noisy: &stlr_core::Image,
    use_update: bool,
    use_svt: bool,
    c: f64,
) {
    let side = 6;
    let p = side * side;
    let s = 4;
    let lambda = 0.54;
    let m = 70;

    let ps = extract_patches(noisy, side, 1).unwrap();
    let dct = dct_matrix(p).unwrap();

    // references every 3 pixels
    let mut refs = Vec::new();
    let nrp = ps.row_positions().len();
    let ncp = ps.col_positions().len();
    for ri in (0..nrp).step_by(3) {
        for ci in (0..ncp).step_by(3) {
            refs.push(ri * ncp + ci);
        }
    }

    let mut groups: Vec<(PatchGroup, Mat)> = Vec::new();
    let mut fit_dct = 0.0;
    let mut fit_new = 0.0;
    let mut obj_dct = 0.0;
    let mut obj_new = 0.0;
    for &r in &refs {
        let g = group_similar(&ps, r, m, 40).unwrap();
        let mu = sparse_code(&dct, g.data(), s).unwrap();
        let w = if use_update {
            update_transform(g.data(), &mu, lambda).unwrap()
        } else {
            dct.clone()
        };
        fit_dct += (&dct * g.data() - &mu).norm_squared();
        fit_new += (&w * g.data() - &mu).norm_squared();
        obj_dct += transform_objective(&dct, g.data(), &mu, lambda);
        obj_new += transform_objective(&w, g.data(), &mu, lambda);
        let recon = reconstruct(&w, &mu).unwrap();
        let den = if use_svt {
            let svd = svd_full(&recon).unwrap();
            let wv = compute_weights(svd.s.as_slice(), c, g.len(), WEIGHT_EPS);
            weighted_svt(&recon, &wv).unwrap()
        } else {
            recon
        };
        groups.push((g, den));
    }
    let out = aggregate(&ps, &groups, Some(noisy)).unwrap();
    let p_out = psnr(&out, clean, PsnrMode::Standard).unwrap().db();
    println!(
        "{name}: psnr {:.3} | mean fit dct {:.1} new {:.1} | mean obj dct {:.1} new {:.1}",
        p_out,
        fit_dct / refs.len() as f64,
        fit_new / refs.len() as f64,
        obj_dct / refs.len() as f64,
        obj_new / refs.len() as f64
    );
}

fn main() {
    let clean = rank_one_phantom(64, 64);
    let noisy = add_gaussian_noise(&clean, 20.0, 7).unwrap();
    let p_in = psnr(&noisy, &clean, PsnrMode::Standard).unwrap().db();
    println!("input psnr {p_in:.3}");

    run_variant("dct only, no svt        ", &clean, &noisy, false, false, 1.0);
    run_variant("dct only, svt c=1       ", &clean, &noisy, false, true, 1.0);
    run_variant("updated W, no svt       ", &clean, &noisy, true, false, 1.0);
    run_variant("updated W, svt c=1      ", &clean, &noisy, true, true, 1.0);
    run_variant("updated W, svt c=3      ", &clean, &noisy, true, true, 3.0);
}
