//! Overlapping patch extraction, similarity grouping, and aggregation.
//!
//! Patches are vectorized row-major into the columns of a `p x N` matrix.
//! Grouping picks the `m` nearest patches to a reference under squared
//! Euclidean distance, restricted to a Chebyshev window around the
//! reference coordinate; ties are broken by ascending patch index so the
//! member list is deterministic.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::numerics::Mat;

/// All patches of one image on a sliding grid.
#[derive(Debug, Clone)]
pub struct PatchSet {
    width: usize,
    height: usize,
    side: usize,
    step: usize,
    patches: Mat,
    coords: Vec<(usize, usize)>,
    row_positions: Vec<usize>,
    col_positions: Vec<usize>,
}

impl PatchSet {
    /// Patch vector length (`side * side`).
    pub fn patch_dim(&self) -> usize {
        self.side * self.side
    }

    /// Number of patches.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn image_width(&self) -> usize {
        self.width
    }

    pub fn image_height(&self) -> usize {
        self.height
    }

    /// `p x N` matrix of vectorized patches.
    pub fn patches(&self) -> &Mat {
        &self.patches
    }

    /// Top-left (row, col) of each patch.
    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn row_positions(&self) -> &[usize] {
        &self.row_positions
    }

    pub fn col_positions(&self) -> &[usize] {
        &self.col_positions
    }
}

/// Sliding-grid positions along one axis: every `step` pixels plus the last
/// valid position, so every pixel is covered by at least one patch.
fn grid_positions(extent: usize, side: usize, step: usize) -> Vec<usize> {
    let last = extent - side;
    let mut positions: Vec<usize> = (0..=last).step_by(step).collect();
    if *positions.last().unwrap() != last {
        positions.push(last);
    }
    positions
}

/// Extracts all `side x side` patches of a single-channel image on a
/// sliding grid with the given stride.
pub fn extract_patches(img: &Image, side: usize, step: usize) -> Result<PatchSet> {
    if img.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            found: img.channels(),
        });
    }
    let (w, h) = (img.width(), img.height());
    if side == 0 || side > w || side > h {
        return Err(Error::PatchTooLarge {
            side,
            width: w,
            height: h,
        });
    }
    if step == 0 {
        return Err(Error::Config("patch step must be >= 1".into()));
    }

    let row_positions = grid_positions(h, side, step);
    let col_positions = grid_positions(w, side, step);
    let n = row_positions.len() * col_positions.len();
    let p = side * side;
    let plane = img.plane(0);

    let mut patches = Mat::zeros(p, n);
    let mut coords = Vec::with_capacity(n);
    let mut j = 0;
    for &r0 in &row_positions {
        for &c0 in &col_positions {
            let mut col = patches.column_mut(j);
            for dr in 0..side {
                let row = &plane[(r0 + dr) * w + c0..(r0 + dr) * w + c0 + side];
                for dc in 0..side {
                    col[dr * side + dc] = row[dc];
                }
            }
            coords.push((r0, c0));
            j += 1;
        }
    }

    Ok(PatchSet {
        width: w,
        height: h,
        side,
        step,
        patches,
        coords,
        row_positions,
        col_positions,
    })
}

/// A reference patch together with its `m` most similar patches.
#[derive(Debug, Clone)]
pub struct PatchGroup {
    data: Mat,
    member_indices: Vec<usize>,
    reference_index: usize,
}

impl PatchGroup {
    /// `p x M` matrix of the member patch vectors, reference first.
    pub fn data(&self) -> &Mat {
        &self.data
    }

    /// Column indices into the originating [`PatchSet`], reference first.
    pub fn member_indices(&self) -> &[usize] {
        &self.member_indices
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

fn squared_distance(a: &DVector<f64>, b: nalgebra::DVectorView<f64>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Selects the `m` patches most similar to the reference.
///
/// Candidates are restricted to patches whose top-left coordinate lies
/// within `search_radius` (Chebyshev) of the reference's; if that window
/// holds fewer than `m` patches the search widens once to the whole image.
pub fn group_similar(
    ps: &PatchSet,
    reference_index: usize,
    m: usize,
    search_radius: usize,
) -> Result<PatchGroup> {
    let (rr, rc) = ps.coords[reference_index];
    let reference = ps.patches.column(reference_index).clone_owned();

    let in_window = |&(r, c): &(usize, usize)| {
        r.abs_diff(rr) <= search_radius && c.abs_diff(rc) <= search_radius
    };

    let mut ranked: Vec<(f64, usize)> = ps
        .coords
        .iter()
        .enumerate()
        .filter(|&(j, coord)| j != reference_index && in_window(coord))
        .map(|(j, _)| (squared_distance(&reference, ps.patches.column(j)), j))
        .collect();
    if ranked.len() + 1 < m {
        // Widen once to the whole image.
        ranked = (0..ps.len())
            .filter(|&j| j != reference_index)
            .map(|j| (squared_distance(&reference, ps.patches.column(j)), j))
            .collect();
        if ranked.len() + 1 < m {
            return Err(Error::NotEnoughCandidates {
                found: ranked.len() + 1,
                need: m,
            });
        }
    }

    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
    };
    let take = m.saturating_sub(1);
    if take > 0 && take < ranked.len() {
        ranked.select_nth_unstable_by(take - 1, cmp);
        ranked.truncate(take);
    }
    ranked.sort_by(cmp);

    let mut member_indices = Vec::with_capacity(m);
    member_indices.push(reference_index);
    member_indices.extend(ranked.iter().take(take).map(|&(_, j)| j));

    let p = ps.patch_dim();
    let mut data = Mat::zeros(p, member_indices.len());
    for (k, &j) in member_indices.iter().enumerate() {
        data.set_column(k, &ps.patches.column(j));
    }

    Ok(PatchGroup {
        data,
        member_indices,
        reference_index,
    })
}

/// Distances from the reference to each member, in member order.
pub fn member_distances(ps: &PatchSet, group: &PatchGroup) -> Vec<f64> {
    let reference = ps.patches.column(group.reference_index).clone_owned();
    group
        .member_indices
        .iter()
        .map(|&j| squared_distance(&reference, ps.patches.column(j)))
        .collect()
}

/// Averages processed patch groups back into an image.
///
/// Every patch pixel contributes with uniform weight 1; pixels covered by
/// no group take their value from `fallback`. Output is deterministic for
/// a fixed group order.
pub fn aggregate(
    ps: &PatchSet,
    groups: &[(PatchGroup, Mat)],
    fallback: Option<&Image>,
) -> Result<Image> {
    let (w, h) = (ps.width, ps.height);
    let side = ps.side;
    let mut sum = vec![0.0f64; w * h];
    let mut weight = vec![0.0f64; w * h];

    for (group, denoised) in groups {
        if denoised.nrows() != ps.patch_dim() || denoised.ncols() != group.len() {
            return Err(Error::Config(format!(
                "denoised block is {}x{}, expected {}x{}",
                denoised.nrows(),
                denoised.ncols(),
                ps.patch_dim(),
                group.len()
            )));
        }
        for (k, &j) in group.member_indices.iter().enumerate() {
            let (r0, c0) = ps.coords[j];
            let col = denoised.column(k);
            for dr in 0..side {
                let base = (r0 + dr) * w + c0;
                for dc in 0..side {
                    sum[base + dc] += col[dr * side + dc];
                    weight[base + dc] += 1.0;
                }
            }
        }
    }

    let mut out = vec![0.0f64; w * h];
    let mut uncovered = 0usize;
    for i in 0..w * h {
        if weight[i] > 0.0 {
            out[i] = sum[i] / weight[i];
        } else {
            match fallback {
                Some(f) => out[i] = f.plane(0)[i],
                None => uncovered += 1,
            }
        }
    }
    if uncovered > 0 {
        return Err(Error::CoverageGap { count: uncovered });
    }
    Image::new(w, h, 1, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;

    fn gradient_image(w: usize, h: usize) -> Image {
        Image::new(
            w,
            h,
            1,
            (0..w * h).map(|i| ((i * 7) % 251) as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn whole_image_patch() {
        let img = gradient_image(8, 8);
        let ps = extract_patches(&img, 8, 1).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.coords(), &[(0, 0)]);
        for (i, &v) in img.plane(0).iter().enumerate() {
            assert_eq!(ps.patches()[(i, 0)], v);
        }
    }

    #[test]
    fn edge_completion_adds_last_position() {
        let img = gradient_image(9, 9);
        let ps = extract_patches(&img, 8, 4).unwrap();
        assert_eq!(ps.row_positions(), &[0, 1]);
        assert_eq!(ps.col_positions(), &[0, 1]);
        assert_eq!(ps.len(), 4);
    }

    #[test]
    fn columns_copy_windows_exactly() {
        let img = gradient_image(13, 11);
        let side = 5;
        let ps = extract_patches(&img, side, 3).unwrap();
        for (j, &(r0, c0)) in ps.coords().iter().enumerate() {
            for dr in 0..side {
                for dc in 0..side {
                    assert_eq!(
                        ps.patches()[(dr * side + dc, j)],
                        img.get(r0 + dr, c0 + dc, 0)
                    );
                }
            }
        }
    }

    #[test]
    fn patch_larger_than_image_errors() {
        let img = gradient_image(4, 4);
        assert!(matches!(
            extract_patches(&img, 5, 1),
            Err(Error::PatchTooLarge { .. })
        ));
    }

    #[test]
    fn reference_is_first_with_zero_distance() {
        let img = gradient_image(12, 12);
        let ps = extract_patches(&img, 4, 2).unwrap();
        let g = group_similar(&ps, 3, 5, 40).unwrap();
        assert_eq!(g.member_indices()[0], 3);
        let d = member_distances(&ps, &g);
        assert_eq!(d[0], 0.0);
        for k in 2..d.len() {
            assert!(d[k - 1] <= d[k]);
        }
    }

    #[test]
    fn group_of_all_candidates_returns_everything_sorted() {
        let img = gradient_image(10, 10);
        let ps = extract_patches(&img, 5, 5).unwrap();
        let g = group_similar(&ps, 0, ps.len(), 40).unwrap();
        assert_eq!(g.len(), ps.len());
        let d = member_distances(&ps, &g);
        for k in 2..d.len() {
            assert!(d[k - 1] <= d[k]);
        }
    }

    #[test]
    fn identical_patches_tie_break_by_index() {
        // Constant image: every patch identical, distance ties everywhere.
        let img = Image::constant(8, 4, 1, 9.0).unwrap();
        let ps = extract_patches(&img, 4, 2).unwrap();
        let g = group_similar(&ps, 0, 3, 40).unwrap();
        assert_eq!(g.member_indices(), &[0, 1, 2]);
    }

    #[test]
    fn too_few_candidates_fails_after_widening() {
        let img = gradient_image(6, 6);
        let ps = extract_patches(&img, 3, 3).unwrap();
        assert_eq!(ps.len(), 4);
        assert!(matches!(
            group_similar(&ps, 0, 9, 1),
            Err(Error::NotEnoughCandidates { found: 4, need: 9 })
        ));
        // Widening rescues a small window when enough patches exist overall.
        let g = group_similar(&ps, 0, 4, 1).unwrap();
        assert_eq!(g.len(), 4);
    }

    #[test]
    fn aggregate_places_disjoint_patches() {
        let img = gradient_image(8, 4);
        let ps = extract_patches(&img, 4, 4).unwrap();
        let g = group_similar(&ps, 0, 2, 40).unwrap();
        let denoised = Mat::from_element(16, 2, 5.0);
        let out = aggregate(&ps, &[(g, denoised)], Some(&img)).unwrap();
        // Both patches were written with constant 5, rest falls back.
        for r in 0..4 {
            for c in 0..8 {
                assert_eq!(out.get(r, c, 0), 5.0);
            }
        }
    }

    #[test]
    fn overlapping_identical_contributions_average_to_same_value() {
        let img = Image::constant(4, 4, 1, 3.0).unwrap();
        let ps = extract_patches(&img, 4, 1).unwrap();
        let g = group_similar(&ps, 0, 1, 0).unwrap();
        let denoised = Mat::from_element(16, 1, 7.0);
        let groups = vec![(g.clone(), denoised.clone()), (g, denoised)];
        let out = aggregate(&ps, &groups, None).unwrap();
        assert!(out.data().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn extract_then_aggregate_is_identity() {
        let img = gradient_image(17, 13);
        let ps = extract_patches(&img, 5, 2).unwrap();
        let groups: Vec<(PatchGroup, Mat)> = (0..ps.len())
            .map(|j| {
                let g = group_similar(&ps, j, 1, 0).unwrap();
                let d = g.data().clone();
                (g, d)
            })
            .collect();
        let out = aggregate(&ps, &groups, None).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coverage_gap_without_fallback_errors() {
        let img = gradient_image(8, 8);
        let ps = extract_patches(&img, 4, 4).unwrap();
        let g = group_similar(&ps, 0, 1, 0).unwrap();
        let d = g.data().clone();
        assert!(matches!(
            aggregate(&ps, &[(g, d)], None),
            Err(Error::CoverageGap { .. })
        ));
    }
}
