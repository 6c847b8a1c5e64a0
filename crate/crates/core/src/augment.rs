//! Training-time augmentation: mix-up, a foreground-affine mix-up
//! variant that aligns the second slice's foreground onto the first
//! before blending, and lossless quarter-turn rotation / axis flips.
//!
//! Slices are `(h, w)` arrays indexed `(x, y)`; per-pixel labels are
//! `(h, w, L)` arrays whose last axis is a one-hot (or soft) class
//! distribution with class 0 the background. All functions are pure;
//! randomness enters only through an explicit λ or a caller-seeded RNG.

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::model::{LabelMap, Spacing, Volume3D};

/// Default concentration for the Beta(α, α) mix-up coefficient law.
pub const DEFAULT_MIXUP_ALPHA: f64 = 0.2;

/// Foreground masks whose mean centroid distance falls at or below this
/// are treated as geometrically degenerate (single-pixel foreground).
const DEGENERATE_SPREAD: f64 = 1e-12;

/// Geometry linking two slices' foregrounds: centroids, mean
/// pixel-to-centroid distances, the derived scale `s = lᵢ/lⱼ`, and the
/// 3×3 homogeneous matrix
/// `[[s, 0, cₓᵢ − s·cₓⱼ], [0, s, c_yᵢ − s·c_yⱼ], [0, 0, 1]]`
/// that maps slice-j pixel coordinates onto slice i.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMixupParams {
    /// Foreground centroid of slice i, `(cₓ, c_y)` in pixel coordinates.
    pub centroid_i: (f64, f64),
    /// Foreground centroid of slice j.
    pub centroid_j: (f64, f64),
    /// Mean foreground-pixel-to-centroid distance of slice i (pixels).
    pub l_i: f64,
    /// Mean foreground-pixel-to-centroid distance of slice j (pixels).
    pub l_j: f64,
    /// Scale factor `s = lᵢ / lⱼ`.
    pub scale: f64,
    /// Homogeneous transform taking slice-j coordinates to slice i.
    pub transform: [[f64; 3]; 3],
}

/// Draws a mix-up coefficient λ from Beta(α, α).
pub fn sample_lambda(alpha: f64, rng: &mut impl Rng) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "beta concentration must be finite and positive, got {alpha}"
        )));
    }
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::InvalidArgument(format!("invalid beta parameters: {e}")))?;
    Ok(beta.sample(rng))
}

fn check_mix_inputs(
    x_i: &Array2<f64>,
    x_j: &Array2<f64>,
    y_i: &Array3<f64>,
    y_j: &Array3<f64>,
    lambda: f64,
) -> Result<()> {
    if x_i.dim() != x_j.dim() || y_i.dim() != y_j.dim() {
        return Err(Error::ShapeMismatch(format!(
            "images {:?}/{:?}, labels {:?}/{:?}",
            x_i.dim(),
            x_j.dim(),
            y_i.dim(),
            y_j.dim()
        )));
    }
    let (h, w, _) = y_i.dim();
    if (h, w) != x_i.dim() {
        return Err(Error::ShapeMismatch(format!(
            "labels cover {:?} pixels but images are {:?}",
            (h, w),
            x_i.dim()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda must be in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// Plain mix-up: `x̃ = λ·xᵢ + (1−λ)·xⱼ` and the same blend for the
/// per-pixel label distributions, which therefore stay on the simplex.
pub fn mixup(
    x_i: &Array2<f64>,
    x_j: &Array2<f64>,
    y_i: &Array3<f64>,
    y_j: &Array3<f64>,
    lambda: f64,
) -> Result<(Array2<f64>, Array3<f64>)> {
    check_mix_inputs(x_i, x_j, y_i, y_j, lambda)?;
    let x = x_i * lambda + x_j * (1.0 - lambda);
    let y = y_i * lambda + y_j * (1.0 - lambda);
    Ok((x, y))
}

fn centroid_and_spread(mask: &Array2<bool>) -> Option<(f64, f64, f64)> {
    let mut count = 0usize;
    let (mut cx, mut cy) = (0.0, 0.0);
    for ((x, y), &on) in mask.indexed_iter() {
        if on {
            cx += x as f64;
            cy += y as f64;
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let n = count as f64;
    cx /= n;
    cy /= n;
    let mut l = 0.0;
    for ((x, y), &on) in mask.indexed_iter() {
        if on {
            l += ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        }
    }
    Some((cx, cy, l / n))
}

/// Derives the affine alignment between two foreground masks (cavity plus
/// myocardium): centroids, spreads, scale and the homogeneous matrix.
///
/// When both spreads are degenerate (single-pixel foregrounds) the scale
/// falls back to 1 and the transform is a pure translation; a degenerate
/// slice j with an extended slice i has no finite scale and is an error.
pub fn foreground_affine(mask_i: &Array2<bool>, mask_j: &Array2<bool>) -> Result<AffineMixupParams> {
    let (cxi, cyi, l_i) = centroid_and_spread(mask_i).ok_or_else(|| {
        Error::InvalidArgument("slice i has an empty foreground mask".into())
    })?;
    let (cxj, cyj, l_j) = centroid_and_spread(mask_j).ok_or_else(|| {
        Error::InvalidArgument("slice j has an empty foreground mask".into())
    })?;
    let scale = if l_j > DEGENERATE_SPREAD {
        l_i / l_j
    } else if l_i <= DEGENERATE_SPREAD {
        1.0
    } else {
        return Err(Error::Numeric(
            "slice j foreground collapses to a point while slice i is extended".into(),
        ));
    };
    let transform = [
        [scale, 0.0, cxi - scale * cxj],
        [0.0, scale, cyi - scale * cyj],
        [0.0, 0.0, 1.0],
    ];
    Ok(AffineMixupParams {
        centroid_i: (cxi, cyi),
        centroid_j: (cxj, cyj),
        l_i,
        l_j,
        scale,
        transform,
    })
}

/// Foreground = any non-background pixel. Multi-class label stacks mark a
/// pixel foreground when its argmax class is not 0; single-column stacks
/// when the score is at least 0.5.
fn foreground_from_labels(y: &Array3<f64>) -> Array2<bool> {
    let (h, w, l) = y.dim();
    Array2::from_shape_fn((h, w), |(x, yy)| {
        if l == 1 {
            y[[x, yy, 0]] >= 0.5
        } else {
            let mut best = 0usize;
            let mut best_v = y[[x, yy, 0]];
            for c in 1..l {
                if y[[x, yy, c]] > best_v {
                    best_v = y[[x, yy, c]];
                    best = c;
                }
            }
            best != 0
        }
    })
}

/// Bilinear sample with zero fill outside the grid.
fn sample_bilinear(img: &Array2<f64>, qx: f64, qy: f64) -> f64 {
    let (h, w) = img.dim();
    if qx < 0.0 || qy < 0.0 || qx > (h - 1) as f64 || qy > (w - 1) as f64 {
        return 0.0;
    }
    let x0 = qx.floor() as usize;
    let y0 = qy.floor() as usize;
    let x1 = (x0 + 1).min(h - 1);
    let y1 = (y0 + 1).min(w - 1);
    let fx = qx - x0 as f64;
    let fy = qy - y0 as f64;
    let top = img[[x0, y0]] * (1.0 - fx) + img[[x1, y0]] * fx;
    let bottom = img[[x0, y1]] * (1.0 - fx) + img[[x1, y1]] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Mix-up with foreground alignment: slice j (image and labels) is warped
/// by the [`foreground_affine`] transform before blending, so that both
/// foregrounds overlap.
///
/// The image is resampled bilinearly, the label stack nearest-neighbour;
/// samples falling outside slice j become zero intensity / background.
/// Foreground masks are derived from the label stacks.
pub fn affine_mixup(
    x_i: &Array2<f64>,
    x_j: &Array2<f64>,
    y_i: &Array3<f64>,
    y_j: &Array3<f64>,
    lambda: f64,
) -> Result<(Array2<f64>, Array3<f64>)> {
    check_mix_inputs(x_i, x_j, y_i, y_j, lambda)?;
    let params = foreground_affine(&foreground_from_labels(y_i), &foreground_from_labels(y_j))?;
    let s = params.scale;
    let tx = params.transform[0][2];
    let ty = params.transform[1][2];

    let (h, w) = x_i.dim();
    let l = y_i.dim().2;
    let mut x_warped = Array2::zeros((h, w));
    let mut y_warped = Array3::zeros((h, w, l));
    for x in 0..h {
        for y in 0..w {
            // Inverse map: where in slice j does output pixel (x, y) come from?
            let qx = (x as f64 - tx) / s;
            let qy = (y as f64 - ty) / s;
            x_warped[[x, y]] = sample_bilinear(x_j, qx, qy);
            let rx = qx.round();
            let ry = qy.round();
            let inside =
                rx >= 0.0 && ry >= 0.0 && rx <= (h - 1) as f64 && ry <= (w - 1) as f64;
            if inside {
                let (rx, ry) = (rx as usize, ry as usize);
                for c in 0..l {
                    y_warped[[x, y, c]] = y_j[[rx, ry, c]];
                }
            } else if l > 1 {
                y_warped[[x, y, 0]] = 1.0; // background one-hot
            }
        }
    }
    let x = x_i * lambda + &x_warped * (1.0 - lambda);
    let y = y_i * lambda + &y_warped * (1.0 - lambda);
    Ok((x, y))
}

/// In-plane axis to reverse after rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipAxis {
    /// Reverse the first (x / row) axis.
    X,
    /// Reverse the second (y / column) axis.
    Y,
}

/// One lossless quarter turn per slice: `out[r][c] = in[h−1−c][r]`, so an
/// `(h, w)` slice becomes `(w, h)`.
fn rotate_quarter<T: Copy + Default>(arr: &Array3<T>) -> Array3<T> {
    let (h, w, nz) = arr.dim();
    let mut out = Array3::default((w, h, nz));
    for z in 0..nz {
        for r in 0..w {
            for c in 0..h {
                out[[r, c, z]] = arr[[h - 1 - c, r, z]];
            }
        }
    }
    out
}

fn flip_array<T: Copy + Default>(arr: &Array3<T>, axis: FlipAxis) -> Array3<T> {
    let (h, w, nz) = arr.dim();
    let mut out = Array3::default((h, w, nz));
    for z in 0..nz {
        for x in 0..h {
            for y in 0..w {
                let (sx, sy) = match axis {
                    FlipAxis::X => (h - 1 - x, y),
                    FlipAxis::Y => (x, w - 1 - y),
                };
                out[[x, y, z]] = arr[[sx, sy, z]];
            }
        }
    }
    out
}

fn rotate_flip_array<T: Copy + Default>(
    arr: &Array3<T>,
    k_quarter_turns: u32,
    flip: Option<FlipAxis>,
) -> Result<Array3<T>> {
    if k_quarter_turns > 3 {
        return Err(Error::InvalidArgument(format!(
            "quarter turns must be 0..=3, got {k_quarter_turns}"
        )));
    }
    let mut out = arr.clone();
    for _ in 0..k_quarter_turns {
        out = rotate_quarter(&out);
    }
    if let Some(axis) = flip {
        out = flip_array(&out, axis);
    }
    Ok(out)
}

fn rotated_spacing(spacing: Spacing, k_quarter_turns: u32) -> Spacing {
    if k_quarter_turns % 2 == 1 {
        spacing.transposed_inplane()
    } else {
        spacing
    }
}

/// Rotates every slice by `k` quarter turns, then optionally flips one
/// in-plane axis. Exact permutation of voxels — no interpolation. Odd
/// turn counts swap the in-plane spacing components.
pub fn rotate_flip_volume(
    v: &Volume3D,
    k_quarter_turns: u32,
    flip: Option<FlipAxis>,
) -> Result<Volume3D> {
    let data = rotate_flip_array(v.data(), k_quarter_turns, flip)?;
    Volume3D::new(data, rotated_spacing(v.spacing(), k_quarter_turns))
}

/// [`rotate_flip_volume`] for label maps; codes are permuted losslessly.
pub fn rotate_flip_labels(
    m: &LabelMap,
    k_quarter_turns: u32,
    flip: Option<FlipAxis>,
) -> Result<LabelMap> {
    let labels = rotate_flip_array(m.labels(), k_quarter_turns, flip)?;
    LabelMap::new(labels, rotated_spacing(m.spacing(), k_quarter_turns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2, Array3};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// One-hot label stack (background/foreground) matching `fg`.
    fn labels_from_mask(fg: &Array2<bool>) -> Array3<f64> {
        let (h, w) = fg.dim();
        let mut y = Array3::zeros((h, w, 2));
        for ((x, yy), &on) in fg.indexed_iter() {
            y[[x, yy, if on { 1 } else { 0 }]] = 1.0;
        }
        y
    }

    fn disk_mask(h: usize, w: usize, cx: f64, cy: f64, r: f64) -> Array2<bool> {
        Array2::from_shape_fn((h, w), |(x, y)| {
            (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r
        })
    }

    #[test]
    fn mixup_endpoints_reproduce_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x_i = Array2::from_shape_fn((4, 4), |_| rng.gen::<f64>());
        let x_j = Array2::from_shape_fn((4, 4), |_| rng.gen::<f64>());
        let y_i = labels_from_mask(&disk_mask(4, 4, 1.0, 1.0, 1.2));
        let y_j = labels_from_mask(&disk_mask(4, 4, 2.0, 2.0, 1.2));
        let (x, y) = mixup(&x_i, &x_j, &y_i, &y_j, 1.0).unwrap();
        assert_eq!(x, x_i);
        assert_eq!(y, y_i);
        let (x, y) = mixup(&x_i, &x_j, &y_i, &y_j, 0.0).unwrap();
        assert_eq!(x, x_j);
        assert_eq!(y, y_j);
    }

    #[test]
    fn mixup_midpoint_of_constant_images() {
        let x_i = Array2::zeros((3, 3));
        let x_j = Array2::from_elem((3, 3), 2.0);
        let y = Array3::from_shape_fn((3, 3, 2), |(_, _, c)| if c == 0 { 1.0 } else { 0.0 });
        let (x, _) = mixup(&x_i, &x_j, &y, &y, 0.5).unwrap();
        assert!(x.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mixup_stays_in_pixelwise_envelope_and_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x_i = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-3.0..3.0));
        let x_j = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-3.0..3.0));
        let y_i = labels_from_mask(&disk_mask(5, 5, 2.0, 2.0, 1.5));
        let y_j = labels_from_mask(&disk_mask(5, 5, 3.0, 2.0, 1.0));
        let lambda = rng.gen::<f64>();
        let (x, y) = mixup(&x_i, &x_j, &y_i, &y_j, lambda).unwrap();
        for ((a, b), v) in x_i.iter().zip(x_j.iter()).zip(x.iter()) {
            assert!(*v >= a.min(*b) - 1e-12 && *v <= a.max(*b) + 1e-12);
        }
        for px in 0..5 {
            for py in 0..5 {
                let sum: f64 = (0..2).map(|c| y[[px, py, c]]).sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!((0..2).all(|c| y[[px, py, c]] >= 0.0));
            }
        }
    }

    #[test]
    fn mixup_validates_shapes_and_lambda() {
        let x = Array2::<f64>::zeros((3, 3));
        let x_bad = Array2::<f64>::zeros((3, 4));
        let y = Array3::<f64>::zeros((3, 3, 2));
        assert!(mixup(&x, &x_bad, &y, &y, 0.5).is_err());
        assert!(mixup(&x, &x, &y, &y, 1.5).is_err());
        assert!(mixup(&x, &x, &y, &y, -0.1).is_err());
    }

    #[test]
    fn identical_masks_give_identity_transform() {
        let mask = disk_mask(20, 20, 9.0, 11.0, 4.5);
        let p = foreground_affine(&mask, &mask).unwrap();
        assert_eq!(p.scale, 1.0);
        let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(p.transform, identity);
    }

    #[test]
    fn hand_built_masks_give_half_scale() {
        // Four pixels at distance 5 around (10,10): centroid (10,10), l=5.
        let mut mask_i = Array2::from_elem((40, 40), false);
        for (x, y) in [(5, 10), (15, 10), (10, 5), (10, 15)] {
            mask_i[[x, y]] = true;
        }
        // Four pixels at distance 10 around (20,20): centroid (20,20), l=10.
        let mut mask_j = Array2::from_elem((40, 40), false);
        for (x, y) in [(10, 20), (30, 20), (20, 10), (20, 30)] {
            mask_j[[x, y]] = true;
        }
        let p = foreground_affine(&mask_i, &mask_j).unwrap();
        assert_eq!(p.centroid_i, (10.0, 10.0));
        assert_eq!(p.centroid_j, (20.0, 20.0));
        assert_eq!(p.l_i, 5.0);
        assert_eq!(p.l_j, 10.0);
        assert_eq!(p.scale, 0.5);
        let expected = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]];
        for (row, want) in p.transform.iter().zip(expected.iter()) {
            for (a, b) in row.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn translated_mask_gives_pure_translation() {
        let mask_i = disk_mask(30, 30, 10.0, 14.0, 3.5);
        let mut mask_j = Array2::from_elem((30, 30), false);
        for ((x, y), &on) in mask_i.indexed_iter() {
            if on {
                mask_j[[x + 4, y]] = true;
            }
        }
        let p = foreground_affine(&mask_i, &mask_j).unwrap();
        assert!((p.scale - 1.0).abs() < 1e-12);
        assert!((p.transform[0][2] - (-4.0)).abs() < 1e-9);
        assert!(p.transform[1][2].abs() < 1e-9);
    }

    #[test]
    fn empty_foreground_is_rejected() {
        let empty = Array2::from_elem((10, 10), false);
        let full = disk_mask(10, 10, 5.0, 5.0, 2.0);
        assert!(foreground_affine(&empty, &full).is_err());
        assert!(foreground_affine(&full, &empty).is_err());
    }

    #[test]
    fn single_pixel_pair_falls_back_to_translation() {
        let mut a = Array2::from_elem((9, 9), false);
        a[[2, 3]] = true;
        let mut b = Array2::from_elem((9, 9), false);
        b[[6, 1]] = true;
        let p = foreground_affine(&a, &b).unwrap();
        assert_eq!(p.scale, 1.0);
        assert_eq!(p.transform[0][2], -4.0);
        assert_eq!(p.transform[1][2], 2.0);
        // Extended slice i against a point slice j has no finite scale.
        let disk = disk_mask(9, 9, 4.0, 4.0, 2.0);
        assert!(foreground_affine(&disk, &b).is_err());
    }

    #[test]
    fn affine_mixup_with_identity_transform_equals_plain_mixup() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fg = disk_mask(12, 12, 6.0, 5.0, 3.0);
        let y = labels_from_mask(&fg);
        let x_i = Array2::from_shape_fn((12, 12), |_| rng.gen::<f64>());
        let x_j = Array2::from_shape_fn((12, 12), |_| rng.gen::<f64>());
        let (ax, ay) = affine_mixup(&x_i, &x_j, &y, &y, 0.4).unwrap();
        let (mx, my) = mixup(&x_i, &x_j, &y, &y, 0.4).unwrap();
        for (a, b) in ax.iter().zip(mx.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in ay.iter().zip(my.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_mixup_lambda_one_returns_first_image() {
        let fg_i = disk_mask(12, 12, 5.0, 5.0, 2.5);
        let fg_j = disk_mask(12, 12, 7.0, 6.0, 2.5);
        let x_i = Array2::from_elem((12, 12), 3.5);
        let x_j = Array2::from_elem((12, 12), -1.0);
        let (x, y) = affine_mixup(
            &x_i,
            &x_j,
            &labels_from_mask(&fg_i),
            &labels_from_mask(&fg_j),
            1.0,
        )
        .unwrap();
        assert_eq!(x, x_i);
        assert_eq!(y, labels_from_mask(&fg_i));
    }

    #[test]
    fn affine_mixup_undoes_a_pure_translation() {
        // Slice j is slice i translated by (+4, 0) with identical
        // foreground shape; at λ=0 the warp must restore slice i at
        // every interior pixel.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 24;
        let fg_i = disk_mask(n, n, 9.0, 12.0, 4.0);
        let mut x_i = Array2::zeros((n, n));
        for ((x, y), &on) in fg_i.indexed_iter() {
            if on {
                x_i[[x, y]] = rng.gen_range(0.5..2.0);
            }
        }
        let mut fg_j = Array2::from_elem((n, n), false);
        let mut x_j = Array2::zeros((n, n));
        for ((x, y), &on) in fg_i.indexed_iter() {
            if on {
                fg_j[[x + 4, y]] = true;
                x_j[[x + 4, y]] = x_i[[x, y]];
            }
        }
        let (x, _) = affine_mixup(
            &x_i,
            &x_j,
            &labels_from_mask(&fg_i),
            &labels_from_mask(&fg_j),
            0.0,
        )
        .unwrap();
        for x_pix in 0..n - 4 {
            for y_pix in 0..n {
                assert!(
                    (x[[x_pix, y_pix]] - x_i[[x_pix, y_pix]]).abs() < 1e-6,
                    "pixel ({x_pix}, {y_pix})"
                );
            }
        }
    }

    #[test]
    fn quarter_turn_matches_hand_example() {
        let mut data = Array3::zeros((2, 2, 1));
        data[[0, 0, 0]] = 1.0;
        data[[0, 1, 0]] = 2.0;
        data[[1, 0, 0]] = 3.0;
        data[[1, 1, 0]] = 4.0;
        let v = Volume3D::new(data, Spacing::synthetic_default()).unwrap();
        let r = rotate_flip_volume(&v, 1, None).unwrap();
        assert_eq!(r.data()[[0, 0, 0]], 3.0);
        assert_eq!(r.data()[[0, 1, 0]], 1.0);
        assert_eq!(r.data()[[1, 0, 0]], 4.0);
        assert_eq!(r.data()[[1, 1, 0]], 2.0);
    }

    #[test]
    fn rotation_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = Array3::from_shape_fn((4, 6, 2), |_| rng.gen::<f64>());
        let v = Volume3D::new(data, Spacing::new(1.5, 2.0, 10.0).unwrap()).unwrap();
        assert_eq!(rotate_flip_volume(&v, 0, None).unwrap(), v);
        let half = rotate_flip_volume(&v, 2, None).unwrap();
        assert_eq!(rotate_flip_volume(&half, 2, None).unwrap(), v);
        let quarter = rotate_flip_volume(&v, 1, None).unwrap();
        assert_eq!(quarter.dims(), (6, 4, 2));
        assert_eq!(quarter.spacing(), Spacing::new(2.0, 1.5, 10.0).unwrap());
        let back = rotate_flip_volume(&quarter, 3, None).unwrap();
        assert_eq!(back, v);
        assert!(rotate_flip_volume(&v, 4, None).is_err());
    }

    #[test]
    fn flips_are_involutions_and_labels_rotate_losslessly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let labels = Array3::from_shape_fn((5, 4, 2), |_| rng.gen_range(0..=4u8));
        let m = LabelMap::new(labels, Spacing::synthetic_default()).unwrap();
        for axis in [FlipAxis::X, FlipAxis::Y] {
            let flipped = rotate_flip_labels(&m, 0, Some(axis)).unwrap();
            assert_eq!(rotate_flip_labels(&flipped, 0, Some(axis)).unwrap(), m);
        }
        let rotated = rotate_flip_labels(&m, 1, Some(FlipAxis::X)).unwrap();
        let mut before: Vec<u8> = m.labels().iter().copied().collect();
        let mut after: Vec<u8> = rotated.labels().iter().copied().collect();
        before.sort_unstable();
        after.sort_unstable();
        assert_eq!(before, after);
    }

    #[test]
    fn lambda_sampling_is_seeded_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let draws: Vec<f64> = (0..200)
            .map(|_| sample_lambda(DEFAULT_MIXUP_ALPHA, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|l| (0.0..=1.0).contains(l)));
        let mut rng2 = ChaCha8Rng::seed_from_u64(10);
        let repeat: Vec<f64> = (0..200)
            .map(|_| sample_lambda(DEFAULT_MIXUP_ALPHA, &mut rng2).unwrap())
            .collect();
        assert_eq!(draws, repeat);
        assert!(sample_lambda(0.0, &mut rng).is_err());
        assert!(sample_lambda(f64::NAN, &mut rng).is_err());
    }
}
