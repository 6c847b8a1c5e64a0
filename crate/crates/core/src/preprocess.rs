//! Image preprocessing shared by the segmentation pipelines: per-slice
//! Z-score normalization, centre cropping (with symmetric zero padding
//! when the target exceeds the grid), in-plane bilinear resampling, and
//! integer-pixel slice alignment on the myocardium centroid.
//!
//! Everything here is a pure function; slices can be processed in
//! parallel without changing results.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::model::{region_mask, LabelMap, Spacing, TissueSelector, Volume3D, BACKGROUND};

/// Slices whose intensity standard deviation is at or below this value
/// are treated as constant and normalized to zero instead of dividing by
/// (almost) nothing.
pub const CONSTANT_SLICE_TOL: f64 = 1e-12;

/// Normalizes every slice to zero mean and unit standard deviation
/// (population form, divide by N).
///
/// Constant slices — standard deviation at or below
/// [`CONSTANT_SLICE_TOL`] — become all-zero; their indices are returned
/// so callers can surface the degeneracy. Spacing is unchanged.
pub fn zscore_slice(v: &Volume3D) -> (Volume3D, Vec<usize>) {
    let (nx, ny, nz) = v.dims();
    let data = v.data();
    let mut out = Array3::zeros((nx, ny, nz));
    let mut constant_slices = Vec::new();
    let n = (nx * ny) as f64;
    for z in 0..nz {
        let mut mean = 0.0;
        for y in 0..ny {
            for x in 0..nx {
                mean += data[[x, y, z]];
            }
        }
        mean /= n;
        let mut var = 0.0;
        for y in 0..ny {
            for x in 0..nx {
                let d = data[[x, y, z]] - mean;
                var += d * d;
            }
        }
        let std = (var / n).sqrt();
        if std <= CONSTANT_SLICE_TOL {
            log::warn!("slice {z} is constant; normalized to zero");
            constant_slices.push(z);
            continue; // output slice already zero
        }
        for y in 0..ny {
            for x in 0..nx {
                out[[x, y, z]] = (data[[x, y, z]] - mean) / std;
            }
        }
    }
    let normalized = Volume3D::new(out, v.spacing()).expect("extents preserved");
    (normalized, constant_slices)
}

/// Per-axis crop/pad window: source start, destination start, run length.
fn crop_axis(old: usize, new: usize) -> (usize, usize, usize) {
    if new <= old {
        // Centred window, biased toward low indices on odd remainders.
        ((old - new) / 2, 0, new)
    } else {
        // Symmetric padding, extra element on the high side when odd.
        (0, (new - old) / 2, old)
    }
}

fn center_crop_array<T: Copy>(
    arr: &Array3<T>,
    target_h: usize,
    target_w: usize,
    fill: T,
) -> Result<Array3<T>> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "crop target must be positive, got {target_h}x{target_w}"
        )));
    }
    let (nx, ny, nz) = arr.dim();
    let (sx0, dx0, lx) = crop_axis(nx, target_h);
    let (sy0, dy0, ly) = crop_axis(ny, target_w);
    let mut out = Array3::from_elem((target_h, target_w, nz), fill);
    for z in 0..nz {
        for dy in 0..ly {
            for dx in 0..lx {
                out[[dx0 + dx, dy0 + dy, z]] = arr[[sx0 + dx, sy0 + dy, z]];
            }
        }
    }
    Ok(out)
}

/// Crops (or zero-pads) every slice to `target_h x target_w` around the
/// slice centre.
///
/// `target_h` counts rows (x axis) and `target_w` columns (y axis). When
/// a target exceeds the current extent the slice is padded symmetrically
/// with zeros instead; crop windows are biased toward low indices on odd
/// remainders, pad borders toward high indices.
pub fn center_crop(v: &Volume3D, target_h: usize, target_w: usize) -> Result<Volume3D> {
    let data = center_crop_array(v.data(), target_h, target_w, 0.0)?;
    Volume3D::new(data, v.spacing())
}

/// [`center_crop`] for label maps; vacated voxels become background.
pub fn center_crop_labels(m: &LabelMap, target_h: usize, target_w: usize) -> Result<LabelMap> {
    let labels = center_crop_array(m.labels(), target_h, target_w, BACKGROUND)?;
    LabelMap::new(labels, m.spacing())
}

/// Precomputed 1-D bilinear sampling positions for one axis. `ratio` is
/// new spacing over old spacing; keeping it as a single factor makes the
/// unchanged-spacing case (ratio exactly 1) reproduce source voxels
/// bit-for-bit.
fn resample_coords(old_n: usize, new_n: usize, ratio: f64) -> Vec<(usize, usize, f64)> {
    (0..new_n)
        .map(|i| {
            // Half-pixel convention: voxel centres sit at (i + 0.5)·spacing;
            // samples outside the source grid clamp to the border centre.
            let pos = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (old_n - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(old_n - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

/// Resamples every slice to the requested in-plane spacing with bilinear
/// interpolation.
///
/// New extents are `round(old_extent · old_spacing / new_spacing)`
/// (at least 1); slice count and slice spacing are untouched. Sampling
/// uses voxel centres (half-pixel convention) with border clamping, so
/// requesting the current spacing returns the volume unchanged.
pub fn resample_inplane(v: &Volume3D, new_sx: f64, new_sy: f64) -> Result<Volume3D> {
    for (name, s) in [("new_sx", new_sx), ("new_sy", new_sy)] {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{name} must be finite and positive, got {s}"
            )));
        }
    }
    let (nx, ny, nz) = v.dims();
    let spacing = v.spacing();
    let ratio_x = new_sx / spacing.sx();
    let ratio_y = new_sy / spacing.sy();
    let new_nx = ((nx as f64 / ratio_x).round() as usize).max(1);
    let new_ny = ((ny as f64 / ratio_y).round() as usize).max(1);
    let xs = resample_coords(nx, new_nx, ratio_x);
    let ys = resample_coords(ny, new_ny, ratio_y);
    let data = v.data();
    let mut out = Array3::zeros((new_nx, new_ny, nz));
    for z in 0..nz {
        for (j, &(y0, y1, fy)) in ys.iter().enumerate() {
            for (i, &(x0, x1, fx)) in xs.iter().enumerate() {
                let top = data[[x0, y0, z]] * (1.0 - fx) + data[[x1, y0, z]] * fx;
                let bottom = data[[x0, y1, z]] * (1.0 - fx) + data[[x1, y1, z]] * fx;
                out[[i, j, z]] = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    Volume3D::new(out, Spacing::new(new_sx, new_sy, spacing.sz())?)
}

/// Translates every slice by whole pixels so its myocardium centroid
/// lands on the stack-mean centroid.
///
/// The reference point is the unweighted mean of the per-slice
/// myocardium centroids; shifts are rounded to the nearest pixel and
/// applied identically to image and labels, with vacated voxels filled
/// with zero intensity / background. Slices without myocardium pass
/// through unshifted. Returns the aligned volume and label map.
pub fn align_slices(v: &Volume3D, m: &LabelMap) -> Result<(Volume3D, LabelMap)> {
    if v.dims() != m.dims() {
        return Err(Error::ShapeMismatch(format!(
            "volume {:?} vs label map {:?}",
            v.dims(),
            m.dims()
        )));
    }
    let (nx, ny, nz) = v.dims();
    let myo = region_mask(m, TissueSelector::MYOCARDIUM_TOTAL);

    let mut centroids: Vec<Option<(f64, f64)>> = Vec::with_capacity(nz);
    for z in 0..nz {
        let mut count = 0usize;
        let (mut cx, mut cy) = (0.0, 0.0);
        for y in 0..ny {
            for x in 0..nx {
                if myo[[x, y, z]] {
                    cx += x as f64;
                    cy += y as f64;
                    count += 1;
                }
            }
        }
        centroids.push((count > 0).then(|| (cx / count as f64, cy / count as f64)));
    }

    let present: Vec<(f64, f64)> = centroids.iter().flatten().copied().collect();
    if present.is_empty() {
        return Ok((v.clone(), m.clone()));
    }
    let n = present.len() as f64;
    let ref_x = present.iter().map(|c| c.0).sum::<f64>() / n;
    let ref_y = present.iter().map(|c| c.1).sum::<f64>() / n;

    let data = v.data();
    let labels = m.labels();
    let mut out_data = Array3::zeros((nx, ny, nz));
    let mut out_labels = Array3::from_elem((nx, ny, nz), BACKGROUND);
    for z in 0..nz {
        let (dx, dy) = match centroids[z] {
            Some((cx, cy)) => ((ref_x - cx).round() as isize, (ref_y - cy).round() as isize),
            None => (0, 0),
        };
        for y in 0..ny {
            for x in 0..nx {
                let sx = x as isize - dx;
                let sy = y as isize - dy;
                if sx >= 0 && sy >= 0 && (sx as usize) < nx && (sy as usize) < ny {
                    out_data[[x, y, z]] = data[[sx as usize, sy as usize, z]];
                    out_labels[[x, y, z]] = labels[[sx as usize, sy as usize, z]];
                }
            }
        }
    }
    Ok((
        Volume3D::new(out_data, v.spacing())?,
        LabelMap::new(out_labels, m.spacing())?,
    ))
}
