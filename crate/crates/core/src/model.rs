//! Shared geometric and tissue data model.
//!
//! Everything downstream (I/O, preprocessing, segmentation, metrics) works
//! in terms of three types defined here: [`Volume3D`] for scalar images,
//! [`LabelMap`] for integer tissue masks on the same grid, and
//! [`TissueSelector`] for naming groups of tissue codes.
//!
//! Axis order is `(x, y, z)` with `z` the slice index from base to apex.
//! Grids are axis-aligned; [`Spacing`] carries the physical edge length of
//! a voxel in millimetres per axis. All types are immutable after
//! construction, so values can be shared freely across worker threads.

use ndarray::Array3;

use crate::error::{Error, Result};

/// Tissue code for image background.
pub const BACKGROUND: u8 = 0;
/// Tissue code for the left-ventricular cavity (blood pool).
pub const CAVITY: u8 = 1;
/// Tissue code for healthy (non-enhanced) myocardium.
pub const NORMAL_MYOCARDIUM: u8 = 2;
/// Tissue code for infarcted (hyper-enhanced) myocardium.
pub const INFARCT: u8 = 3;
/// Tissue code for persistent microvascular obstruction (the dark
/// no-reflow core inside an infarct).
pub const PMO: u8 = 4;

/// Highest valid tissue code.
pub const MAX_TISSUE_CODE: u8 = PMO;

/// Number of distinct tissue codes, background included.
pub const N_TISSUE_CODES: usize = 5;

/// Slice spacing (mm) assumed for synthetic volumes built without a file
/// header. File readers always prefer the header value when present.
pub const DEFAULT_SLICE_SPACING_MM: f64 = 10.0;

/// Physical voxel edge lengths in millimetres per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacing {
    sx: f64,
    sy: f64,
    sz: f64,
}

impl Spacing {
    /// Builds a spacing, requiring every component to be finite and
    /// strictly positive.
    pub fn new(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        for (name, s) in [("sx", sx), ("sy", sy), ("sz", sz)] {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "spacing component {name} must be finite and positive, got {s}"
                )));
            }
        }
        Ok(Self { sx, sy, sz })
    }

    /// Isotropic 1 mm spacing in-plane with the default slice gap; used
    /// by synthetic data built without a file header.
    pub fn synthetic_default() -> Self {
        Self { sx: 1.0, sy: 1.0, sz: DEFAULT_SLICE_SPACING_MM }
    }

    /// In-plane spacing along x (mm).
    pub fn sx(&self) -> f64 {
        self.sx
    }

    /// In-plane spacing along y (mm).
    pub fn sy(&self) -> f64 {
        self.sy
    }

    /// Slice spacing along z (mm, centre-to-centre).
    pub fn sz(&self) -> f64 {
        self.sz
    }

    /// Volume of a single voxel in cm³ (`sx·sy·sz / 1000`).
    pub fn voxel_volume_cm3(&self) -> f64 {
        self.sx * self.sy * self.sz / 1000.0
    }

    /// Returns the spacing with x and y swapped; used by quarter-turn
    /// rotations, which exchange the in-plane axes.
    pub fn transposed_inplane(&self) -> Self {
        Self { sx: self.sy, sy: self.sx, sz: self.sz }
    }
}

/// Volume of a single voxel in cm³ for explicit spacing components.
///
/// Fails on non-positive or non-finite components; prefer
/// [`Spacing::voxel_volume_cm3`] when a validated [`Spacing`] is at hand.
pub fn voxel_volume_cm3(sx: f64, sy: f64, sz: f64) -> Result<f64> {
    Ok(Spacing::new(sx, sy, sz)?.voxel_volume_cm3())
}

/// A scalar 3-D image: intensity grid plus physical spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    data: Array3<f64>,
    spacing: Spacing,
}

impl Volume3D {
    /// Wraps an intensity grid, requiring every extent to be at least 1.
    pub fn new(data: Array3<f64>, spacing: Spacing) -> Result<Self> {
        let (nx, ny, nz) = data.dim();
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidArgument(format!(
                "volume extents must all be >= 1, got {nx}x{ny}x{nz}"
            )));
        }
        Ok(Self { data, spacing })
    }

    /// Intensity grid indexed `(x, y, z)`.
    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    /// Physical voxel spacing.
    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Grid extents `(nx, ny, nz)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    /// Number of slices along z.
    pub fn n_slices(&self) -> usize {
        self.data.dim().2
    }

    /// Consumes the volume, returning its grid and spacing.
    pub fn into_parts(self) -> (Array3<f64>, Spacing) {
        (self.data, self.spacing)
    }
}

/// An integer tissue mask sharing the geometry of a [`Volume3D`].
///
/// Every voxel holds one of the five tissue codes
/// ([`BACKGROUND`]..=[`PMO`]); construction rejects anything else.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    labels: Array3<u8>,
    spacing: Spacing,
}

impl LabelMap {
    /// Wraps a tissue-code grid, validating extents and every code.
    ///
    /// The voxel index reported on failure counts x-fastest, matching the
    /// on-disk payload order of the NIfTI reader/writer.
    pub fn new(labels: Array3<u8>, spacing: Spacing) -> Result<Self> {
        let (nx, ny, nz) = labels.dim();
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidArgument(format!(
                "label map extents must all be >= 1, got {nx}x{ny}x{nz}"
            )));
        }
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let code = labels[[x, y, z]];
                    if code > MAX_TISSUE_CODE {
                        return Err(Error::InvalidLabel {
                            code: i64::from(code),
                            index: x + nx * (y + ny * z),
                        });
                    }
                }
            }
        }
        Ok(Self { labels, spacing })
    }

    /// Tissue-code grid indexed `(x, y, z)`.
    pub fn labels(&self) -> &Array3<u8> {
        &self.labels
    }

    /// Physical voxel spacing.
    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Grid extents `(nx, ny, nz)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.labels.dim()
    }

    /// Number of slices along z.
    pub fn n_slices(&self) -> usize {
        self.labels.dim().2
    }

    /// True when `other` has identical extents and spacing.
    pub fn same_grid(&self, other: &LabelMap) -> bool {
        self.dims() == other.dims() && self.spacing == other.spacing
    }

    /// Number of voxels whose code belongs to `sel`.
    pub fn count(&self, sel: TissueSelector) -> usize {
        self.labels.iter().filter(|&&c| sel.contains(c)).count()
    }

    /// Consumes the map, returning its grid and spacing.
    pub fn into_parts(self) -> (Array3<u8>, Spacing) {
        (self.labels, self.spacing)
    }
}

/// A non-empty set of tissue codes, stored as a bit set over codes 0–4.
///
/// The predefined selectors encode the tissue groupings used by every
/// evaluation metric: the myocardium selector deliberately includes the
/// scar sub-regions (the wall encloses them anatomically), and the
/// infarct selector includes PMO (a no-reflow core counts as infarcted
/// tissue).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TissueSelector(u8);

impl TissueSelector {
    /// Left-ventricular cavity only (code 1).
    pub const CAVITY: Self = Self(1 << CAVITY);
    /// Whole myocardial wall: normal myocardium, infarct and PMO (2–4).
    pub const MYOCARDIUM_TOTAL: Self = Self(1 << NORMAL_MYOCARDIUM | 1 << INFARCT | 1 << PMO);
    /// All infarcted tissue: infarct plus PMO (3–4).
    pub const INFARCT_PLUS_PMO: Self = Self(1 << INFARCT | 1 << PMO);
    /// Persistent microvascular obstruction only (code 4).
    pub const PMO: Self = Self(1 << PMO);

    /// Builds a selector from explicit codes; the set must be non-empty
    /// and every code must be a valid tissue code.
    pub fn from_codes(codes: &[u8]) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::InvalidArgument(
                "tissue selector needs at least one code".into(),
            ));
        }
        let mut bits = 0u8;
        for &code in codes {
            if code > MAX_TISSUE_CODE {
                return Err(Error::InvalidLabel { code: i64::from(code), index: 0 });
            }
            bits |= 1 << code;
        }
        Ok(Self(bits))
    }

    /// True when `code` belongs to this selector.
    pub fn contains(&self, code: u8) -> bool {
        code <= MAX_TISSUE_CODE && self.0 & (1 << code) != 0
    }

    /// Set union of two selectors.
    pub fn union(&self, other: Self) -> Self {
        Self(self.0 | other.0)
    }
}

/// Binary mask that is true exactly where the label belongs to `sel`.
pub fn region_mask(m: &LabelMap, sel: TissueSelector) -> Array3<bool> {
    m.labels().map(|&c| sel.contains(c))
}

/// Case-level and per-slice presence of any voxel matching `sel`.
///
/// `per_slice[k]` is true iff slice `k` contains at least one selected
/// voxel; the case-level flag is the disjunction over slices.
pub fn tissue_presence(m: &LabelMap, sel: TissueSelector) -> (bool, Vec<bool>) {
    let (nx, ny, nz) = m.dims();
    let labels = m.labels();
    let per_slice: Vec<bool> = (0..nz)
        .map(|z| {
            (0..ny).any(|y| (0..nx).any(|x| sel.contains(labels[[x, y, z]])))
        })
        .collect();
    let case_present = per_slice.iter().any(|&p| p);
    (case_present, per_slice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr3;

    fn spacing(sx: f64, sy: f64, sz: f64) -> Spacing {
        Spacing::new(sx, sy, sz).unwrap()
    }

    #[test]
    fn voxel_volume_matches_hand_values() {
        assert_eq!(spacing(2.0, 2.0, 10.0).voxel_volume_cm3(), 0.04);
        assert_eq!(spacing(1.0, 1.0, 1.0).voxel_volume_cm3(), 0.001);
        assert_eq!(spacing(1.25, 1.25, 10.0).voxel_volume_cm3(), 0.015625);
    }

    #[test]
    fn voxel_volume_rejects_bad_spacing() {
        assert!(voxel_volume_cm3(0.0, 1.0, 1.0).is_err());
        assert!(voxel_volume_cm3(1.0, -2.0, 1.0).is_err());
        assert!(voxel_volume_cm3(1.0, 1.0, f64::NAN).is_err());
        assert!(voxel_volume_cm3(1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn voxel_volume_is_linear_in_each_component() {
        let base = spacing(1.5, 2.0, 8.0).voxel_volume_cm3();
        let scaled = spacing(3.0, 2.0, 8.0).voxel_volume_cm3();
        assert!((scaled - 2.0 * base).abs() < 1e-15);
    }

    #[test]
    fn label_map_rejects_out_of_range_codes() {
        let labels = arr3(&[[[0u8, 1], [2, 7]]]);
        let err = LabelMap::new(labels, Spacing::synthetic_default()).unwrap_err();
        match err {
            Error::InvalidLabel { code, index } => {
                assert_eq!(code, 7);
                // Grid is 1x2x2; offending voxel sits at (0, 1, 1),
                // i.e. x-fastest linear index x + nx*(y + ny*z) = 3.
                assert_eq!(index, 3);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn label_map_rejects_empty_extent() {
        let labels = Array3::<u8>::zeros((0, 2, 2));
        assert!(LabelMap::new(labels, Spacing::synthetic_default()).is_err());
    }

    #[test]
    fn region_mask_empty_selection_is_all_false() {
        let m = LabelMap::new(Array3::zeros((3, 3, 2)), Spacing::synthetic_default()).unwrap();
        let mask = region_mask(&m, TissueSelector::PMO);
        assert!(mask.iter().all(|&v| !v));
    }

    #[test]
    fn region_mask_full_selection_is_all_true() {
        let m = LabelMap::new(
            Array3::from_elem((3, 3, 2), NORMAL_MYOCARDIUM),
            Spacing::synthetic_default(),
        )
        .unwrap();
        let mask = region_mask(&m, TissueSelector::MYOCARDIUM_TOTAL);
        assert!(mask.iter().all(|&v| v));
    }

    #[test]
    fn region_mask_infarct_plus_pmo_membership() {
        let labels = arr3(&[[[2u8], [3]], [[4], [0]]]); // 2x2x1 grid
        let m = LabelMap::new(labels, Spacing::synthetic_default()).unwrap();
        let mask = region_mask(&m, TissueSelector::INFARCT_PLUS_PMO);
        assert!(!mask[[0, 0, 0]]);
        assert!(mask[[0, 1, 0]]);
        assert!(mask[[1, 0, 0]]);
        assert!(!mask[[1, 1, 0]]);
    }

    #[test]
    fn region_mask_union_is_or_of_parts() {
        let labels = arr3(&[[[0u8, 1, 2], [3, 4, 0], [1, 2, 3]]]);
        let m = LabelMap::new(labels, Spacing::synthetic_default()).unwrap();
        let union = TissueSelector::CAVITY.union(TissueSelector::INFARCT_PLUS_PMO);
        let a = region_mask(&m, TissueSelector::CAVITY);
        let b = region_mask(&m, TissueSelector::INFARCT_PLUS_PMO);
        let u = region_mask(&m, union);
        for ((&u_v, &a_v), &b_v) in u.iter().zip(a.iter()).zip(b.iter()) {
            assert_eq!(u_v, a_v || b_v);
        }
    }

    #[test]
    fn code_counts_partition_the_grid() {
        let labels = arr3(&[[[0u8, 1, 2, 3], [4, 0, 1, 2], [3, 4, 0, 1]]]);
        let m = LabelMap::new(labels, Spacing::synthetic_default()).unwrap();
        let total: usize = (0..=MAX_TISSUE_CODE)
            .map(|c| m.count(TissueSelector::from_codes(&[c]).unwrap()))
            .sum();
        assert_eq!(total, 12);
    }

    #[test]
    fn tissue_presence_empty_selection() {
        let m = LabelMap::new(Array3::zeros((2, 2, 5)), Spacing::synthetic_default()).unwrap();
        let (case, per_slice) = tissue_presence(&m, TissueSelector::PMO);
        assert!(!case);
        assert_eq!(per_slice, vec![false; 5]);
    }

    #[test]
    fn tissue_presence_single_slice_hit() {
        let mut labels = Array3::<u8>::zeros((2, 2, 5));
        labels[[1, 1, 2]] = PMO;
        let m = LabelMap::new(labels, Spacing::synthetic_default()).unwrap();
        let (case, per_slice) = tissue_presence(&m, TissueSelector::PMO);
        assert!(case);
        assert_eq!(per_slice, vec![false, false, true, false, false]);
    }

    #[test]
    fn tissue_presence_all_slices() {
        let m = LabelMap::new(
            Array3::from_elem((2, 2, 4), NORMAL_MYOCARDIUM),
            Spacing::synthetic_default(),
        )
        .unwrap();
        let (case, per_slice) = tissue_presence(&m, TissueSelector::MYOCARDIUM_TOTAL);
        assert!(case);
        assert!(per_slice.iter().all(|&p| p));
    }

    #[test]
    fn selector_from_codes_validates() {
        assert!(TissueSelector::from_codes(&[]).is_err());
        assert!(TissueSelector::from_codes(&[5]).is_err());
        let sel = TissueSelector::from_codes(&[2, 3, 4]).unwrap();
        assert_eq!(sel, TissueSelector::MYOCARDIUM_TOTAL);
    }
}
