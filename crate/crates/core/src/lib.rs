//! Evaluation and classical analysis toolkit for delayed-enhancement
//! cardiac MRI (DE-MRI) segmentation and pathology classification.
//!
//! The crate covers the whole batch workflow around a DE-MRI segmentation
//! challenge:
//!
//! * [`model`] — voxel grids, label maps and tissue selectors shared by
//!   every other module.
//! * [`nifti`] — a minimal NIfTI-1 reader/writer and on-disk case discovery.
//! * [`preprocess`] — per-slice Z-score normalization, centre cropping,
//!   in-plane resampling and epicardium-centroid slice alignment.
//! * [`augment`] — mix-up, its foreground-affine variant and lossless
//!   rotation/flip augmentation.
//! * [`losses`] — forward-only loss functionals (weighted cross entropy,
//!   generalized Dice, combo), class weighting, squeeze-excitation gating
//!   and activation functions.
//! * [`scarseg`] — classical scar segmentation: Rayleigh+Gaussian mixture
//!   fitted by EM, posterior thresholding, marker-based watershed and
//!   label post-processing.
//! * [`metrics`] — per-case and per-submission evaluation metrics
//!   (Dice, 3D Hausdorff, volumes, infarct percentages, PMO accuracies).
//! * [`ranking`] — rank aggregation over the nine challenge metrics.
//! * [`clinical`] — clinical-table ingestion, feature encoding, GLCM
//!   radiomics and small from-scratch classifiers with volume fusion.
//! * [`report`] — versioned JSON report schema tying `metrics` to the
//!   ranking tools.
//! * [`synth`] — synthetic phantoms and populations used by the test
//!   suite and for demo runs.

pub mod augment;
pub mod clinical;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod nifti;
pub mod preprocess;
pub mod ranking;
pub mod report;
pub mod scarseg;
pub mod synth;

pub use error::{Error, Result};
