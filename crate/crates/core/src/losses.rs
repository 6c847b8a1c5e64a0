//! Forward-only reference implementations of the training losses and
//! small network building blocks used by segmentation submissions:
//! class weighting, weighted cross entropy, generalized Dice, their
//! combination, squeeze-excitation channel gating, and the usual scalar
//! activation functions.
//!
//! Nothing here computes gradients; these are evaluation functionals
//! over per-pixel class scores, deterministic and reentrant.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking logarithms, so the
/// cross entropy stays finite on confident wrong predictions.
pub const LOG_EPSILON: f64 = 1e-12;

/// Per-pixel class scores: an `(n_pixels, n_classes)` matrix with entries
/// in `[0, 1]`.
///
/// With two or more columns each row must be a probability distribution
/// (sum 1 within 1e-6). A single-column map is also legal and scores one
/// class in isolation — the representation used for binary masks, where
/// the complementary probability is implicit. Targets use the same type
/// with one-hot (or single-column 0/1) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    scores: Array2<f64>,
}

impl ProbabilityMap {
    /// Validates and wraps a score matrix.
    pub fn new(scores: Array2<f64>) -> Result<Self> {
        let (n, l) = scores.dim();
        if n == 0 || l == 0 {
            return Err(Error::InvalidArgument(format!(
                "probability map must be non-empty, got {n}x{l}"
            )));
        }
        for (i, row) in scores.rows().into_iter().enumerate() {
            let mut sum = 0.0;
            for &v in row {
                if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "score {v} at pixel {i} outside [0, 1]"
                    )));
                }
                sum += v;
            }
            if l >= 2 && (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "pixel {i} distribution sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { scores })
    }

    /// One-hot map from per-pixel class indices.
    pub fn from_labels(labels: &[usize], n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::InvalidArgument("n_classes must be >= 1".into()));
        }
        let mut scores = Array2::zeros((labels.len(), n_classes));
        for (i, &c) in labels.iter().enumerate() {
            if c >= n_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {c} at pixel {i} exceeds n_classes {n_classes}"
                )));
            }
            scores[[i, c]] = 1.0;
        }
        Self::new(scores)
    }

    /// Single-column hard map from booleans (true → 1.0).
    pub fn from_binary_column(values: impl IntoIterator<Item = bool>) -> Result<Self> {
        let col: Vec<f64> = values.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
        let n = col.len();
        let scores = Array2::from_shape_vec((n, 1), col)
            .expect("vector length matches requested shape");
        Self::new(scores)
    }

    /// Score matrix, `(n_pixels, n_classes)`.
    pub fn scores(&self) -> &Array2<f64> {
        &self.scores
    }

    /// Number of pixels (rows).
    pub fn n_pixels(&self) -> usize {
        self.scores.nrows()
    }

    /// Number of scored classes (columns).
    pub fn n_classes(&self) -> usize {
        self.scores.ncols()
    }
}

/// How per-class weights are derived from target class counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `w_l = 1 / count_l` — the cross-entropy weighting.
    InverseCount,
    /// `w_l = 1 / count_l²` — the generalized-Dice weighting.
    InverseCountSquared,
    /// All classes weighted 1.
    Uniform,
}

/// Non-negative per-class weights plus the classes that had zero
/// instances (their inverse-count weight is undefined and is set to 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    weights: Vec<f64>,
    /// Classes with no target instances; weighted 0 in the inverse modes.
    pub zero_count_classes: Vec<usize>,
}

impl ClassWeights {
    /// Wraps explicit weights; all must be finite and non-negative.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("need at least one class weight".into()));
        }
        for (l, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "class weight {w} for class {l} must be finite and >= 0"
                )));
            }
        }
        Ok(Self { weights, zero_count_classes: Vec::new() })
    }

    /// Equal weight 1 for `n_classes` classes.
    pub fn uniform(n_classes: usize) -> Result<Self> {
        Self::new(vec![1.0; n_classes.max(1)])
    }

    /// Weight per class.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of classes covered.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// True when no classes are covered (never constructed, kept for
    /// API completeness).
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Derives class weights from target instance counts.
///
/// Counts are the column sums of `targets`. A class with zero instances
/// has an undefined inverse weight; it gets weight 0 (it cannot
/// contribute to the loss anyway) and is listed in
/// [`ClassWeights::zero_count_classes`].
pub fn class_weights(targets: &ProbabilityMap, mode: WeightMode) -> ClassWeights {
    let l = targets.n_classes();
    let mut weights = Vec::with_capacity(l);
    let mut zero_count_classes = Vec::new();
    for c in 0..l {
        let count: f64 = targets.scores().column(c).sum();
        let w = match mode {
            WeightMode::Uniform => 1.0,
            _ if count <= 0.0 => {
                log::warn!("class {c} has no target instances; weight set to 0");
                zero_count_classes.push(c);
                0.0
            }
            WeightMode::InverseCount => 1.0 / count,
            WeightMode::InverseCountSquared => 1.0 / (count * count),
        };
        weights.push(w);
    }
    ClassWeights { weights, zero_count_classes }
}

fn check_shapes(p: &ProbabilityMap, r: &ProbabilityMap, w: &ClassWeights) -> Result<()> {
    if p.scores().dim() != r.scores().dim() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {:?} vs target {:?}",
            p.scores().dim(),
            r.scores().dim()
        )));
    }
    if w.len() != p.n_classes() {
        return Err(Error::ShapeMismatch(format!(
            "{} class weights for {} classes",
            w.len(),
            p.n_classes()
        )));
    }
    Ok(())
}

/// Class-weighted categorical cross entropy,
/// `−(1/N) Σ_l w_l Σ_n r_ln ln(p_ln)` with natural logarithm and N the
/// total pixel count.
///
/// Predicted probabilities are clamped to `[LOG_EPSILON, 1]` inside the
/// logarithm, so the result is always finite and non-negative.
pub fn weighted_cross_entropy(
    p: &ProbabilityMap,
    r: &ProbabilityMap,
    w: &ClassWeights,
) -> Result<f64> {
    check_shapes(p, r, w)?;
    let n = p.n_pixels() as f64;
    let mut total = 0.0;
    for (l, &wl) in w.weights().iter().enumerate() {
        if wl == 0.0 {
            continue;
        }
        let mut class_sum = 0.0;
        for (pv, rv) in p.scores().column(l).iter().zip(r.scores().column(l).iter()) {
            if *rv > 0.0 {
                class_sum += rv * pv.clamp(LOG_EPSILON, 1.0).ln();
            }
        }
        total += wl * class_sum;
    }
    Ok(-total / n)
}

/// Generalized Dice loss,
/// `1 − 2·(Σ_l w_l Σ_n r_ln p_ln) / (Σ_l w_l Σ_n (r_ln + p_ln))`.
///
/// The value lies in `[0, 1]` and is invariant under positive rescaling
/// of the weights. A zero denominator (nothing present, nothing
/// predicted, or all weights zero) is defined as loss 0 with a warning:
/// predicting absence where nothing exists is not a mistake.
pub fn generalized_dice_loss(
    p: &ProbabilityMap,
    r: &ProbabilityMap,
    w: &ClassWeights,
) -> Result<f64> {
    check_shapes(p, r, w)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, &wl) in w.weights().iter().enumerate() {
        if wl == 0.0 {
            continue;
        }
        let mut inter = 0.0;
        let mut mass = 0.0;
        for (pv, rv) in p.scores().column(l).iter().zip(r.scores().column(l).iter()) {
            inter += rv * pv;
            mass += rv + pv;
        }
        num += wl * inter;
        den += wl * mass;
    }
    if den <= 0.0 {
        log::warn!("generalized Dice denominator is zero; defining the loss as 0");
        return Ok(0.0);
    }
    Ok((1.0 - 2.0 * num / den).clamp(0.0, 1.0))
}

/// Blend of the two losses: `mix·CE + (1−mix)·GD`, `mix ∈ [0, 1]`.
///
/// The cross-entropy and Dice terms take their own weight vectors, since
/// the two formulations prescribe different count exponents.
pub fn combo_loss(
    p: &ProbabilityMap,
    r: &ProbabilityMap,
    w_ce: &ClassWeights,
    w_dice: &ClassWeights,
    mix: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&mix) {
        return Err(Error::InvalidArgument(format!("mix must be in [0, 1], got {mix}")));
    }
    let ce = weighted_cross_entropy(p, r, w_ce)?;
    let gd = generalized_dice_loss(p, r, w_dice)?;
    Ok(mix * ce + (1.0 - mix) * gd)
}

/// Squeeze-excitation gating weights: a bottleneck pair
/// `W₁ ∈ ℝ^{C/r × C}`, `W₂ ∈ ℝ^{C × C/r}` for `C` channels and
/// reduction rate `r` (which must divide `C`).
#[derive(Debug, Clone, PartialEq)]
pub struct SEWeights {
    w1: Array2<f64>,
    w2: Array2<f64>,
}

impl SEWeights {
    /// Validates the bottleneck shapes: `w1` is `(C/r, C)`, `w2` is
    /// `(C, C/r)`, and the hidden width must divide the channel count.
    pub fn new(w1: Array2<f64>, w2: Array2<f64>) -> Result<Self> {
        let (hidden, channels) = w1.dim();
        if hidden == 0 || channels == 0 {
            return Err(Error::InvalidArgument("SE weights must be non-empty".into()));
        }
        if w2.dim() != (channels, hidden) {
            return Err(Error::ShapeMismatch(format!(
                "W2 is {:?}, expected ({channels}, {hidden})",
                w2.dim()
            )));
        }
        if channels % hidden != 0 {
            return Err(Error::InvalidArgument(format!(
                "hidden width {hidden} must divide channel count {channels}"
            )));
        }
        Ok(Self { w1, w2 })
    }

    /// Channel count `C`.
    pub fn channels(&self) -> usize {
        self.w1.ncols()
    }

    /// Bottleneck width `C/r`.
    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }
}

/// Squeeze-excitation gate: `sigmoid(W₂ · relu(W₁ z))`.
///
/// Every output lies strictly inside `(0, 1)` for finite inputs.
pub fn se_excitation(z: &[f64], weights: &SEWeights) -> Result<Vec<f64>> {
    let c = weights.channels();
    if z.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "descriptor length {} vs {c} channels",
            z.len()
        )));
    }
    let hidden: Vec<f64> = weights
        .w1
        .rows()
        .into_iter()
        .map(|row| {
            let pre: f64 = row.iter().zip(z).map(|(w, zv)| w * zv).sum();
            Activation::Relu.apply(pre)
        })
        .collect();
    Ok(weights
        .w2
        .rows()
        .into_iter()
        .map(|row| {
            let pre: f64 = row.iter().zip(&hidden).map(|(w, h)| w * h).sum();
            Activation::Sigmoid.apply(pre)
        })
        .collect())
}

/// Scalar activation functions in their standard closed forms.
///
/// The leaky-ReLU and ELU slopes are expected to be positive; the value
/// is applied as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `1 / (1 + e^{−x})`.
    Sigmoid,
    /// `max(0, x)`.
    Relu,
    /// `x` for `x ≥ 0`, else `α·x`.
    LeakyRelu(f64),
    /// `x` for `x ≥ 0`, else `α·(e^x − 1)`.
    Elu(f64),
    /// `x · sigmoid(x)`.
    Swish,
}

impl Activation {
    /// Evaluates the activation at `x`.
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(alpha) => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Activation::Elu(alpha) => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * (x.exp() - 1.0)
                }
            }
            Activation::Swish => x * Activation::Sigmoid.apply(x),
        }
    }
}
