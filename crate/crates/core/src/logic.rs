//! Spatial constraints as a differentiable product-logic loss.
//!
//! A triplet `⟨s, r, o⟩` becomes `∀x. s(x) → RegionOf_r(o)(x)`, where the
//! region is the half-plane on the `r` side of the object map's mean
//! coordinate. With product-logic implication `p → q = 1 − p(1 − q)` and the
//! quantifier as a product over pixels, the negative log gives
//!
//! ```text
//! l = −Σ_ij log(1 − M_s[ij] · (1 − region[ij]))
//! ```
//!
//! Each `l` is weighted by a sigmoid-gated mean of the object map, so
//! constraints on categories the segmenter barely sees fade out. The region
//! and the weight are treated as constants when differentiating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{axis_mean, axis_mean_over, Axis, CoordinateMaps, ProbabilityMap};
use crate::refine::SegmentationState;
use crate::relations::{Relation, SpatialTriplet, TripletSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

impl Reduction {
    pub(crate) fn scale(self, pixels: usize) -> f64 {
        match self {
            Reduction::Sum => 1.0,
            Reduction::Mean => 1.0 / pixels as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialLossConfig {
    /// Denominator guard for mean coordinates and weights.
    pub epsilon: f64,
    /// Lower bound on the implication value inside the log.
    pub log_clamp: f64,
    pub sigmoid_bias: f64,
    pub sigmoid_scale: f64,
    pub reduction: Reduction,
}

impl Default for SpatialLossConfig {
    fn default() -> Self {
        SpatialLossConfig {
            epsilon: 1e-6,
            log_clamp: 1e-7,
            sigmoid_bias: 0.7,
            sigmoid_scale: 10.0,
            reduction: Reduction::Sum,
        }
    }
}

impl SpatialLossConfig {
    pub fn validate(&self) -> Result<()> {
        // epsilon = 0 is allowed: empty maps are handled without dividing.
        let ok = self.epsilon >= 0.0
            && self.log_clamp > 0.0
            && self.log_clamp < 1.0
            && self.sigmoid_scale > 0.0
            && self.sigmoid_bias > 0.0
            && self.sigmoid_bias < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "spatial loss parameters out of range: {self:?}"
            )))
        }
    }

    fn sigmoid(&self, v: f64) -> f64 {
        1.0 / (1.0 + (-self.sigmoid_scale * (v - self.sigmoid_bias)).exp())
    }
}

pub(crate) fn relation_axis(relation: Relation) -> Axis {
    match relation {
        Relation::Left | Relation::Right => Axis::Col,
        Relation::Above | Relation::Below => Axis::Row,
    }
}

/// Whether a coordinate lies in the `relation` half-plane around `mean`.
/// Pixels exactly on the mean belong to both opposite regions.
pub(crate) fn in_region(relation: Relation, coord: f64, mean: f64) -> bool {
    match relation {
        Relation::Right | Relation::Below => coord >= mean,
        Relation::Left | Relation::Above => coord <= mean,
    }
}

/// Binary half-plane next to an anchor category.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoMask {
    pub relation: Relation,
    pub height: usize,
    pub width: usize,
    pub mask: Vec<bool>,
    pub mean_coord: f64,
}

impl PseudoMask {
    pub fn as_values(&self) -> Vec<f64> {
        self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn area(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

pub fn pseudo_mask(anchor_map: &ProbabilityMap, relation: Relation, cfg: &SpatialLossConfig) -> PseudoMask {
    let axis = relation_axis(relation);
    let mean = axis_mean(anchor_map, axis, cfg.epsilon);
    let (h, w) = anchor_map.shape();
    let mask = (0..h * w)
        .map(|idx| {
            let coord = match axis {
                Axis::Row => idx / w,
                Axis::Col => idx % w,
            };
            in_region(relation, coord as f64 - mean.center, mean.offset)
        })
        .collect();
    PseudoMask {
        relation,
        height: h,
        width: w,
        mask,
        mean_coord: mean.value(),
    }
}

/// Same mask built against explicit coordinate grids (any origin).
pub fn pseudo_mask_with_coords(
    anchor_map: &ProbabilityMap,
    relation: Relation,
    coords: &CoordinateMaps,
    epsilon: f64,
) -> PseudoMask {
    let axis_coords = coords.axis(relation_axis(relation));
    let mean = axis_mean_over(anchor_map, axis_coords, epsilon);
    PseudoMask {
        relation,
        height: anchor_map.height(),
        width: anchor_map.width(),
        mask: axis_coords
            .iter()
            .map(|&c| in_region(relation, c as f64 - mean.center, mean.offset))
            .collect(),
        mean_coord: mean.value(),
    }
}

/// Product-logic implication `p → q = 1 − p·(1 − q)`.
pub fn fuzzy_implication(p: f64, q: f64) -> f64 {
    1.0 - p * (1.0 - q)
}

/// Negative log of the product-quantified implication `subject → region`,
/// and its gradient with respect to each subject probability.
pub fn constraint_loss(
    subject_map: &ProbabilityMap,
    pmask: &PseudoMask,
    cfg: &SpatialLossConfig,
) -> Result<(f64, Vec<f64>)> {
    if subject_map.shape() != (pmask.height, pmask.width) {
        return Err(Error::ShapeMismatch(format!(
            "subject map {}x{} vs pseudo mask {}x{}",
            subject_map.height(),
            subject_map.width(),
            pmask.height,
            pmask.width
        )));
    }
    let scale = cfg.reduction.scale(subject_map.len());
    let mut loss = 0.0;
    let grad = subject_map
        .values()
        .iter()
        .zip(&pmask.mask)
        .map(|(&m, &inside)| {
            let q = if inside { 1.0 } else { 0.0 };
            let truth = fuzzy_implication(m, q);
            if truth < cfg.log_clamp {
                loss -= cfg.log_clamp.ln();
                0.0
            } else {
                loss -= truth.ln();
                (1.0 - q) / truth * scale
            }
        })
        .collect();
    Ok((loss * scale, grad))
}

/// Sigmoid-gated mean of the anchor's scores: `Σ M·σ(M) / (Σ σ(M) + ε)`.
pub fn constraint_weight(anchor_map: &ProbabilityMap, cfg: &SpatialLossConfig) -> f64 {
    let (num, den) = anchor_map.values().iter().fold((0.0, 0.0), |(n, d), &m| {
        let s = cfg.sigmoid(m);
        (n + m * s, d + s)
    });
    if num == 0.0 {
        return 0.0;
    }
    num / (den + cfg.epsilon)
}

/// Per-triplet diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintTerm {
    pub triplet: SpatialTriplet,
    pub loss: f64,
    pub weight: f64,
    pub mean_coord: f64,
    /// `∂loss/∂M_subject`, unweighted.
    #[serde(skip)]
    pub per_pixel_grad: Vec<f64>,
}

/// A triplet bound to state indices with its region and weight frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledConstraint {
    pub triplet: SpatialTriplet,
    pub subject: usize,
    pub object: usize,
    pub mask: PseudoMask,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialLoss {
    pub total: f64,
    pub terms: Vec<ConstraintTerm>,
}

fn category_index(state: &SegmentationState, name: &str) -> Result<usize> {
    state
        .category_index(name)
        .ok_or_else(|| Error::UnknownCategory(name.to_string()))
}

/// Builds each triplet's pseudo mask and weight from the object's current map.
pub fn compile_constraints(
    state: &SegmentationState,
    triplets: &TripletSet,
    cfg: &SpatialLossConfig,
) -> Result<Vec<CompiledConstraint>> {
    triplets
        .iter()
        .map(|t| {
            let subject = category_index(state, &t.subject)?;
            let object = category_index(state, &t.object)?;
            let anchor = state.probs(object);
            Ok(CompiledConstraint {
                triplet: t.clone(),
                subject,
                object,
                mask: pseudo_mask(anchor, t.relation, cfg),
                weight: constraint_weight(anchor, cfg),
            })
        })
        .collect()
}

/// `Σ_t w_t · l_t` with the given regions and weights, summed in triplet order.
pub fn evaluate_constraints(
    state: &SegmentationState,
    compiled: &[CompiledConstraint],
    cfg: &SpatialLossConfig,
) -> Result<SpatialLoss> {
    let mut total = 0.0;
    let mut terms = Vec::with_capacity(compiled.len());
    for c in compiled {
        let (loss, grad) = constraint_loss(state.probs(c.subject), &c.mask, cfg)?;
        total += c.weight * loss;
        terms.push(ConstraintTerm {
            triplet: c.triplet.clone(),
            loss,
            weight: c.weight,
            mean_coord: c.mask.mean_coord,
            per_pixel_grad: grad,
        });
    }
    Ok(SpatialLoss { total, terms })
}

pub fn spatial_loss(
    state: &SegmentationState,
    triplets: &TripletSet,
    cfg: &SpatialLossConfig,
) -> Result<SpatialLoss> {
    let compiled = compile_constraints(state, triplets, cfg)?;
    evaluate_constraints(state, &compiled, cfg)
}

/// Weighted per-pixel gradient with respect to each category's probability
/// map, summing every term whose subject is that category.
pub fn probability_gradients(
    state: &SegmentationState,
    compiled: &[CompiledConstraint],
    terms: &[ConstraintTerm],
) -> Vec<Vec<f64>> {
    let mut grads = vec![vec![0.0; state.pixels()]; state.num_categories()];
    for (c, term) in compiled.iter().zip(terms) {
        for (g, &d) in grads[c.subject].iter_mut().zip(&term.per_pixel_grad) {
            *g += term.weight * d;
        }
    }
    grads
}

/// Chain rule through the pixelwise softmax:
/// `∂/∂z_k = p_k · (g_k − Σ_c g_c p_c)`.
pub fn softmax_backward(state: &SegmentationState, prob_grads: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = state.num_categories();
    let mut out = vec![vec![0.0; state.pixels()]; n];
    for px in 0..state.pixels() {
        let dot: f64 = (0..n).map(|c| prob_grads[c][px] * state.probs(c).values()[px]).sum();
        for (k, row) in out.iter_mut().enumerate() {
            let p = state.probs(k).values()[px];
            row[px] = p * (prob_grads[k][px] - dot);
        }
    }
    out
}

/// Gradient of the spatial total with respect to every logit, regions and
/// weights held fixed.
pub fn spatial_loss_logit_gradient(
    state: &SegmentationState,
    triplets: &TripletSet,
    cfg: &SpatialLossConfig,
) -> Result<Vec<Vec<f64>>> {
    let compiled = compile_constraints(state, triplets, cfg)?;
    let loss = evaluate_constraints(state, &compiled, cfg)?;
    Ok(softmax_backward(
        state,
        &probability_gradients(state, &compiled, &loss.terms),
    ))
}
