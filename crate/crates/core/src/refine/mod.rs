//! Test-time refinement of per-category logit maps.
//!
//! The objective is a fidelity term (soft cross-entropy to the initial maps)
//! plus `alpha` times the spatial constraint loss. Regions and weights are
//! recompiled from the current maps at every step; Adam updates the logits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ProbabilityMap;
use crate::logic::{
    compile_constraints, evaluate_constraints, probability_gradients, softmax_backward,
    CompiledConstraint, ConstraintTerm, Reduction, SpatialLossConfig,
};
use crate::relations::TripletSet;

mod adam;
mod state;

pub use adam::{adam_step, AdamMoments};
pub use state::{SegmentationState, INIT_PROB_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    /// Weight of the spatial loss; 0 reproduces the unconstrained baseline.
    pub alpha: f64,
    pub steps: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Carried into reports; the loop itself draws no random numbers.
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            alpha: 0.1,
            steps: 15,
            learning_rate: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 42,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let betas_ok = (0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2);
        if self.alpha >= 0.0 && self.learning_rate > 0.0 && self.adam_eps > 0.0 && betas_ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("refine parameters out of range: {self:?}")))
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.alpha == 0.0
    }
}

pub fn init_state(roster: Vec<String>, initial_maps: &[ProbabilityMap]) -> Result<SegmentationState> {
    SegmentationState::from_probabilities(roster, initial_maps)
}

/// Soft-target cross-entropy `−Σ_ij Σ_c q_c log p_c` and its logit gradient
/// `p − q`. Targets are taken to be per-pixel distributions; the gradient is
/// then exact and vanishes identically where `p == q`.
pub fn fidelity_loss(
    state: &SegmentationState,
    targets: &[ProbabilityMap],
    reduction: Reduction,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if targets.len() != state.num_categories()
        || targets.iter().any(|t| t.shape() != state.shape())
    {
        return Err(Error::ShapeMismatch(
            "fidelity targets do not match the state".into(),
        ));
    }
    let scale = reduction.scale(state.pixels());
    let n = state.num_categories();
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(n);
    for (c, target) in targets.iter().enumerate() {
        let probs = state.probs(c).values();
        let mut g = Vec::with_capacity(probs.len());
        for (&p, &q) in probs.iter().zip(target.values()) {
            if q > 0.0 {
                loss -= q * p.max(f64::MIN_POSITIVE).ln();
            }
            g.push((p - q) * scale);
        }
        grads.push(g);
    }
    Ok((loss * scale, grads))
}

/// Objective value and logit gradient at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub fidelity: f64,
    pub spatial: f64,
    pub total: f64,
    pub terms: Vec<ConstraintTerm>,
    pub logit_grads: Vec<Vec<f64>>,
}

/// `fidelity + alpha · spatial` with the given (frozen) constraints.
pub fn evaluate_objective(
    state: &SegmentationState,
    targets: &[ProbabilityMap],
    compiled: &[CompiledConstraint],
    alpha: f64,
    loss_cfg: &SpatialLossConfig,
) -> Result<ObjectiveEval> {
    let (fidelity, mut logit_grads) = fidelity_loss(state, targets, loss_cfg.reduction)?;
    let spatial = evaluate_constraints(state, compiled, loss_cfg)?;
    let spatial_grads = softmax_backward(
        state,
        &probability_gradients(state, compiled, &spatial.terms),
    );
    for (g, s) in logit_grads.iter_mut().zip(&spatial_grads) {
        for (a, b) in g.iter_mut().zip(s) {
            *a += alpha * b;
        }
    }
    Ok(ObjectiveEval {
        fidelity,
        spatial: spatial.total,
        total: fidelity + alpha * spatial.total,
        terms: spatial.terms,
        logit_grads,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub fidelity: f64,
    pub spatial: f64,
    pub total: f64,
    pub weights: Vec<f64>,
}

/// One record per optimization step, each taken before that step's update,
/// plus the objective at the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub steps: Vec<StepRecord>,
    #[serde(rename = "final")]
    pub final_record: StepRecord,
}

impl RefineTrace {
    pub fn initial_total(&self) -> f64 {
        self.steps.first().unwrap_or(&self.final_record).total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub state: SegmentationState,
    pub trace: RefineTrace,
    /// Constraint diagnostics at the final state.
    pub final_terms: Vec<ConstraintTerm>,
}

fn record(step: usize, eval: &ObjectiveEval) -> StepRecord {
    StepRecord {
        step,
        fidelity: eval.fidelity,
        spatial: eval.spatial,
        total: eval.total,
        weights: eval.terms.iter().map(|t| t.weight).collect(),
    }
}

pub fn refine(
    roster: Vec<String>,
    init_probs: &[ProbabilityMap],
    triplets: &TripletSet,
    cfg: &RefineConfig,
    loss_cfg: &SpatialLossConfig,
) -> Result<Refinement> {
    cfg.validate()?;
    loss_cfg.validate()?;
    let mut state = init_state(roster, init_probs)?;
    let targets = state.all_probs().to_vec();
    let mut moments: Vec<AdamMoments> = (0..state.num_categories())
        .map(|_| AdamMoments::zeros(state.pixels()))
        .collect();
    let mut steps = Vec::with_capacity(cfg.steps);
    for t in 1..=cfg.steps {
        let compiled = compile_constraints(&state, triplets, loss_cfg)?;
        let eval = evaluate_objective(&state, &targets, &compiled, cfg.alpha, loss_cfg)?;
        steps.push(record(t - 1, &eval));
        state.update_logits(|logits| {
            for ((params, grads), m) in logits.iter_mut().zip(&eval.logit_grads).zip(&mut moments) {
                adam_step(params, grads, m, t as u64, cfg);
            }
        });
    }
    let compiled = compile_constraints(&state, triplets, loss_cfg)?;
    let eval = evaluate_objective(&state, &targets, &compiled, cfg.alpha, loss_cfg)?;
    Ok(Refinement {
        trace: RefineTrace {
            steps,
            final_record: record(cfg.steps, &eval),
        },
        final_terms: eval.terms,
        state,
    })
}
