//! Central finite-difference check of the analytic logit gradient of
//! `fidelity + alpha · spatial` on random small instances.
//!
//! Pseudo masks and weights are compiled once at the unperturbed state and
//! held fixed while differencing, matching how the analytic gradient treats
//! them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::ProbabilityMap;
use crate::logic::{compile_constraints, SpatialLossConfig};
use crate::refine::{evaluate_objective, SegmentationState};
use crate::relations::{Relation, SpatialTriplet, TripletSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub instances: usize,
    /// Grids are drawn up to `max_size × max_size`.
    pub max_size: usize,
    pub max_categories: usize,
    pub min_constraints: usize,
    pub alpha: f64,
    pub step: f64,
    pub tolerance: f64,
    /// Entries whose magnitudes are both below this floor are compared on an
    /// absolute scale of the floor.
    pub scale_floor: f64,
    /// Deliberately perturbs the analytic gradient (negative control).
    pub corrupt: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            seed: 7,
            instances: 24,
            max_size: 8,
            max_categories: 4,
            min_constraints: 2,
            alpha: 0.1,
            step: 1e-4,
            tolerance: 1e-4,
            scale_floor: 1e-4,
            corrupt: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckRow {
    pub instance: usize,
    pub height: usize,
    pub width: usize,
    pub categories: usize,
    pub constraints: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub options: GradcheckOptions,
    pub rows: Vec<GradcheckRow>,
}

impl GradcheckReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max)
    }
}

/// A random state, fidelity targets and constraint set.
pub struct Instance {
    pub state: SegmentationState,
    pub targets: Vec<ProbabilityMap>,
    pub triplets: TripletSet,
}

pub fn random_instance(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> Result<Instance> {
    let h = rng.gen_range(1..=opts.max_size);
    let w = rng.gen_range(1..=opts.max_size);
    let c = rng.gen_range(2..=opts.max_categories.max(2));
    let roster: Vec<String> = (0..c).map(|i| format!("c{i}")).collect();
    let normal = Normal::new(0.0, 1.5).unwrap();
    let logits: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..h * w).map(|_| normal.sample(rng)).collect())
        .collect();
    let state = SegmentationState::from_logits(roster.clone(), h, w, logits)?;

    let raw: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..h * w).map(|_| rng.gen_range(0.05..1.0)).collect())
        .collect();
    let targets = (0..c)
        .map(|k| {
            let values = (0..h * w)
                .map(|px| raw[k][px] / raw.iter().map(|r| r[px]).sum::<f64>())
                .collect();
            ProbabilityMap::new(h, w, values)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut candidates = Vec::new();
    for s in &roster {
        for o in &roster {
            if s != o {
                for r in Relation::ALL {
                    candidates.push(SpatialTriplet::new(s.clone(), r, o.clone()));
                }
            }
        }
    }
    candidates.shuffle(rng);
    let count = rng.gen_range(opts.min_constraints..=opts.min_constraints + 2);
    let triplets = TripletSet::from_triplets(roster, candidates.into_iter().take(count))?;
    Ok(Instance {
        state,
        targets,
        triplets,
    })
}

/// Largest entrywise relative error between analytic and central-difference
/// gradients for one instance.
pub fn check_instance(inst: &Instance, opts: &GradcheckOptions) -> Result<f64> {
    let loss_cfg = SpatialLossConfig::default();
    let compiled = compile_constraints(&inst.state, &inst.triplets, &loss_cfg)?;
    let mut analytic =
        evaluate_objective(&inst.state, &inst.targets, &compiled, opts.alpha, &loss_cfg)?.logit_grads;
    if opts.corrupt {
        let (k, px) = (0..analytic.len())
            .flat_map(|k| (0..analytic[k].len()).map(move |px| (k, px)))
            .max_by(|a, b| analytic[a.0][a.1].abs().total_cmp(&analytic[b.0][b.1].abs()))
            .expect("non-empty gradient");
        analytic[k][px] += 0.01 * analytic[k][px].abs().max(1.0);
    }

    let (h, w) = inst.state.shape();
    let objective = |logits: Vec<Vec<f64>>| -> Result<f64> {
        let state = SegmentationState::from_logits(inst.state.roster().to_vec(), h, w, logits)?;
        Ok(evaluate_objective(&state, &inst.targets, &compiled, opts.alpha, &loss_cfg)?.total)
    };
    let mut worst: f64 = 0.0;
    for k in 0..analytic.len() {
        for px in 0..h * w {
            let mut plus = inst.state.logits().to_vec();
            plus[k][px] += opts.step;
            let mut minus = inst.state.logits().to_vec();
            minus[k][px] -= opts.step;
            let numeric = (objective(plus)? - objective(minus)?) / (2.0 * opts.step);
            let a = analytic[k][px];
            let scale = a.abs().max(numeric.abs()).max(opts.scale_floor);
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    Ok(worst)
}

pub fn run_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = Vec::with_capacity(opts.instances);
    for instance in 0..opts.instances {
        let inst = random_instance(&mut rng, opts)?;
        let err = check_instance(&inst, opts)?;
        let (height, width) = inst.state.shape();
        rows.push(GradcheckRow {
            instance,
            height,
            width,
            categories: inst.state.num_categories(),
            constraints: inst.triplets.len(),
            max_rel_error: err,
            passed: err < opts.tolerance,
        });
    }
    Ok(GradcheckReport {
        options: *opts,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_instances_pass() {
        let report = run_gradcheck(&GradcheckOptions {
            instances: 8,
            ..Default::default()
        })
        .unwrap();
        assert!(report.all_passed(), "{:?}", report.rows);
        assert!(report.rows.iter().all(|r| r.constraints >= 2));
    }

    #[test]
    fn corrupted_gradient_fails() {
        let report = run_gradcheck(&GradcheckOptions {
            instances: 3,
            corrupt: true,
            ..Default::default()
        })
        .unwrap();
        assert!(report.rows.iter().all(|r| !r.passed));
    }

    #[test]
    fn single_pixel_passes() {
        let report = run_gradcheck(&GradcheckOptions {
            instances: 4,
            max_size: 1,
            ..Default::default()
        })
        .unwrap();
        assert!(report.all_passed());
        assert!(report.rows.iter().all(|r| r.height == 1 && r.width == 1));
    }
}
