//! Segmentation metrics, discrete constraint satisfaction and bucketed
//! baseline-vs-refined comparisons.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LabelMap;
use crate::logic::{pseudo_mask, SpatialLossConfig};
use crate::relations::{SpatialTriplet, TripletSet};

pub const DEFAULT_SATISFACTION_THRESHOLD: f64 = 0.95;

fn check_shapes(pred: &LabelMap, gt: &LabelMap) -> Result<()> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    Ok(())
}

/// Per-class (intersection, pred count, gt count).
fn class_counts(pred: &LabelMap, gt: &LabelMap, num_categories: usize) -> Vec<(usize, usize, usize)> {
    let mut counts = vec![(0, 0, 0); num_categories];
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if p < num_categories {
            counts[p].1 += 1;
        }
        if g < num_categories {
            counts[g].2 += 1;
            if p == g {
                counts[g].0 += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IouReport {
    /// `None` for classes absent from both prediction and ground truth.
    pub per_class_iou: Vec<Option<f64>>,
    pub miou: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// IoU per class; classes with an empty union are left out of the mean.
pub fn miou(pred: &LabelMap, gt: &LabelMap, num_categories: usize) -> Result<IouReport> {
    check_shapes(pred, gt)?;
    let per_class_iou: Vec<Option<f64>> = class_counts(pred, gt, num_categories)
        .into_iter()
        .map(|(inter, p, g)| {
            let union = p + g - inter;
            (union > 0).then(|| inter as f64 / union as f64)
        })
        .collect();
    let miou = mean(per_class_iou.iter().flatten().copied());
    Ok(IouReport { per_class_iou, miou })
}

/// Mean per-class recall over classes present in the ground truth.
pub fn macc(pred: &LabelMap, gt: &LabelMap, num_categories: usize) -> Result<f64> {
    check_shapes(pred, gt)?;
    Ok(mean(
        class_counts(pred, gt, num_categories)
            .into_iter()
            .filter(|&(_, _, g)| g > 0)
            .map(|(inter, _, g)| inter as f64 / g as f64),
    ))
}

/// At least `threshold` of the subject's predicted pixels fall in the region
/// derived from the object's predicted one-hot mask. A subject with no
/// predicted pixels satisfies the triplet vacuously.
pub fn triplet_satisfied(pred: &LabelMap, roster: &[String], triplet: &SpatialTriplet, threshold: f64) -> bool {
    let (Some(s), Some(o)) = (
        roster.iter().position(|c| c == &triplet.subject),
        roster.iter().position(|c| c == &triplet.object),
    ) else {
        return false;
    };
    let exact = SpatialLossConfig {
        epsilon: 0.0,
        ..Default::default()
    };
    let region = pseudo_mask(&pred.one_hot(o), triplet.relation, &exact);
    let (mut total, mut inside) = (0usize, 0usize);
    for (&l, &r) in pred.labels().iter().zip(&region.mask) {
        if l == s {
            total += 1;
            inside += r as usize;
        }
    }
    total == 0 || inside as f64 >= threshold * total as f64
}

/// Fraction of triplets satisfied; 1 for an empty set.
pub fn constraint_satisfaction(pred: &LabelMap, roster: &[String], triplets: &TripletSet, threshold: f64) -> f64 {
    if triplets.is_empty() {
        return 1.0;
    }
    let ok = triplets
        .iter()
        .filter(|t| triplet_satisfied(pred, roster, t, threshold))
        .count();
    ok as f64 / triplets.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scene: String,
    pub per_class_iou: Vec<Option<f64>>,
    pub miou: f64,
    pub macc: f64,
    pub constraint_satisfaction: f64,
    /// Non-background categories present in the ground truth.
    pub category_count: usize,
    pub constraint_count: usize,
    /// Constraints per non-background category present in the prediction.
    pub constraint_ratio: f64,
}

pub fn evaluate(
    scene: &str,
    pred: &LabelMap,
    gt: &LabelMap,
    roster: &[String],
    triplets: &TripletSet,
    threshold: f64,
) -> Result<EvalReport> {
    let n = roster.len();
    let iou = miou(pred, gt, n)?;
    let predicted = (1..n).filter(|&c| pred.count(c) > 0).count();
    Ok(EvalReport {
        scene: scene.to_string(),
        per_class_iou: iou.per_class_iou,
        miou: iou.miou,
        macc: macc(pred, gt, n)?,
        constraint_satisfaction: constraint_satisfaction(pred, roster, triplets, threshold),
        category_count: (1..n).filter(|&c| gt.count(c) > 0).count(),
        constraint_count: triplets.len(),
        constraint_ratio: if predicted == 0 {
            0.0
        } else {
            triplets.len() as f64 / predicted as f64
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    CategoryCount,
    ConstraintCount,
    ConstraintRatio,
}

impl Grouping {
    /// Sort key and label of the bucket a report falls into. Ratios are
    /// binned in steps of 0.5.
    fn bucket(self, report: &EvalReport) -> (u64, String) {
        match self {
            Grouping::CategoryCount => (report.category_count as u64, report.category_count.to_string()),
            Grouping::ConstraintCount => (
                report.constraint_count as u64,
                report.constraint_count.to_string(),
            ),
            Grouping::ConstraintRatio => {
                let bin = (report.constraint_ratio * 2.0).floor() as u64;
                let lo = bin as f64 / 2.0;
                (bin, format!("[{lo:.1},{:.1})", lo + 0.5))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketDelta {
    pub bucket: String,
    pub scenes: usize,
    pub baseline_miou: f64,
    pub refined_miou: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub grouping: Grouping,
    pub buckets: Vec<BucketDelta>,
    pub overall: BucketDelta,
}

/// Per-bucket mean mIoU of both runs and their difference (refined −
/// baseline). Buckets follow the refined run's reports; empty buckets are
/// never emitted.
pub fn compare_runs(baseline: &[EvalReport], refined: &[EvalReport], grouping: Grouping) -> Result<DeltaReport> {
    let base: BTreeMap<&str, &EvalReport> = baseline.iter().map(|r| (r.scene.as_str(), r)).collect();
    let names: BTreeSet<&str> = refined.iter().map(|r| r.scene.as_str()).collect();
    if base.len() != baseline.len() || names.len() != refined.len() {
        return Err(Error::SetMismatch("duplicate scene names in a run".into()));
    }
    if let Some(missing) = names.symmetric_difference(&base.keys().copied().collect()).next() {
        return Err(Error::SetMismatch(format!(
            "scene `{missing}` is in only one of the runs"
        )));
    }
    let mut buckets: BTreeMap<u64, (String, Vec<(f64, f64)>)> = BTreeMap::new();
    for r in refined {
        let (key, label) = grouping.bucket(r);
        buckets
            .entry(key)
            .or_insert_with(|| (label, Vec::new()))
            .1
            .push((base[r.scene.as_str()].miou, r.miou));
    }
    let summarize = |bucket: String, pairs: &[(f64, f64)]| {
        let b = mean(pairs.iter().map(|p| p.0));
        let r = mean(pairs.iter().map(|p| p.1));
        BucketDelta {
            bucket,
            scenes: pairs.len(),
            baseline_miou: b,
            refined_miou: r,
            delta: r - b,
        }
    };
    let all: Vec<(f64, f64)> = refined
        .iter()
        .map(|r| (base[r.scene.as_str()].miou, r.miou))
        .collect();
    Ok(DeltaReport {
        grouping,
        buckets: buckets
            .into_values()
            .map(|(label, pairs)| summarize(label, &pairs))
            .collect(),
        overall: summarize("all".into(), &all),
    })
}

/// Plot-ready CSV: bucket, scenes, baseline mIoU, refined mIoU, delta.
pub fn write_delta_csv<W: Write>(out: W, report: &DeltaReport) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Format(e.to_string());
    writer
        .write_record(["bucket", "scenes", "baseline_miou", "refined_miou", "delta"])
        .map_err(to_err)?;
    for b in report.buckets.iter().chain(std::iter::once(&report.overall)) {
        writer
            .write_record([
                b.bucket.clone(),
                b.scenes.to_string(),
                format!("{:.6}", b.baseline_miou),
                format!("{:.6}", b.refined_miou),
                format!("{:.6}", b.delta),
            ])
            .map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::Format(e.to_string()))
}
