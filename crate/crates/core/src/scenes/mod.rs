//! Synthetic scenes with known layout: a ground-truth label map, noisy and
//! optionally confused initial probability maps, and the triplets that the
//! layout satisfies.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{LabelMap, ProbabilityMap};
use crate::relations::{GeometricOracle, Relation, SpatialTriplet, TripletSet, BACKGROUND};

pub mod bundle;

/// Axis-aligned rectangle `[row0, row1) × [col0, col1)` painted with one category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub category: String,
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

/// Probability mass exchanged between two categories inside both regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Confusion {
    pub first: String,
    pub second: String,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub name: String,
    pub height: usize,
    pub width: usize,
    pub placements: Vec<Placement>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub confusion: Option<Confusion>,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    /// Background first, then placements in order.
    pub fn roster(&self) -> Vec<String> {
        std::iter::once(BACKGROUND.to_string())
            .chain(self.placements.iter().map(|p| p.category.clone()))
            .collect()
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidScene {
            scene: self.name.clone(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(self.invalid("grid must be at least 1x1"));
        }
        if self.placements.is_empty() {
            return Err(self.invalid("no placements"));
        }
        for (i, p) in self.placements.iter().enumerate() {
            if p.category == BACKGROUND {
                return Err(self.invalid("`background` is implicit and cannot be placed"));
            }
            if self.placements[..i].iter().any(|q| q.category == p.category) {
                return Err(self.invalid(format!("category `{}` placed twice", p.category)));
            }
            if p.row0 >= p.row1 || p.col0 >= p.col1 || p.row1 > self.height || p.col1 > self.width {
                return Err(self.invalid(format!(
                    "placement of `{}` [{}, {}) x [{}, {}) is empty or outside {}x{}",
                    p.category, p.row0, p.row1, p.col0, p.col1, self.height, self.width
                )));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(self.invalid("noise_sigma must be a finite non-negative number"));
        }
        if let Some(c) = &self.confusion {
            if !(0.0..=1.0).contains(&c.strength) {
                return Err(self.invalid("confusion strength must lie in [0, 1]"));
            }
            for name in [&c.first, &c.second] {
                if !self.placements.iter().any(|p| &p.category == name) {
                    return Err(self.invalid(format!("confusion names unplaced category `{name}`")));
                }
            }
            if c.first == c.second {
                return Err(self.invalid("confusion needs two different categories"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub roster: Vec<String>,
    pub gt_labels: LabelMap,
    pub init_probs: Vec<ProbabilityMap>,
    pub gt_triplets: TripletSet,
}

impl Scene {
    /// Number of non-background categories present in the ground truth.
    pub fn object_count(&self) -> usize {
        (1..self.roster.len())
            .filter(|&c| self.gt_labels.count(c) > 0)
            .count()
    }
}

pub fn paint_labels(spec: &SceneSpec) -> Result<LabelMap> {
    spec.validate()?;
    let mut labels = vec![0usize; spec.height * spec.width];
    for (idx, p) in spec.placements.iter().enumerate() {
        for r in p.row0..p.row1 {
            labels[r * spec.width + p.col0..r * spec.width + p.col1].fill(idx + 1);
        }
    }
    LabelMap::new(spec.height, spec.width, labels)
}

/// Paints placements in order (later ones win), mixes confused categories,
/// then adds clamped Gaussian noise and renormalizes each pixel.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    let gt_labels = paint_labels(spec)?;
    let roster = spec.roster();
    let n = roster.len();
    let pixels = spec.height * spec.width;

    let mut probs = vec![vec![0.0f64; pixels]; n];
    for (px, &l) in gt_labels.labels().iter().enumerate() {
        probs[l][px] = 1.0;
    }

    if let Some(c) = &spec.confusion {
        let a = roster.iter().position(|r| r == &c.first).unwrap();
        let b = roster.iter().position(|r| r == &c.second).unwrap();
        let s = c.strength;
        for (px, &l) in gt_labels.labels().iter().enumerate() {
            if l == a || l == b {
                let (pa, pb) = (probs[a][px], probs[b][px]);
                probs[a][px] = (1.0 - s) * pa + s * pb;
                probs[b][px] = (1.0 - s) * pb + s * pa;
            }
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
        for px in 0..pixels {
            let mut sum = 0.0;
            for p in probs.iter_mut() {
                p[px] = (p[px] + normal.sample(&mut rng)).clamp(0.0, 1.0);
                sum += p[px];
            }
            for p in probs.iter_mut() {
                p[px] = if sum > 0.0 {
                    (p[px] / sum).min(1.0)
                } else {
                    1.0 / n as f64
                };
            }
        }
    }

    let init_probs = probs
        .into_iter()
        .map(|v| ProbabilityMap::new(spec.height, spec.width, v))
        .collect::<Result<Vec<_>>>()?;
    let gt_triplets = derive_gt_triplets(&gt_labels, &roster)?;
    Ok(Scene {
        spec: spec.clone(),
        roster,
        gt_labels,
        init_probs,
        gt_triplets,
    })
}

/// Every `⟨s, r, o⟩` between distinct non-background categories whose
/// centroids satisfy `r` strictly. Background is roster index 0.
pub fn derive_gt_triplets(labels: &LabelMap, roster: &[String]) -> Result<TripletSet> {
    let oracle = GeometricOracle::new(labels, roster)?;
    let mut set = TripletSet::new(roster.to_vec());
    for s in roster.iter().skip(1) {
        for o in roster.iter().skip(1) {
            if s == o {
                continue;
            }
            for r in Relation::ALL {
                if oracle.relation_holds(s, r, o) {
                    set.insert(SpatialTriplet::new(s.clone(), r, o.clone()))?;
                }
            }
        }
    }
    Ok(set)
}

const CATEGORY_POOL: [&str; 12] = [
    "person", "cat", "dog", "car", "tree", "sky", "building", "grass", "road", "bird", "chair",
    "table",
];

/// Parameters of a randomly laid-out scene suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomSuite {
    pub count: usize,
    pub seed_base: u64,
    pub height: usize,
    pub width: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub noise_sigma: f64,
    /// Strength of the confusion injected between two random objects; 0
    /// disables confusion.
    pub confusion_strength: f64,
}

impl Default for RandomSuite {
    fn default() -> Self {
        RandomSuite {
            count: 50,
            seed_base: 42,
            height: 32,
            width: 32,
            min_objects: 2,
            max_objects: 4,
            noise_sigma: 0.15,
            confusion_strength: 0.5,
        }
    }
}

impl RandomSuite {
    pub fn specs(&self) -> Result<Vec<SceneSpec>> {
        (0..self.count)
            .map(|i| random_scene_spec(self, self.seed_base + i as u64))
            .collect()
    }
}

/// Splits `len` into `parts` contiguous bands with randomized boundaries.
fn random_bands(len: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let base = len / parts;
    let jitter = base / 4;
    let mut cuts = vec![0];
    for k in 1..parts {
        let center = k * base;
        let shift = if jitter > 0 { rng.gen_range(0..=2 * jitter) } else { jitter };
        cuts.push(center + shift - jitter);
    }
    cuts.push(len);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Shrinks a band by random margins, keeping at least a third of it.
fn shrink(band: (usize, usize), rng: &mut ChaCha8Rng) -> (usize, usize) {
    let len = band.1 - band.0;
    let max_margin = len / 3;
    let lo = rng.gen_range(0..=max_margin);
    let hi = rng.gen_range(0..=max_margin);
    (band.0 + lo, band.1 - hi)
}

/// Random layout on a grid of row and column bands. Objects occupy distinct
/// cells; objects sharing a row band share its exact row span (likewise for
/// columns), so each pair is either aligned or fully separated on each axis.
pub fn random_scene_spec(suite: &RandomSuite, seed: u64) -> Result<SceneSpec> {
    let name = format!("scene_{seed:05}");
    let invalid = |reason: &str| Error::InvalidScene {
        scene: name.clone(),
        reason: reason.to_string(),
    };
    if suite.min_objects == 0 || suite.min_objects > suite.max_objects || suite.max_objects > 9 {
        return Err(invalid("object count range must lie within 1..=9"));
    }
    if suite.height < 9 || suite.width < 9 {
        return Err(invalid("random scenes need at least 9x9 pixels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = rng.gen_range(suite.min_objects..=suite.max_objects);
    let (rows, cols) = loop {
        let r = rng.gen_range(1..=3usize);
        let c = rng.gen_range(1..=3usize);
        if r * c >= objects && (r, c) != (1, 1) || objects == 1 && (r, c) == (1, 1) {
            break (r, c);
        }
    };
    let row_spans: Vec<_> = random_bands(suite.height, rows, &mut rng)
        .into_iter()
        .map(|b| shrink(b, &mut rng))
        .collect();
    let col_spans: Vec<_> = random_bands(suite.width, cols, &mut rng)
        .into_iter()
        .map(|b| shrink(b, &mut rng))
        .collect();
    let mut cells: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
    cells.shuffle(&mut rng);
    let mut names: Vec<&str> = CATEGORY_POOL.to_vec();
    names.shuffle(&mut rng);

    let placements: Vec<Placement> = cells
        .iter()
        .take(objects)
        .zip(&names)
        .map(|(&(r, c), &category)| Placement {
            category: category.to_string(),
            row0: row_spans[r].0,
            row1: row_spans[r].1,
            col0: col_spans[c].0,
            col1: col_spans[c].1,
        })
        .collect();

    let confusion = if suite.confusion_strength > 0.0 && objects >= 2 {
        let mut pair: Vec<&Placement> = placements.iter().collect();
        pair.shuffle(&mut rng);
        Some(Confusion {
            first: pair[0].category.clone(),
            second: pair[1].category.clone(),
            strength: suite.confusion_strength,
        })
    } else {
        None
    };
    let spec = SceneSpec {
        name,
        height: suite.height,
        width: suite.width,
        placements,
        noise_sigma: suite.noise_sigma,
        confusion,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::argmax_labels;
    use crate::relations::detect_contradictions;
    use Relation::*;

    fn rect(category: &str, row0: usize, col0: usize, row1: usize, col1: usize) -> Placement {
        Placement {
            category: category.into(),
            row0,
            col0,
            row1,
            col1,
        }
    }

    fn spec(placements: Vec<Placement>) -> SceneSpec {
        SceneSpec {
            name: "t".into(),
            height: 4,
            width: 4,
            placements,
            noise_sigma: 0.0,
            confusion: None,
            seed: 7,
        }
    }

    #[test]
    fn clean_scene_argmax_is_gt() {
        let s = spec(vec![rect("a", 0, 0, 2, 2), rect("b", 2, 2, 4, 4)]);
        let scene = generate_scene(&s).unwrap();
        assert_eq!(argmax_labels(&scene.init_probs).unwrap(), scene.gt_labels);
        assert_eq!(scene.roster, vec!["background", "a", "b"]);
    }

    #[test]
    fn later_placements_overwrite() {
        let s = spec(vec![rect("a", 0, 0, 4, 4), rect("b", 1, 1, 2, 2)]);
        let labels = paint_labels(&s).unwrap();
        assert_eq!(labels.get(1, 1), 2);
        assert_eq!(labels.get(0, 0), 1);
    }

    #[test]
    fn confusion_equalizes_pair_at_half_strength() {
        let mut s = spec(vec![rect("a", 0, 0, 4, 2), rect("b", 0, 2, 4, 4)]);
        s.confusion = Some(Confusion {
            first: "a".into(),
            second: "b".into(),
            strength: 0.5,
        });
        let scene = generate_scene(&s).unwrap();
        for px in 0..16 {
            assert_eq!(scene.init_probs[1].values()[px], 0.5);
            assert_eq!(scene.init_probs[2].values()[px], 0.5);
        }
        s.confusion.as_mut().unwrap().strength = 0.25;
        let scene = generate_scene(&s).unwrap();
        assert_eq!(scene.init_probs[1].get(0, 0), 0.75);
        assert_eq!(scene.init_probs[2].get(0, 0), 0.25);
    }

    #[test]
    fn noise_is_seeded_and_normalized() {
        let mut s = spec(vec![rect("a", 0, 0, 2, 4)]);
        s.noise_sigma = 0.3;
        let one = generate_scene(&s).unwrap();
        let two = generate_scene(&s).unwrap();
        assert_eq!(one, two);
        for px in 0..16 {
            let sum: f64 = one.init_probs.iter().map(|m| m.values()[px]).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        s.seed += 1;
        assert_ne!(generate_scene(&s).unwrap().init_probs, one.init_probs);
    }

    #[test]
    fn invalid_specs() {
        let bad = spec(vec![rect("a", 0, 0, 5, 2)]);
        let err = generate_scene(&bad).unwrap_err();
        assert!(matches!(err, Error::InvalidScene { ref scene, .. } if scene == "t"));
        assert!(generate_scene(&spec(vec![])).is_err());
        assert!(generate_scene(&spec(vec![rect("a", 0, 0, 1, 1), rect("a", 1, 1, 2, 2)])).is_err());
        assert!(generate_scene(&spec(vec![rect("a", 2, 0, 2, 1)])).is_err());
    }

    #[test]
    fn horizontal_gt_triplets() {
        let labels = LabelMap::new(1, 4, vec![1, 1, 2, 2]).unwrap();
        let roster: Vec<String> = ["background", "A", "B"].iter().map(|s| s.to_string()).collect();
        let set = derive_gt_triplets(&labels, &roster).unwrap();
        assert!(set.contains("A", Left, "B"));
        assert!(set.contains("B", Right, "A"));
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn single_category_has_no_triplets() {
        let labels = LabelMap::new(2, 2, vec![0, 1, 1, 0]).unwrap();
        let roster: Vec<String> = ["background", "A"].iter().map(|s| s.to_string()).collect();
        assert!(derive_gt_triplets(&labels, &roster).unwrap().is_empty());
    }

    #[test]
    fn vertical_gt_triplets() {
        let labels = LabelMap::new(4, 2, vec![1, 1, 1, 1, 2, 2, 2, 2]).unwrap();
        let roster: Vec<String> = ["background", "A", "B"].iter().map(|s| s.to_string()).collect();
        let set = derive_gt_triplets(&labels, &roster).unwrap();
        assert!(set.contains("A", Above, "B"));
        assert!(set.contains("B", Below, "A"));
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn random_suite_is_deterministic_and_valid() {
        let suite = RandomSuite {
            count: 30,
            ..Default::default()
        };
        let a = suite.specs().unwrap();
        assert_eq!(a, suite.specs().unwrap());
        for s in &a {
            let n = s.placements.len();
            assert!((2..=4).contains(&n));
            let scene = generate_scene(s).unwrap();
            assert_eq!(scene.object_count(), n);
            assert!(detect_contradictions(&scene.gt_triplets).is_empty());
            assert!(!scene.gt_triplets.is_empty());
        }
    }
}
