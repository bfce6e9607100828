use crate::error::{Error, Result};
use crate::grid::{argmax_labels, LabelMap, ProbabilityMap};

/// Lower clamp applied to initial probabilities before taking logs.
pub const INIT_PROB_FLOOR: f64 = 1e-7;

/// Per-category logits and their pixelwise softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationState {
    roster: Vec<String>,
    height: usize,
    width: usize,
    logits: Vec<Vec<f64>>,
    probs: Vec<ProbabilityMap>,
}

impl SegmentationState {
    pub fn from_logits(
        roster: Vec<String>,
        height: usize,
        width: usize,
        logits: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if roster.is_empty() || roster.len() != logits.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} category names for {} logit maps",
                roster.len(),
                logits.len()
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::EmptyGrid { height, width });
        }
        if let Some(bad) = logits.iter().find(|l| l.len() != height * width) {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                actual: bad.len(),
            });
        }
        let mut state = SegmentationState {
            roster,
            height,
            width,
            logits,
            probs: Vec::new(),
        };
        state.recompute_probs();
        Ok(state)
    }

    /// Logits `log(clamp(p, 1e-7, 1))`; the softmax renormalizes maps that do
    /// not sum to one.
    pub fn from_probabilities(roster: Vec<String>, maps: &[ProbabilityMap]) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::ShapeMismatch("no category maps".into()))?;
        let (h, w) = first.shape();
        if let Some(bad) = maps.iter().find(|m| m.shape() != (h, w)) {
            return Err(Error::ShapeMismatch(format!(
                "category maps {h}x{w} and {}x{}",
                bad.height(),
                bad.width()
            )));
        }
        let logits = maps
            .iter()
            .map(|m| {
                m.values()
                    .iter()
                    .map(|&p| p.clamp(INIT_PROB_FLOOR, 1.0).ln())
                    .collect()
            })
            .collect();
        Self::from_logits(roster, h, w, logits)
    }

    fn recompute_probs(&mut self) {
        let n = self.logits.len();
        let pixels = self.height * self.width;
        let mut probs = vec![vec![0.0; pixels]; n];
        let mut exps = vec![0.0; n];
        for px in 0..pixels {
            let max = self
                .logits
                .iter()
                .map(|l| l[px])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (e, l) in exps.iter_mut().zip(&self.logits) {
                *e = (l[px] - max).exp();
                sum += *e;
            }
            for (p, e) in probs.iter_mut().zip(&exps) {
                p[px] = (e / sum).min(1.0);
            }
        }
        self.probs = probs
            .into_iter()
            .map(|v| ProbabilityMap::from_trusted(self.height, self.width, v))
            .collect();
    }

    /// Applies `f` to the logits, then refreshes the probabilities.
    pub fn update_logits(&mut self, f: impl FnOnce(&mut [Vec<f64>])) {
        f(&mut self.logits);
        self.recompute_probs();
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.roster.iter().position(|c| c == name)
    }

    pub fn num_categories(&self) -> usize {
        self.roster.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn probs(&self, category: usize) -> &ProbabilityMap {
        &self.probs[category]
    }

    pub fn all_probs(&self) -> &[ProbabilityMap] {
        &self.probs
    }

    pub fn argmax_labels(&self) -> LabelMap {
        argmax_labels(&self.probs).expect("state has at least one category of one shape")
    }
}
