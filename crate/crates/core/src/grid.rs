//! Dense 2-D grids: probability maps, label maps and coordinate arithmetic.
//!
//! Grids are row-major. Coordinates are 0-based: column `j` of row `i` has
//! `col = j`, `row = i`, with rows increasing downward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Col,
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::EmptyGrid { height, width });
    }
    Ok(())
}

/// Per-pixel category probabilities, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridData", into = "GridData")]
pub struct ProbabilityMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

/// Unvalidated JSON form shared by probability maps and raw grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridData {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl TryFrom<GridData> for ProbabilityMap {
    type Error = Error;

    fn try_from(data: GridData) -> Result<Self> {
        ProbabilityMap::new(data.height, data.width, data.values)
    }
}

impl From<ProbabilityMap> for GridData {
    fn from(map: ProbabilityMap) -> Self {
        GridData {
            height: map.height,
            width: map.width,
            values: map.values,
        }
    }
}

impl ProbabilityMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(height, width)?;
        if values.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                actual: values.len(),
            });
        }
        if let Some((idx, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::ValueOutOfRange {
                row: idx / width,
                col: idx % width,
                value,
            });
        }
        Ok(ProbabilityMap {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        check_dims(height, width)?;
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds a map from values already known to lie in `[0, 1]`.
    pub(crate) fn from_trusted(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        ProbabilityMap {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Per-pixel category indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<usize>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<usize>) -> Result<Self> {
        check_dims(height, width)?;
        if labels.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                actual: labels.len(),
            });
        }
        Ok(LabelMap {
            height,
            width,
            labels,
        })
    }

    /// Checks every label indexes one of `num_categories` categories.
    pub fn validate(&self, num_categories: usize) -> Result<()> {
        match self.labels.iter().position(|&l| l >= num_categories) {
            Some(idx) => Err(Error::LabelOutOfRange {
                row: idx / self.width,
                col: idx % self.width,
                label: self.labels[idx],
                categories: num_categories,
            }),
            None => Ok(()),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.width + col]
    }

    /// Binary indicator map of one category.
    pub fn one_hot(&self, category: usize) -> ProbabilityMap {
        let values = self
            .labels
            .iter()
            .map(|&l| if l == category { 1.0 } else { 0.0 })
            .collect();
        ProbabilityMap::from_trusted(self.height, self.width, values)
    }

    /// Number of pixels carrying `category`.
    pub fn count(&self, category: usize) -> usize {
        self.labels.iter().filter(|&&l| l == category).count()
    }
}

/// Row and column index grids. `origin` is the index of the first row/column
/// (0 everywhere in this crate; 1 reproduces 1-based conventions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateMaps {
    pub height: usize,
    pub width: usize,
    pub col_map: Vec<i64>,
    pub row_map: Vec<i64>,
}

impl CoordinateMaps {
    pub fn with_origin(height: usize, width: usize, origin: i64) -> Result<Self> {
        check_dims(height, width)?;
        let mut col_map = Vec::with_capacity(height * width);
        let mut row_map = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                col_map.push(j as i64 + origin);
                row_map.push(i as i64 + origin);
            }
        }
        Ok(CoordinateMaps {
            height,
            width,
            col_map,
            row_map,
        })
    }

    pub fn axis(&self, axis: Axis) -> &[i64] {
        match axis {
            Axis::Row => &self.row_map,
            Axis::Col => &self.col_map,
        }
    }
}

pub fn coordinate_maps(height: usize, width: usize) -> Result<CoordinateMaps> {
    CoordinateMaps::with_origin(height, width, 0)
}

/// A probability-weighted mean coordinate, held as `center + offset`.
///
/// `center` is the midpoint of the coordinate range, so offsets do not
/// depend on where coordinates start and region tests can be made in
/// centered coordinates (`coord - center` against `offset`) without rounding
/// differences between origins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMean {
    pub center: f64,
    pub offset: f64,
}

impl AxisMean {
    /// `(Σ coord·M) / (Σ M + ε)` from the centered sums
    /// `num = Σ (coord − center)·M` and `den = Σ M`; 0 when `den` is 0.
    fn from_centered(center: f64, num: f64, den: f64, epsilon: f64) -> Self {
        if den == 0.0 {
            return AxisMean {
                center,
                offset: -center,
            };
        }
        AxisMean {
            center,
            offset: (num - center * epsilon) / (den + epsilon),
        }
    }

    pub fn value(&self) -> f64 {
        self.center + self.offset
    }
}

/// Weighted mean of an explicit coordinate grid.
pub fn axis_mean_over(map: &ProbabilityMap, coords: &[i64], epsilon: f64) -> AxisMean {
    debug_assert_eq!(coords.len(), map.len());
    let lo = coords.iter().copied().min().unwrap_or(0);
    let hi = coords.iter().copied().max().unwrap_or(0);
    let center = (lo + hi) as f64 / 2.0;
    let (num, den) = map
        .values()
        .iter()
        .zip(coords)
        .fold((0.0, 0.0), |(num, den), (&m, &c)| {
            (num + (c as f64 - center) * m, den + m)
        });
    AxisMean::from_centered(center, num, den, epsilon)
}

/// Weighted mean 0-based coordinate along `axis`. Mirrored lines are
/// accumulated as pairs, so a map symmetric about the center yields the
/// center exactly when `epsilon` is 0.
pub fn axis_mean(map: &ProbabilityMap, axis: Axis, epsilon: f64) -> AxisMean {
    let (h, w) = map.shape();
    let len = match axis {
        Axis::Row => h,
        Axis::Col => w,
    };
    let center = (len - 1) as f64 / 2.0;
    let at = |line: usize, k: usize| match axis {
        Axis::Row => map.get(line, k),
        Axis::Col => map.get(k, line),
    };
    let across = match axis {
        Axis::Row => w,
        Axis::Col => h,
    };
    let mut num = 0.0;
    for line in 0..len / 2 {
        let mirror = len - 1 - line;
        let d = line as f64 - center;
        for k in 0..across {
            num += d * (at(line, k) - at(mirror, k));
        }
    }
    AxisMean::from_centered(center, num, map.sum(), epsilon)
}

/// `(Σ coord·M) / (Σ M + ε)` over the given coordinate grid; 0 when the map
/// has no mass.
pub fn weighted_mean_over(map: &ProbabilityMap, coords: &[i64], epsilon: f64) -> f64 {
    axis_mean_over(map, coords, epsilon).value()
}

/// Probability-weighted mean 0-based coordinate of `map` along `axis`.
pub fn weighted_mean_coordinate(map: &ProbabilityMap, axis: Axis, epsilon: f64) -> f64 {
    axis_mean(map, axis, epsilon).value()
}

/// Per-pixel index of the most probable category; ties go to the lowest index.
pub fn argmax_labels(maps: &[ProbabilityMap]) -> Result<LabelMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::ShapeMismatch("argmax needs at least one category".into()))?;
    let (h, w) = first.shape();
    if let Some(bad) = maps.iter().find(|m| m.shape() != (h, w)) {
        return Err(Error::ShapeMismatch(format!(
            "category maps {}x{} and {}x{}",
            h,
            w,
            bad.height(),
            bad.width()
        )));
    }
    let labels = (0..h * w)
        .map(|px| {
            let mut best = 0;
            for (c, map) in maps.iter().enumerate().skip(1) {
                if map.values[px] > maps[best].values[px] {
                    best = c;
                }
            }
            best
        })
        .collect();
    LabelMap::new(h, w, labels)
}
