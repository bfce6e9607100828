//! Relation oracles answer the two question shapes the calibration pipeline
//! asks: a yes/no "does ⟨s, r, o⟩ hold?" and a two-way choice between
//! relations for the same category pair.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Relation, TripletKey};
use crate::error::{Error, Result};
use crate::grid::LabelMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    First,
    Second,
    Neither,
}

/// Answers must be deterministic for fixed inputs.
pub trait RelationOracle: Send + Sync {
    fn holds(&self, subject: &str, relation: Relation, object: &str) -> Answer;

    /// Is `subject` at `first` or at `second` of `object`?
    fn choose(&self, subject: &str, first: Relation, second: Relation, object: &str) -> Choice;
}

/// Affirms everything; picks the first option of every choice.
#[derive(Debug, Clone, Copy, Default)]
pub struct PermissiveOracle;

impl RelationOracle for PermissiveOracle {
    fn holds(&self, _: &str, _: Relation, _: &str) -> Answer {
        Answer::Yes
    }

    fn choose(&self, _: &str, _: Relation, _: Relation, _: &str) -> Choice {
        Choice::First
    }
}

/// Answers from the centroids of a label map. Rows grow downward, so
/// `Above` means a strictly smaller centroid row.
#[derive(Debug, Clone)]
pub struct GeometricOracle {
    /// Category name → (row, col) centroid; absent categories are missing.
    centroids: HashMap<String, (f64, f64)>,
}

impl GeometricOracle {
    pub fn new(labels: &LabelMap, roster: &[String]) -> Result<Self> {
        labels.validate(roster.len())?;
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); roster.len()];
        for (idx, &l) in labels.labels().iter().enumerate() {
            let entry = &mut sums[l];
            entry.0 += (idx / labels.width()) as f64;
            entry.1 += (idx % labels.width()) as f64;
            entry.2 += 1;
        }
        let centroids = roster
            .iter()
            .zip(sums)
            .filter(|(_, (_, _, n))| *n > 0)
            .map(|(name, (r, c, n))| (name.clone(), (r / n as f64, c / n as f64)))
            .collect();
        Ok(GeometricOracle { centroids })
    }

    pub fn centroid(&self, category: &str) -> Option<(f64, f64)> {
        self.centroids.get(category).copied()
    }

    pub fn relation_holds(&self, subject: &str, relation: Relation, object: &str) -> bool {
        let (Some(s), Some(o)) = (self.centroid(subject), self.centroid(object)) else {
            return false;
        };
        match relation {
            Relation::Above => s.0 < o.0,
            Relation::Below => s.0 > o.0,
            Relation::Left => s.1 < o.1,
            Relation::Right => s.1 > o.1,
        }
    }
}

impl RelationOracle for GeometricOracle {
    fn holds(&self, subject: &str, relation: Relation, object: &str) -> Answer {
        if self.relation_holds(subject, relation, object) {
            Answer::Yes
        } else {
            Answer::No
        }
    }

    fn choose(&self, subject: &str, first: Relation, second: Relation, object: &str) -> Choice {
        if self.relation_holds(subject, first, object) {
            Choice::First
        } else if self.relation_holds(subject, second, object) {
            Choice::Second
        } else {
            Choice::Neither
        }
    }
}

/// Recorded answers keyed by query. Unrecorded holds-queries are
/// `Unknown`; unrecorded choices are `Neither`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnswerTable {
    holds: HashMap<TripletKey, Answer>,
    choose: HashMap<(String, Relation, Relation, String), Choice>,
}

impl AnswerTable {
    pub fn set_holds(&mut self, subject: &str, relation: Relation, object: &str, answer: Answer) {
        self.holds
            .insert((subject.to_string(), relation, object.to_string()), answer);
    }

    pub fn set_choose(
        &mut self,
        subject: &str,
        first: Relation,
        second: Relation,
        object: &str,
        choice: Choice,
    ) {
        self.choose.insert(
            (subject.to_string(), first, second, object.to_string()),
            choice,
        );
    }

    pub fn holds_len(&self) -> usize {
        self.holds.len()
    }

    pub fn choose_len(&self) -> usize {
        self.choose.len()
    }

    /// Serializable form, sorted by key.
    pub fn to_file(&self) -> AnswerFile {
        let mut holds: Vec<HoldsEntry> = self
            .holds
            .iter()
            .map(|((s, r, o), a)| HoldsEntry {
                s: s.clone(),
                r: *r,
                o: o.clone(),
                a: *a,
            })
            .collect();
        holds.sort_by(|x, y| (&x.s, x.r, &x.o).cmp(&(&y.s, y.r, &y.o)));
        let mut choose: Vec<ChooseEntry> = self
            .choose
            .iter()
            .map(|((s, r1, r2, o), a)| ChooseEntry {
                s: s.clone(),
                r1: *r1,
                r2: *r2,
                o: o.clone(),
                a: *a,
            })
            .collect();
        choose.sort_by(|x, y| (&x.s, x.r1, x.r2, &x.o).cmp(&(&y.s, y.r1, y.r2, &y.o)));
        AnswerFile { holds, choose }
    }

    /// Builds a table, rejecting entries that contradict an earlier entry
    /// for the same query.
    pub fn from_file(file: AnswerFile) -> Result<Self> {
        let mut table = AnswerTable::default();
        for (n, e) in file.holds.into_iter().enumerate() {
            let key = (e.s.clone(), e.r, e.o.clone());
            if let Some(prev) = table.holds.insert(key, e.a) {
                if prev != e.a {
                    return Err(Error::InvalidConfig(format!(
                        "holds entry {n} ({}, {}, {}) conflicts with an earlier answer",
                        e.s, e.r, e.o
                    )));
                }
            }
        }
        for (n, e) in file.choose.into_iter().enumerate() {
            let key = (e.s.clone(), e.r1, e.r2, e.o.clone());
            if let Some(prev) = table.choose.insert(key, e.a) {
                if prev != e.a {
                    return Err(Error::InvalidConfig(format!(
                        "choose entry {n} ({}, {}/{}, {}) conflicts with an earlier answer",
                        e.s, e.r1, e.r2, e.o
                    )));
                }
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldsEntry {
    pub s: String,
    pub r: Relation,
    pub o: String,
    pub a: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChooseEntry {
    pub s: String,
    pub r1: Relation,
    pub r2: Relation,
    pub o: String,
    pub a: Choice,
}

/// On-disk scripted-oracle answers: `{"holds": [...], "choose": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerFile {
    #[serde(default)]
    pub holds: Vec<HoldsEntry>,
    #[serde(default)]
    pub choose: Vec<ChooseEntry>,
}

/// Replays an [`AnswerTable`].
#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    table: AnswerTable,
}

impl ScriptedOracle {
    pub fn new(table: AnswerTable) -> Self {
        ScriptedOracle { table }
    }

    pub fn table(&self) -> &AnswerTable {
        &self.table
    }
}

impl RelationOracle for ScriptedOracle {
    fn holds(&self, subject: &str, relation: Relation, object: &str) -> Answer {
        self.table
            .holds
            .get(&(subject.to_string(), relation, object.to_string()))
            .copied()
            .unwrap_or(Answer::Unknown)
    }

    fn choose(&self, subject: &str, first: Relation, second: Relation, object: &str) -> Choice {
        self.table
            .choose
            .get(&(subject.to_string(), first, second, object.to_string()))
            .copied()
            .unwrap_or(Choice::Neither)
    }
}
