//! Spatial-relation triplets and the calibration pipeline that turns a raw,
//! possibly inconsistent triplet list into a contradiction-free set:
//! bidirectional augmentation, polar validation against a [`RelationOracle`],
//! contradiction detection and oracle-driven resolution.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod io;
pub mod oracle;
pub mod registry;

pub use oracle::{Answer, Choice, GeometricOracle, PermissiveOracle, RelationOracle, ScriptedOracle};
pub use registry::{OracleFactory, OracleInputs, OracleRegistry};

pub const BACKGROUND: &str = "background";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Above,
    Below,
    Left,
    Right,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Above,
        Relation::Below,
        Relation::Left,
        Relation::Right,
    ];

    pub fn opposite(self) -> Relation {
        match self {
            Relation::Above => Relation::Below,
            Relation::Below => Relation::Above,
            Relation::Left => Relation::Right,
            Relation::Right => Relation::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Above => "above",
            Relation::Below => "below",
            Relation::Left => "left",
            Relation::Right => "right",
        }
    }

    /// Accepts the canonical names plus the `top`/`bottom` spelling used by
    /// raw answer logs.
    pub fn parse_lenient(s: &str) -> Result<Relation> {
        match s.trim().to_ascii_lowercase().as_str() {
            "top" => Ok(Relation::Above),
            "bottom" => Ok(Relation::Below),
            other => other.parse(),
        }
    }
}

pub fn opposite(relation: Relation) -> Relation {
    relation.opposite()
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Relation> {
        match s {
            "above" => Ok(Relation::Above),
            "below" => Ok(Relation::Below),
            "left" => Ok(Relation::Left),
            "right" => Ok(Relation::Right),
            _ => Err(Error::InvalidRelation(s.to_string())),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pipeline stage that last touched a triplet. Ordered earliest first.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    #[default]
    Initial,
    Bidirectional,
    Validated,
    Resolved,
}

/// `subject` is positioned at `relation` of `object`:
/// `⟨cat, right, person⟩` reads "the cat is right of the person".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialTriplet {
    pub subject: String,
    pub relation: Relation,
    pub object: String,
    #[serde(default)]
    pub stage: Stage,
}

/// Identity of a triplet, ignoring its stage.
pub type TripletKey = (String, Relation, String);

impl SpatialTriplet {
    pub fn new(subject: impl Into<String>, relation: Relation, object: impl Into<String>) -> Self {
        SpatialTriplet {
            subject: subject.into(),
            relation,
            object: object.into(),
            stage: Stage::Initial,
        }
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub fn key(&self) -> TripletKey {
        (self.subject.clone(), self.relation, self.object.clone())
    }

    /// The same fact stated from the object's side.
    pub fn reversed(&self) -> SpatialTriplet {
        SpatialTriplet {
            subject: self.object.clone(),
            relation: self.relation.opposite(),
            object: self.subject.clone(),
            stage: self.stage,
        }
    }
}

impl fmt::Display for SpatialTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {}, {}⟩", self.subject, self.relation, self.object)
    }
}

/// Ordered, duplicate-free triplets over a category roster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TripletSet {
    categories: Vec<String>,
    triplets: Vec<SpatialTriplet>,
}

impl TripletSet {
    pub fn new(categories: Vec<String>) -> Self {
        TripletSet {
            categories,
            triplets: Vec::new(),
        }
    }

    pub fn from_triplets(
        categories: Vec<String>,
        triplets: impl IntoIterator<Item = SpatialTriplet>,
    ) -> Result<Self> {
        let mut set = TripletSet::new(categories);
        for t in triplets {
            set.insert(t)?;
        }
        Ok(set)
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn triplets(&self) -> &[SpatialTriplet] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SpatialTriplet> {
        self.triplets.iter()
    }

    pub fn contains(&self, subject: &str, relation: Relation, object: &str) -> bool {
        self.position(subject, relation, object).is_some()
    }

    fn position(&self, subject: &str, relation: Relation, object: &str) -> Option<usize> {
        self.triplets
            .iter()
            .position(|t| t.relation == relation && t.subject == subject && t.object == object)
    }

    pub fn keys(&self) -> HashSet<TripletKey> {
        self.triplets.iter().map(SpatialTriplet::key).collect()
    }

    /// Inserts a triplet; a duplicate collapses into the existing entry,
    /// which keeps its position and the earlier of the two stages.
    /// Returns whether a new entry was added.
    pub fn insert(&mut self, triplet: SpatialTriplet) -> Result<bool> {
        if triplet.subject == triplet.object {
            return Err(Error::InvalidTriplet(format!(
                "{triplet}: subject and object must differ"
            )));
        }
        for name in [&triplet.subject, &triplet.object] {
            if !self.categories.iter().any(|c| c == name) {
                return Err(Error::UnknownCategory(name.clone()));
            }
        }
        match self.position(&triplet.subject, triplet.relation, &triplet.object) {
            Some(idx) => {
                let existing = &mut self.triplets[idx];
                existing.stage = existing.stage.min(triplet.stage);
                Ok(false)
            }
            None => {
                self.triplets.push(triplet);
                Ok(true)
            }
        }
    }

    /// Same roster, keeping only triplets for which `keep` returns true.
    pub fn filtered(&self, mut keep: impl FnMut(&SpatialTriplet) -> bool) -> TripletSet {
        TripletSet {
            categories: self.categories.clone(),
            triplets: self.triplets.iter().filter(|t| keep(t)).cloned().collect(),
        }
    }

    fn with_triplets(&self, triplets: Vec<SpatialTriplet>) -> TripletSet {
        TripletSet {
            categories: self.categories.clone(),
            triplets,
        }
    }
}

impl<'a> IntoIterator for &'a TripletSet {
    type Item = &'a SpatialTriplet;
    type IntoIter = std::slice::Iter<'a, SpatialTriplet>;

    fn into_iter(self) -> Self::IntoIter {
        self.triplets.iter()
    }
}

/// Adds `⟨o, opposite(r), s⟩` for every `⟨s, r, o⟩` not already present.
pub fn augment_bidirectional(set: &TripletSet) -> TripletSet {
    let mut out = set.clone();
    for t in set.iter() {
        let reversed = t.reversed().with_stage(Stage::Bidirectional);
        out.insert(reversed)
            .expect("reversal preserves roster membership");
    }
    out
}

/// Keeps a triplet only when the oracle affirms both the primary question
/// `holds(s, r, o)` and its reflection `holds(o, opposite(r), s)`.
/// `Unknown` counts as a no.
pub fn validate_polar(set: &TripletSet, oracle: &dyn RelationOracle) -> TripletSet {
    let kept = set
        .iter()
        .filter(|t| {
            oracle.holds(&t.subject, t.relation, &t.object) == Answer::Yes
                && oracle.holds(&t.object, t.relation.opposite(), &t.subject) == Answer::Yes
        })
        .map(|t| t.clone().with_stage(Stage::Validated))
        .collect();
    set.with_triplets(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContradictionKind {
    /// `⟨a, r, b⟩` and `⟨b, r, a⟩`.
    Cyclic,
    /// `⟨a, r, b⟩` and `⟨a, opposite(r), b⟩`.
    Directional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionPair {
    pub first: SpatialTriplet,
    pub second: SpatialTriplet,
    pub kind: ContradictionKind,
}

impl ContradictionPair {
    /// Both options phrased about the first triplet's `(subject, object)`
    /// ordering: `(subject, first relation, second relation, object)`.
    pub fn choice_query(&self) -> (&str, Relation, Relation, &str) {
        let second = if self.second.subject == self.first.subject {
            self.second.relation
        } else {
            self.second.relation.opposite()
        };
        (
            &self.first.subject,
            self.first.relation,
            second,
            &self.first.object,
        )
    }
}

pub fn classify_pair(a: &SpatialTriplet, b: &SpatialTriplet) -> Option<ContradictionKind> {
    if a.relation == b.relation && a.subject == b.object && a.object == b.subject {
        Some(ContradictionKind::Cyclic)
    } else if a.relation.opposite() == b.relation && a.subject == b.subject && a.object == b.object
    {
        Some(ContradictionKind::Directional)
    } else {
        None
    }
}

/// Every contradictory unordered pair, in set order (`first` precedes
/// `second`). Complementary pairs `⟨a, r, b⟩`, `⟨b, opposite(r), a⟩` are
/// consistent and never reported.
pub fn detect_contradictions(set: &TripletSet) -> Vec<ContradictionPair> {
    // Index by unordered category pair so only candidates are compared.
    let mut by_pair: HashMap<(&str, &str), Vec<usize>> = HashMap::new();
    for (idx, t) in set.iter().enumerate() {
        let key = if t.subject <= t.object {
            (t.subject.as_str(), t.object.as_str())
        } else {
            (t.object.as_str(), t.subject.as_str())
        };
        by_pair.entry(key).or_default().push(idx);
    }
    let mut found = Vec::new();
    for members in by_pair.values() {
        for (n, &i) in members.iter().enumerate() {
            for &j in &members[n + 1..] {
                let (a, b) = (&set.triplets[i], &set.triplets[j]);
                if let Some(kind) = classify_pair(a, b) {
                    found.push((i, j, kind));
                }
            }
        }
    }
    found.sort_unstable_by_key(|&(i, j, _)| (i, j));
    found
        .into_iter()
        .map(|(i, j, kind)| ContradictionPair {
            first: set.triplets[i].clone(),
            second: set.triplets[j].clone(),
            kind,
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionOutcome {
    pub kept_first: usize,
    pub kept_second: usize,
    pub discarded_both: usize,
    /// Triplets removed by resolution (each counted once).
    pub dropped: usize,
    /// Triplets removed by the post-resolution consistency re-check.
    pub recheck_dropped: usize,
}

/// Asks the oracle to pick a side for each pair. A triplet dropped by any
/// pair stays dropped; survivors of a pair are tagged [`Stage::Resolved`].
pub fn resolve_contradictions(
    set: &TripletSet,
    pairs: &[ContradictionPair],
    oracle: &dyn RelationOracle,
) -> TripletSet {
    resolve_with_outcome(set, pairs, oracle).0
}

pub fn resolve_with_outcome(
    set: &TripletSet,
    pairs: &[ContradictionPair],
    oracle: &dyn RelationOracle,
) -> (TripletSet, ResolutionOutcome) {
    let mut outcome = ResolutionOutcome::default();
    let mut dropped: HashSet<TripletKey> = HashSet::new();
    let mut touched: HashSet<TripletKey> = HashSet::new();
    for pair in pairs {
        let (subject, first, second, object) = pair.choice_query();
        touched.insert(pair.first.key());
        touched.insert(pair.second.key());
        match oracle.choose(subject, first, second, object) {
            Choice::First => {
                outcome.kept_first += 1;
                dropped.insert(pair.second.key());
            }
            Choice::Second => {
                outcome.kept_second += 1;
                dropped.insert(pair.first.key());
            }
            Choice::Neither => {
                outcome.discarded_both += 1;
                dropped.insert(pair.first.key());
                dropped.insert(pair.second.key());
            }
        }
    }
    let survivors: Vec<SpatialTriplet> = set
        .iter()
        .filter(|t| !dropped.contains(&t.key()))
        .map(|t| {
            if touched.contains(&t.key()) {
                t.clone().with_stage(Stage::Resolved)
            } else {
                t.clone()
            }
        })
        .collect();
    outcome.dropped = set.len() - survivors.len();
    let mut resolved = set.with_triplets(survivors);

    // Every detected pair loses at least one member above, so this only
    // fires when `pairs` did not come from `set`.
    let leftover = detect_contradictions(&resolved);
    if !leftover.is_empty() {
        let bad: HashSet<TripletKey> = leftover
            .iter()
            .flat_map(|p| [p.first.key(), p.second.key()])
            .collect();
        let before = resolved.len();
        resolved = resolved.filtered(|t| !bad.contains(&t.key()));
        outcome.recheck_dropped = before - resolved.len();
    }
    (resolved, outcome)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationOptions {
    /// Drop triplets naming the background category before augmentation.
    pub drop_background: bool,
    pub background: String,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            drop_background: true,
            background: BACKGROUND.to_string(),
        }
    }
}

/// Per-stage counts of one calibration run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationAudit {
    pub initial: usize,
    pub background_dropped: usize,
    pub augmented: usize,
    pub validated: usize,
    pub cyclic: usize,
    pub directional: usize,
    pub resolution: ResolutionOutcome,
    #[serde(rename = "final")]
    pub final_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub triplets: TripletSet,
    pub audit: CalibrationAudit,
    pub contradictions: Vec<ContradictionPair>,
}

/// augment → validate → detect → resolve.
pub fn calibrate(
    initial: &TripletSet,
    oracle: &dyn RelationOracle,
    opts: &CalibrationOptions,
) -> Calibration {
    let mut audit = CalibrationAudit {
        initial: initial.len(),
        ..Default::default()
    };
    let filtered = if opts.drop_background {
        initial.filtered(|t| t.subject != opts.background && t.object != opts.background)
    } else {
        initial.clone()
    };
    audit.background_dropped = initial.len() - filtered.len();

    let augmented = augment_bidirectional(&filtered);
    audit.augmented = augmented.len();

    let validated = validate_polar(&augmented, oracle);
    audit.validated = validated.len();

    let contradictions = detect_contradictions(&validated);
    for pair in &contradictions {
        match pair.kind {
            ContradictionKind::Cyclic => audit.cyclic += 1,
            ContradictionKind::Directional => audit.directional += 1,
        }
    }

    let (resolved, outcome) = resolve_with_outcome(&validated, &contradictions, oracle);
    audit.resolution = outcome;
    audit.final_count = resolved.len();
    Calibration {
        triplets: resolved,
        audit,
        contradictions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::oracle::{ScriptedOracle, AnswerTable};

    fn roster(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn t(s: &str, r: Relation, o: &str) -> SpatialTriplet {
        SpatialTriplet::new(s, r, o)
    }

    fn set(names: &[&str], ts: Vec<SpatialTriplet>) -> TripletSet {
        TripletSet::from_triplets(roster(names), ts).unwrap()
    }

    use Relation::*;

    #[test]
    fn opposites() {
        assert_eq!(Right.opposite(), Left);
        assert_eq!(Above.opposite(), Below);
        for r in Relation::ALL {
            assert_eq!(opposite(opposite(r)), r);
            assert_ne!(r.opposite(), r);
        }
    }

    #[test]
    fn relation_names() {
        assert_eq!("right".parse::<Relation>().unwrap(), Right);
        assert!("Right".parse::<Relation>().is_err());
        assert_eq!(Relation::parse_lenient("top").unwrap(), Above);
        assert_eq!(Relation::parse_lenient("Bottom").unwrap(), Below);
        assert!(Relation::parse_lenient("near").is_err());
    }

    #[test]
    fn set_rejects_bad_triplets() {
        let mut s = TripletSet::new(roster(&["cat", "person"]));
        assert!(s.insert(t("cat", Right, "cat")).is_err());
        assert!(matches!(
            s.insert(t("dog", Right, "cat")),
            Err(Error::UnknownCategory(_))
        ));
        assert!(s.insert(t("cat", Right, "person")).unwrap());
        assert!(!s.insert(t("cat", Right, "person")).unwrap());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn duplicates_keep_earliest_stage() {
        let mut s = TripletSet::new(roster(&["a", "b"]));
        s.insert(t("a", Left, "b").with_stage(Stage::Validated)).unwrap();
        s.insert(t("a", Left, "b").with_stage(Stage::Bidirectional)).unwrap();
        assert_eq!(s.triplets()[0].stage, Stage::Bidirectional);
    }

    #[test]
    fn augmentation_examples() {
        let s = set(&["cat", "person"], vec![t("cat", Right, "person")]);
        let aug = augment_bidirectional(&s);
        assert_eq!(aug.len(), 2);
        assert!(aug.contains("person", Left, "cat"));
        assert_eq!(aug.triplets()[0].stage, Stage::Initial);
        assert_eq!(aug.triplets()[1].stage, Stage::Bidirectional);

        assert!(augment_bidirectional(&TripletSet::new(vec![])).is_empty());

        let s = set(&["a", "b"], vec![t("a", Above, "b"), t("b", Below, "a")]);
        assert_eq!(augment_bidirectional(&s), s);
    }

    #[test]
    fn validation_requires_primary_and_reflection() {
        let mut table = AnswerTable::default();
        table.set_holds("building", Below, "sky", Answer::Yes);
        table.set_holds("sky", Above, "building", Answer::Yes);
        table.set_holds("a", Left, "b", Answer::Yes);
        table.set_holds("b", Right, "a", Answer::No);
        let oracle = ScriptedOracle::new(table);
        let s = set(
            &["building", "sky", "a", "b"],
            vec![t("building", Below, "sky"), t("a", Left, "b")],
        );
        let v = validate_polar(&s, &oracle);
        assert_eq!(v.len(), 1);
        assert!(v.contains("building", Below, "sky"));
        assert_eq!(v.triplets()[0].stage, Stage::Validated);
        assert!(validate_polar(&TripletSet::new(vec![]), &oracle).is_empty());
    }

    #[test]
    fn unknown_answers_fail_validation() {
        let oracle = ScriptedOracle::new(AnswerTable::default());
        let s = set(&["a", "b"], vec![t("a", Left, "b")]);
        assert!(validate_polar(&s, &oracle).is_empty());
    }

    #[test]
    fn detection_examples() {
        let cyc = detect_contradictions(&set(
            &["person", "cat"],
            vec![t("person", Right, "cat"), t("cat", Right, "person")],
        ));
        assert_eq!(cyc.len(), 1);
        assert_eq!(cyc[0].kind, ContradictionKind::Cyclic);

        let dir = detect_contradictions(&set(
            &["person", "cat"],
            vec![t("person", Right, "cat"), t("person", Left, "cat")],
        ));
        assert_eq!(dir.len(), 1);
        assert_eq!(dir[0].kind, ContradictionKind::Directional);

        let ok = detect_contradictions(&set(
            &["person", "cat"],
            vec![t("cat", Right, "person"), t("person", Left, "cat")],
        ));
        assert!(ok.is_empty());
    }

    #[test]
    fn full_contradictory_square() {
        // All four horizontal claims between a and b: two cyclic, two
        // directional, and two complementary (not reported) pairs.
        let s = set(
            &["a", "b"],
            vec![
                t("a", Right, "b"),
                t("b", Right, "a"),
                t("a", Left, "b"),
                t("b", Left, "a"),
            ],
        );
        let pairs = detect_contradictions(&s);
        let cyclic = pairs.iter().filter(|p| p.kind == ContradictionKind::Cyclic).count();
        assert_eq!(pairs.len(), 4);
        assert_eq!(cyclic, 2);
    }

    #[test]
    fn choice_query_normalizes_orientation() {
        let pair = ContradictionPair {
            first: t("a", Right, "b"),
            second: t("b", Right, "a"),
            kind: ContradictionKind::Cyclic,
        };
        assert_eq!(pair.choice_query(), ("a", Right, Left, "b"));
        let pair = ContradictionPair {
            first: t("a", Above, "b"),
            second: t("a", Below, "b"),
            kind: ContradictionKind::Directional,
        };
        assert_eq!(pair.choice_query(), ("a", Above, Below, "b"));
    }

    #[test]
    fn resolution_examples() {
        let s = set(
            &["person", "cat"],
            vec![t("person", Right, "cat"), t("cat", Right, "person")],
        );
        let pairs = detect_contradictions(&s);
        let mut table = AnswerTable::default();
        table.set_choose("person", Right, Left, "cat", Choice::First);
        let out = resolve_contradictions(&s, &pairs, &ScriptedOracle::new(table));
        assert_eq!(out.len(), 1);
        assert!(out.contains("person", Right, "cat"));
        assert_eq!(out.triplets()[0].stage, Stage::Resolved);

        let s = set(
            &["person", "cat"],
            vec![t("person", Right, "cat"), t("person", Left, "cat")],
        );
        let pairs = detect_contradictions(&s);
        let mut table = AnswerTable::default();
        table.set_choose("person", Right, Left, "cat", Choice::Neither);
        assert!(resolve_contradictions(&s, &pairs, &ScriptedOracle::new(table)).is_empty());

        let s = set(&["a", "b"], vec![t("a", Left, "b")]);
        let out = resolve_contradictions(&s, &[], &PermissiveOracle);
        assert_eq!(out, s);
    }

    #[test]
    fn dropped_stays_dropped() {
        // a-right-b loses one pair and must not come back through the other.
        let s = set(
            &["a", "b"],
            vec![t("a", Right, "b"), t("b", Right, "a"), t("a", Left, "b")],
        );
        let pairs = detect_contradictions(&s);
        assert_eq!(pairs.len(), 2);
        let mut table = AnswerTable::default();
        // both pairs phrase the question as (a, right, left, b)
        table.set_choose("a", Right, Left, "b", Choice::Second);
        let (out, outcome) = resolve_with_outcome(&s, &pairs, &ScriptedOracle::new(table));
        assert!(!out.contains("a", Right, "b"));
        assert!(out.contains("b", Right, "a"));
        assert!(out.contains("a", Left, "b"));
        assert_eq!(outcome.dropped, 1);
        assert!(detect_contradictions(&out).is_empty());
    }

    #[test]
    fn calibrate_hand_trace() {
        let s = set(&["cat", "person"], vec![t("cat", Right, "person")]);
        let cal = calibrate(&s, &PermissiveOracle, &CalibrationOptions::default());
        let expected = set(
            &["cat", "person"],
            vec![t("cat", Right, "person"), t("person", Left, "cat")],
        );
        assert_eq!(cal.triplets.keys(), expected.keys());
        assert_eq!(cal.audit.augmented, 2);
        assert_eq!(cal.audit.validated, 2);
        assert_eq!(cal.audit.final_count, 2);

        let empty = calibrate(
            &TripletSet::new(vec![]),
            &PermissiveOracle,
            &CalibrationOptions::default(),
        );
        assert!(empty.triplets.is_empty());
        assert_eq!(empty.audit, CalibrationAudit::default());
    }

    #[test]
    fn background_dropped_by_default() {
        let s = set(
            &["background", "cat", "person"],
            vec![t("cat", Right, "person"), t("cat", Above, "background")],
        );
        let cal = calibrate(&s, &PermissiveOracle, &CalibrationOptions::default());
        assert_eq!(cal.audit.background_dropped, 1);
        assert_eq!(cal.triplets.len(), 2);
        let keep = CalibrationOptions {
            drop_background: false,
            ..Default::default()
        };
        let cal = calibrate(&s, &PermissiveOracle, &keep);
        assert_eq!(cal.triplets.len(), 4);
    }
}
