//! JSON forms of triplet sets, scripted-oracle answers and raw answer logs.

use std::fs;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use super::oracle::{AnswerFile, AnswerTable};
use super::{Relation, SpatialTriplet, TripletSet};
use crate::error::{Error, Result};

/// `{"categories": [...], "triplets": [{"subject", "relation", "object", "stage"}]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletFile {
    pub categories: Vec<String>,
    #[serde(default)]
    pub triplets: Vec<SpatialTriplet>,
}

impl From<&TripletSet> for TripletFile {
    fn from(set: &TripletSet) -> Self {
        TripletFile {
            categories: set.categories().to_vec(),
            triplets: set.triplets().to_vec(),
        }
    }
}

impl TryFrom<TripletFile> for TripletSet {
    type Error = Error;

    fn try_from(file: TripletFile) -> Result<Self> {
        TripletSet::from_triplets(file.categories, file.triplets)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    parse_json(path, &read_text(path)?)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    crate::grid::format::write(path, &bytes)
}

pub fn read_triplets(path: &Path) -> Result<TripletSet> {
    let file: TripletFile = parse_json(path, &read_text(path)?)?;
    file.try_into()
}

pub fn write_triplets(path: &Path, set: &TripletSet) -> Result<()> {
    write_json(path, &TripletFile::from(set))
}

pub fn read_answer_table(path: &Path) -> Result<AnswerTable> {
    let file: AnswerFile = parse_json(path, &read_text(path)?)?;
    AnswerTable::from_file(file)
}

pub fn write_answer_table(path: &Path, table: &AnswerTable) -> Result<()> {
    write_json(path, &table.to_file())
}

/// Relation name accepting `top`/`bottom` as well as the canonical spelling.
struct LenientRelation(Relation);

impl<'de> Deserialize<'de> for LenientRelation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Relation::parse_lenient(&s)
            .map(LenientRelation)
            .map_err(|_| de::Error::custom(format!("unknown relation `{s}`")))
    }
}

/// Reads a raw answer log: a JSON array of `[subject, relation, object]`
/// string triples. With `swap_args`, each entry is read as
/// `[object, relation, subject]`. Categories are taken in order of first
/// appearance, after any names in `extra_categories`. Duplicate entries
/// collapse; self-relations are rejected.
pub fn read_answer_log(
    path: &Path,
    swap_args: bool,
    extra_categories: &[String],
) -> Result<TripletSet> {
    let text = read_text(path)?;
    let rows: Vec<(String, LenientRelation, String)> = parse_json(path, &text)?;
    let mut categories: Vec<String> = extra_categories.to_vec();
    let mut triplets = Vec::with_capacity(rows.len());
    for (a, LenientRelation(relation), b) in rows {
        let (subject, object) = if swap_args { (b, a) } else { (a, b) };
        for name in [&subject, &object] {
            if !categories.contains(name) {
                categories.push(name.clone());
            }
        }
        triplets.push(SpatialTriplet::new(subject, relation, object));
    }
    TripletSet::from_triplets(categories, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::oracle::{Answer, Choice, RelationOracle, ScriptedOracle};
    use crate::relations::Stage;

    #[test]
    fn triplet_json_shape() {
        let json = r#"{"categories":["cat","person"],
            "triplets":[{"subject":"cat","relation":"right","object":"person","stage":"initial"}]}"#;
        let file: TripletFile = serde_json::from_str(json).unwrap();
        let set: TripletSet = file.try_into().unwrap();
        assert!(set.contains("cat", Relation::Right, "person"));
        let out = serde_json::to_value(TripletFile::from(&set)).unwrap();
        assert_eq!(out["triplets"][0]["relation"], "right");
        assert_eq!(out["triplets"][0]["stage"], "initial");
    }

    #[test]
    fn stage_defaults_to_initial() {
        let json = r#"{"categories":["a","b"],"triplets":[{"subject":"a","relation":"left","object":"b"}]}"#;
        let set: TripletSet = serde_json::from_str::<TripletFile>(json)
            .unwrap()
            .try_into()
            .unwrap();
        assert_eq!(set.triplets()[0].stage, Stage::Initial);
    }

    #[test]
    fn unknown_category_rejected() {
        let json = r#"{"categories":["a"],"triplets":[{"subject":"a","relation":"left","object":"b"}]}"#;
        let file: TripletFile = serde_json::from_str(json).unwrap();
        assert!(TripletSet::try_from(file).is_err());
    }

    #[test]
    fn answer_file_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        fs::write(
            &path,
            "{\n  \"holds\": [\n    {\"s\":\"a\",\"r\":\"left\",\"o\":\"b\",\"a\":\"yes\"},\n    {\"s\":\"a\",\"r\":\"left\",\"o\":\"b\",\"a\":\"maybe\"}\n  ]\n}\n",
        )
        .unwrap();
        match read_answer_table(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn answer_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        fs::write(
            &path,
            r#"{"holds":[{"s":"cat","r":"right","o":"person","a":"yes"}],
                "choose":[{"s":"sky","r1":"above","r2":"below","o":"building","a":"first"}]}"#,
        )
        .unwrap();
        let oracle = ScriptedOracle::new(read_answer_table(&path).unwrap());
        assert_eq!(oracle.holds("cat", Relation::Right, "person"), Answer::Yes);
        assert_eq!(
            oracle.choose("sky", Relation::Above, Relation::Below, "building"),
            Choice::First
        );
    }

    #[test]
    fn answer_log_swap_and_aliases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.json");
        fs::write(
            &path,
            r#"[["sky", "bottom", "building"],
                ["grass", "top", "building"],
                ["sky", "bottom", "building"]]"#,
        )
        .unwrap();
        let plain = read_answer_log(&path, false, &[]).unwrap();
        assert_eq!(plain.len(), 2);
        assert!(plain.contains("sky", Relation::Below, "building"));
        let swapped = read_answer_log(&path, true, &["background".to_string()]).unwrap();
        assert!(swapped.contains("building", Relation::Below, "sky"));
        assert!(swapped.contains("building", Relation::Above, "grass"));
        assert_eq!(swapped.categories()[0], "background");
    }

    #[test]
    fn answer_log_bad_relation_has_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.json");
        fs::write(&path, "[\n[\"a\",\"left\",\"b\"],\n[\"a\",\"near\",\"b\"]\n]").unwrap();
        match read_answer_log(&path, false, &[]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
