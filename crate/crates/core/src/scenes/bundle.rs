//! Scene bundle directories:
//!
//! ```text
//! <scene>/spec.json
//! <scene>/gt_labels.rsgf      (or gt_labels.pgm)
//! <scene>/probs/<category>.rsgf
//! <scene>/triplets.json
//! ```

use std::fs;
use std::path::Path;

use super::{Scene, SceneSpec};
use crate::error::{Error, Result};
use crate::grid::format::{read_labels, read_probability_map, write_labels, write_probability_map};
use crate::relations::io::{read_triplets, write_json, write_triplets};

pub const SPEC_FILE: &str = "spec.json";
pub const LABELS_FILE: &str = "gt_labels.rsgf";
pub const LABELS_PGM_FILE: &str = "gt_labels.pgm";
pub const PROBS_DIR: &str = "probs";
pub const TRIPLETS_FILE: &str = "triplets.json";

pub fn write_scene(dir: &Path, scene: &Scene) -> Result<()> {
    write_json(&dir.join(SPEC_FILE), &scene.spec)?;
    write_labels(&dir.join(LABELS_FILE), &scene.gt_labels)?;
    for (name, map) in scene.roster.iter().zip(&scene.init_probs) {
        write_probability_map(&dir.join(PROBS_DIR).join(format!("{name}.rsgf")), map)?;
    }
    write_triplets(&dir.join(TRIPLETS_FILE), &scene.gt_triplets)
}

pub fn read_scene(dir: &Path) -> Result<Scene> {
    let spec_path = dir.join(SPEC_FILE);
    let text = fs::read_to_string(&spec_path).map_err(|e| Error::io(&spec_path, e))?;
    let spec: SceneSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: spec_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    spec.validate()?;
    let roster = spec.roster();

    let rsgf = dir.join(LABELS_FILE);
    let gt_labels = if rsgf.exists() {
        read_labels(&rsgf)?
    } else {
        read_labels(&dir.join(LABELS_PGM_FILE))?
    };
    gt_labels.validate(roster.len())?;

    let init_probs = roster
        .iter()
        .map(|name| read_probability_map(&dir.join(PROBS_DIR).join(format!("{name}.rsgf"))))
        .collect::<Result<Vec<_>>>()?;
    if init_probs.iter().any(|m| m.shape() != gt_labels.shape()) {
        return Err(Error::ShapeMismatch(format!(
            "probability maps in {} do not match the label map",
            dir.display()
        )));
    }
    let gt_triplets = read_triplets(&dir.join(TRIPLETS_FILE))?;
    Ok(Scene {
        spec,
        roster,
        gt_labels,
        init_probs,
        gt_triplets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenes::{generate_scene, random_scene_spec, RandomSuite};

    #[test]
    fn bundle_round_trip() {
        let spec = random_scene_spec(&RandomSuite::default(), 3).unwrap();
        let scene = generate_scene(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_scene(dir.path(), &scene).unwrap();
        let back = read_scene(dir.path()).unwrap();
        assert_eq!(back.spec, scene.spec);
        assert_eq!(back.gt_labels, scene.gt_labels);
        assert_eq!(back.gt_triplets, scene.gt_triplets);
        for (a, b) in back.init_probs.iter().zip(&scene.init_probs) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn missing_files_are_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_scene(dir.path()), Err(Error::Io { .. })));
    }
}
