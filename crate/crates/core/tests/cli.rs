use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spatial-refine"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_json(path: &Path, value: &Value) {
    fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, count: &str) -> PathBuf {
    let scenes = dir.join("scenes");
    let out = run(&["gen-scenes", "--out", s(&scenes), "--count", count]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    scenes
}

#[test]
fn gen_scenes_default_suite_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = run(&["gen-scenes", "--out", s(dir)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let manifest = read_json(&a.path().join("manifest.json"));
    let entries = manifest["scenes"].as_array().unwrap();
    assert_eq!(entries.len(), 50);
    assert_eq!(entries[0]["seed"], 42);
    for e in entries {
        let name = e["name"].as_str().unwrap();
        for file in ["spec.json", "gt_labels.rsgf", "triplets.json"] {
            assert_eq!(
                fs::read(a.path().join(name).join(file)).unwrap(),
                fs::read(b.path().join(name).join(file)).unwrap()
            );
        }
    }
    assert_eq!(
        fs::read(a.path().join("manifest.json")).unwrap(),
        fs::read(b.path().join("manifest.json")).unwrap()
    );
}

#[test]
fn out_of_bounds_placement_is_a_spec_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write_json(
        &cfg,
        &json!({
            "scenes": [{
                "name": "overflow",
                "height": 8,
                "width": 8,
                "placements": [{"category": "cat", "row0": 2, "col0": 2, "row1": 12, "col1": 4}]
            }]
        }),
    );
    let out = run(&["gen-scenes", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("overflow"), "{}", stderr(&out));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write_json(&cfg, &json!({"refine": {"alpha": 0.1}, "colour": "blue"}));
    let out = run(&["gen-scenes", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_ne!(code(&out), 0);
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}

#[test]
fn refine_with_unknown_category_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = gen(dir.path(), "1");
    let triplets = dir.path().join("t.json");
    write_json(
        &triplets,
        &json!({
            "categories": ["unicorn", "rainbow"],
            "triplets": [{"subject": "unicorn", "relation": "below", "object": "rainbow"}]
        }),
    );
    let out = run(&[
        "refine",
        "--scene",
        s(&scenes.join("scene_00042")),
        "--triplets",
        s(&triplets),
        "--out",
        s(&dir.path().join("r")),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("unicorn"));
}

#[test]
fn alpha_zero_is_flagged_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = gen(dir.path(), "1");
    let scene = scenes.join("scene_00042");
    for (alpha, expected) in [("0", true), ("0.1", false)] {
        let out_dir = dir.path().join(format!("r{alpha}"));
        let out = run(&[
            "refine",
            "--scene",
            s(&scene),
            "--use-gt-triplets",
            "--alpha",
            alpha,
            "--out",
            s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let report = read_json(&out_dir.join("report.json"));
        assert_eq!(report["baseline"], expected);
        assert_eq!(report["trace"]["steps"].as_array().unwrap().len(), 15);
        assert!(out_dir.join("labels.rsgf").exists());
        assert!(out_dir.join("probs").join("background.rsgf").exists());
        let constraints = report["constraints"].as_array().unwrap();
        assert_eq!(constraints.len(), report["triplets"].as_array().unwrap().len());
        assert!(constraints.iter().all(|c| c["satisfied"].is_boolean()));
    }
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = gen(dir.path(), "3");
    let pred = dir.path().join("pred");
    for name in ["scene_00042", "scene_00043", "scene_00044"] {
        fs::create_dir_all(pred.join(name)).unwrap();
        fs::copy(
            scenes.join(name).join("gt_labels.rsgf"),
            pred.join(name).join("labels.rsgf"),
        )
        .unwrap();
    }
    let out_dir = dir.path().join("eval");
    let out = run(&["eval", "--pred", s(&pred), "--scenes", s(&scenes), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&out_dir.join("eval.json"));
    for scene in report["scenes"].as_array().unwrap() {
        assert_eq!(scene["miou"], 1.0);
        assert_eq!(scene["macc"], 1.0);
        assert_eq!(scene["constraint_satisfaction"], 1.0);
    }
}

#[test]
fn eval_with_missing_prediction_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = gen(dir.path(), "2");
    let pred = dir.path().join("pred");
    fs::create_dir_all(pred.join("scene_00042")).unwrap();
    fs::copy(
        scenes.join("scene_00042").join("gt_labels.rsgf"),
        pred.join("scene_00042").join("labels.rsgf"),
    )
    .unwrap();
    let out = run(&["eval", "--pred", s(&pred), "--scenes", s(&scenes)]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("scene_00043"));
}

#[test]
fn round_trip_on_fixture_config_within_a_minute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("run_config.json");
    let scenes = dir.path().join("scenes");
    let start = Instant::now();
    let steps: Vec<Vec<String>> = vec![
        vec!["gen-scenes".into(), "--config".into(), s(&cfg).into(), "--out".into(), s(&scenes).into()],
        vec![
            "refine".into(),
            "--scenes".into(),
            s(&scenes).into(),
            "--use-gt-triplets".into(),
            "--alpha".into(),
            "0".into(),
            "--out".into(),
            s(&dir.path().join("base")).into(),
        ],
        vec![
            "refine".into(),
            "--scenes".into(),
            s(&scenes).into(),
            "--use-gt-triplets".into(),
            "--config".into(),
            s(&cfg).into(),
            "--jobs".into(),
            "2".into(),
            "--out".into(),
            s(&dir.path().join("refined")).into(),
        ],
        vec![
            "eval".into(),
            "--pred".into(),
            s(&dir.path().join("refined")).into(),
            "--baseline".into(),
            s(&dir.path().join("base")).into(),
            "--scenes".into(),
            s(&scenes).into(),
            "--group-by".into(),
            "constraint-count".into(),
            "--out".into(),
            s(&dir.path().join("eval")).into(),
        ],
    ];
    for args in &steps {
        let out = bin().args(args).output().unwrap();
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }
    assert!(start.elapsed() < Duration::from_secs(60));
    let csv = fs::read_to_string(dir.path().join("eval").join("deltas.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bucket,scenes,baseline_miou,refined_miou,delta"));
    assert!(lines.last().unwrap().starts_with("all,7,"));
    let report = read_json(&dir.path().join("eval").join("eval.json"));
    assert_eq!(report["deltas"]["grouping"], "constraint-count");
    assert!(report["deltas"]["overall"]["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn calibrate_empty_set_gives_zeroed_audit() {
    let dir = tempfile::tempdir().unwrap();
    let triplets = dir.path().join("t.json");
    write_json(&triplets, &json!({"categories": ["a", "b"], "triplets": []}));
    let out_path = dir.path().join("out.json");
    let audit_path = dir.path().join("audit.json");
    let out = run(&[
        "calibrate",
        "--triplets",
        s(&triplets),
        "--oracle",
        "permissive",
        "--out",
        s(&out_path),
        "--audit",
        s(&audit_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_json(&out_path)["triplets"], json!([]));
    let audit = &read_json(&audit_path)["audit"];
    for field in ["initial", "background_dropped", "augmented", "validated", "cyclic", "directional", "final"] {
        assert_eq!(audit[field], 0, "{field}");
    }
}

#[test]
fn calibrate_contradiction_with_neither_drops_both() {
    let dir = tempfile::tempdir().unwrap();
    let triplets = dir.path().join("t.json");
    write_json(
        &triplets,
        &json!({
            "categories": ["person", "cat"],
            "triplets": [
                {"subject": "cat", "relation": "right", "object": "person"},
                {"subject": "person", "relation": "right", "object": "cat"}
            ]
        }),
    );
    let answers = dir.path().join("a.json");
    // everything validates; no recorded choices means "neither"
    let holds: Vec<Value> = [("cat", "right", "person"), ("person", "left", "cat"), ("person", "right", "cat"), ("cat", "left", "person")]
        .iter()
        .map(|(s, r, o)| json!({"s": s, "r": r, "o": o, "a": "yes"}))
        .collect();
    write_json(&answers, &json!({"holds": holds, "choose": []}));
    let out_path = dir.path().join("out.json");
    let audit_path = dir.path().join("audit.json");
    let out = run(&[
        "calibrate",
        "--triplets",
        s(&triplets),
        "--answers",
        s(&answers),
        "--out",
        s(&out_path),
        "--audit",
        s(&audit_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_json(&out_path)["triplets"], json!([]));
    let audit = read_json(&audit_path);
    assert_eq!(audit["oracle"], "scripted");
    assert_eq!(audit["audit"]["validated"], 4);
    assert_eq!(audit["audit"]["final"], 0);
    assert_eq!(audit["audit"]["cyclic"], 2);
    assert_eq!(audit["audit"]["directional"], 2);
}

#[test]
fn calibrate_parse_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let triplets = dir.path().join("t.json");
    fs::write(
        &triplets,
        "{\n  \"categories\": [\"a\", \"b\"],\n  \"triplets\": [\n    {\"subject\": \"a\", \"relation\": \"sideways\", \"object\": \"b\"}\n  ]\n}\n",
    )
    .unwrap();
    let out = run(&["calibrate", "--triplets", s(&triplets), "--oracle", "permissive"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("t.json:4:"), "{}", stderr(&out));
}

#[test]
fn calibrate_appendix_replay_prints_audit() {
    let out = run(&[
        "calibrate",
        "--log",
        s(&fixture("appendix_log.json")),
        "--swap-args",
        "--answers",
        s(&fixture("appendix_answers.json")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in ["initial      81", "augmented    96", "validated    52", "dropped      9", "final        43"] {
        assert!(text.contains(line), "{text}");
    }
}

#[test]
fn calibrate_scene_with_geometric_oracle_is_closed() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = gen(dir.path(), "1");
    let scene = scenes.join("scene_00042");
    let out_path = dir.path().join("cal.json");
    let out = run(&["calibrate", "--scene", s(&scene), "--geometric", "--out", s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let key = |v: &Value| -> Vec<(String, String, String)> {
        let mut k: Vec<_> = v["triplets"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| {
                (
                    t["subject"].as_str().unwrap().to_string(),
                    t["relation"].as_str().unwrap().to_string(),
                    t["object"].as_str().unwrap().to_string(),
                )
            })
            .collect();
        k.sort();
        k
    };
    assert_eq!(key(&read_json(&out_path)), key(&read_json(&scene.join("triplets.json"))));
}

#[test]
fn unknown_oracle_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let triplets = dir.path().join("t.json");
    write_json(&triplets, &json!({"categories": ["a", "b"], "triplets": []}));
    let out = run(&["calibrate", "--triplets", s(&triplets), "--oracle", "crystal-ball"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("crystal-ball"));
}

#[test]
fn gradcheck_exit_codes() {
    let ok = run(&["gradcheck", "--instances", "20"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("pass")).count(), 20);

    let tiny = run(&["gradcheck", "--instances", "4", "--max-size", "1"]);
    assert_eq!(code(&tiny), 0);
    assert!(String::from_utf8(tiny.stdout).unwrap().contains("1x1"));

    let bad = run(&["gradcheck", "--instances", "3", "--corrupt"]);
    assert_eq!(code(&bad), 5);
    assert!(String::from_utf8(bad.stdout).unwrap().contains("FAIL"));
}

#[test]
fn refine_needs_a_triplet_source() {
    let out = run(&["refine", "--scene", "nowhere", "--out", "x"]);
    assert_eq!(code(&out), 2);
}
