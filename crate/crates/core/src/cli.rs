//! Command-line front end: scene generation, calibration, refinement,
//! evaluation and gradient checking.
//!
//! Exit codes: 0 ok, 1 I/O or parse failure, 2 invalid spec or
//! configuration, 3 unknown category or invalid constraint, 4 mismatched
//! scene sets, 5 gradient check failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{compare_runs, evaluate, write_delta_csv, DeltaReport, EvalReport, Grouping, DEFAULT_SATISFACTION_THRESHOLD};
use crate::gradcheck::{run_gradcheck, GradcheckOptions};
use crate::grid::format::{read_labels, write_labels, write_probability_map};
use crate::grid::LabelMap;
use crate::logic::{ConstraintTerm, SpatialLossConfig};
use crate::refine::{refine, RefineConfig, RefineTrace};
use crate::relations::io::{read_answer_log, read_json, read_triplets, write_json, write_triplets};
use crate::relations::{
    calibrate, CalibrationAudit, CalibrationOptions, ContradictionPair, OracleInputs, OracleRegistry,
    SpatialTriplet, TripletSet,
};
use crate::scenes::bundle::{read_scene, write_scene, TRIPLETS_FILE};
use crate::scenes::{generate_scene, RandomSuite, Scene, SceneSpec};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const PRED_LABELS_FILE: &str = "labels.rsgf";
pub const PRED_LABELS_PGM_FILE: &str = "labels.pgm";
pub const EVAL_FILE: &str = "eval.json";
pub const DELTA_CSV_FILE: &str = "deltas.csv";
pub const EXIT_GRADCHECK_FAILED: u8 = 5;

fn default_threshold() -> f64 {
    DEFAULT_SATISFACTION_THRESHOLD
}

/// Run configuration file. Every section is optional; command-line flags
/// override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenes: Vec<SceneSpec>,
    #[serde(default)]
    pub random_suite: Option<RandomSuite>,
    #[serde(default)]
    pub calibration: CalibrationOptions,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub loss: SpatialLossConfig,
    #[serde(default = "default_threshold")]
    pub satisfaction_threshold: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenes: Vec::new(),
            random_suite: None,
            calibration: CalibrationOptions::default(),
            refine: RefineConfig::default(),
            loss: SpatialLossConfig::default(),
            satisfaction_threshold: DEFAULT_SATISFACTION_THRESHOLD,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
    }

    pub fn validate(&self) -> Result<()> {
        self.refine.validate()?;
        self.loss.validate()?;
        if !(0.0..=1.0).contains(&self.satisfaction_threshold) {
            return Err(Error::InvalidConfig(format!(
                "satisfaction_threshold must lie in [0,1], got {}",
                self.satisfaction_threshold
            )));
        }
        for spec in &self.scenes {
            spec.validate()?;
        }
        Ok(())
    }

    /// Explicit scenes followed by the random suite. With neither present,
    /// the default random suite.
    pub fn scene_specs(&self) -> Result<Vec<SceneSpec>> {
        let mut specs = self.scenes.clone();
        match &self.random_suite {
            Some(suite) => specs.extend(suite.specs()?),
            None if specs.is_empty() => specs.extend(RandomSuite::default().specs()?),
            None => {}
        }
        let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!("duplicate scene name `{}`", w[0])));
        }
        Ok(specs)
    }

    fn output_dir(&self, flag: Option<&Path>) -> Result<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .ok_or_else(|| Error::InvalidConfig("no output directory (use --out or output_dir)".into()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "spatial-refine", version, about = "Spatial-relation constraints for segmentation refinement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic scene bundles and a manifest.
    GenScenes(GenScenesArgs),
    /// Augment, validate and de-contradict a triplet set against an oracle.
    Calibrate(CalibrateArgs),
    /// Refine a scene's probability maps under spatial constraints.
    Refine(RefineArgs),
    /// Score predictions against scene ground truth.
    Eval(EvalArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct GenScenesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the random suite's scene count.
    #[arg(long)]
    pub count: Option<usize>,
    /// Override the random suite's first seed.
    #[arg(long)]
    pub seed_base: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Triplet JSON file.
    #[arg(long, conflicts_with = "log")]
    pub triplets: Option<PathBuf>,
    /// Raw answer log: a JSON array of [subject, relation, object].
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Read log entries as [object, relation, subject].
    #[arg(long, requires = "log")]
    pub swap_args: bool,
    /// Scene bundle supplying labels, roster and (by default) triplets.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Oracle name (geometric, scripted, permissive).
    #[arg(long, conflicts_with = "geometric")]
    pub oracle: Option<String>,
    /// Shorthand for `--oracle geometric`.
    #[arg(long)]
    pub geometric: bool,
    /// Scripted-oracle answer file.
    #[arg(long)]
    pub answers: Option<PathBuf>,
    /// Label map for the geometric oracle; label k names the k-th category
    /// of the triplet set.
    #[arg(long, conflicts_with = "scene")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub keep_background: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Calibrated triplet JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Audit JSON.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["scene", "scenes"])))]
#[command(group(clap::ArgGroup::new("constraints").required(true).args(["triplets", "use_gt_triplets"])))]
pub struct RefineArgs {
    /// One scene bundle.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Directory of scene bundles; outputs go to `<out>/<scene>/`.
    #[arg(long, requires = "use_gt_triplets")]
    pub scenes: Option<PathBuf>,
    #[arg(long)]
    pub triplets: Option<PathBuf>,
    /// Use the bundle's own triplets.
    #[arg(long)]
    pub use_gt_triplets: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions, one `<scene>/labels.rsgf` per scene.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of scene bundles.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Baseline predictions to compare against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "category-count")]
    pub group_by: Grouping,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = GradcheckOptions::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = GradcheckOptions::default().instances)]
    pub instances: usize,
    #[arg(long, default_value_t = GradcheckOptions::default().max_size)]
    pub max_size: usize,
    #[arg(long, default_value_t = GradcheckOptions::default().max_categories)]
    pub max_categories: usize,
    #[arg(long, default_value_t = GradcheckOptions::default().tolerance)]
    pub tolerance: f64,
    /// Perturb the analytic gradient; every instance should then fail.
    #[arg(long, hide = true)]
    pub corrupt: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Runs a parsed command, writing progress to `out`. Returns the exit code
/// for outcomes that are not errors.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::GenScenes(args) => cmd_gen_scenes(&args, out).map(|_| 0),
        Command::Calibrate(args) => cmd_calibrate(&args, out).map(|_| 0),
        Command::Refine(args) => cmd_refine(&args, out).map(|_| 0),
        Command::Eval(args) => cmd_eval(&args, out).map(|_| 0),
        Command::Gradcheck(args) => cmd_gradcheck(&args, out),
    }
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// Maps `f` over `items` on `jobs` threads, keeping input order. The first
/// failure in input order wins.
fn par_map<T, U, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    let results: Vec<Result<U>> = if jobs <= 1 {
        items.iter().map(&f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| items.par_iter().map(&f).collect())
    };
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub seed: u64,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub scenes: Vec<ManifestEntry>,
}

impl Manifest {
    /// The manifest in `dir`, or one listing every subdirectory holding a
    /// scene spec (sorted by name) when there is none.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if path.exists() {
            return read_json(&path);
        }
        let mut scenes = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let sub = entry.path();
            if sub.join(crate::scenes::bundle::SPEC_FILE).exists() {
                let name = entry.file_name().to_string_lossy().into_owned();
                scenes.push(ManifestEntry {
                    name: name.clone(),
                    seed: 0,
                    path: PathBuf::from(name),
                });
            }
        }
        scenes.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(Manifest { scenes })
    }
}

pub fn cmd_gen_scenes(args: &GenScenesArgs, out: &mut dyn Write) -> Result<Manifest> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    if args.count.is_some() || args.seed_base.is_some() {
        let suite = cfg.random_suite.get_or_insert_with(RandomSuite::default);
        if let Some(count) = args.count {
            suite.count = count;
        }
        if let Some(seed) = args.seed_base {
            suite.seed_base = seed;
        }
    }
    let dir = cfg.output_dir(args.out.as_deref())?;
    let specs = cfg.scene_specs()?;
    let scenes = par_map(args.jobs, &specs, |spec| {
        let scene = generate_scene(spec)?;
        write_scene(&dir.join(&spec.name), &scene)?;
        Ok(ManifestEntry {
            name: spec.name.clone(),
            seed: spec.seed,
            path: PathBuf::from(&spec.name),
        })
    })?;
    let manifest = Manifest { scenes };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    say(
        out,
        format_args!("wrote {} scenes to {}", manifest.scenes.len(), dir.display()),
    )?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub oracle: String,
    pub audit: CalibrationAudit,
    pub contradictions: Vec<ContradictionPair>,
}

pub fn cmd_calibrate(args: &CalibrateArgs, out: &mut dyn Write) -> Result<CalibrationReport> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let mut opts = cfg.calibration.clone();
    if args.keep_background {
        opts.drop_background = false;
    }
    let scene = args.scene.as_deref().map(read_scene).transpose()?;

    let initial = match (&args.triplets, &args.log, &scene) {
        (Some(path), _, _) => read_triplets(path)?,
        (None, Some(path), _) => {
            let extra = scene.as_ref().map(|s| s.roster.clone()).unwrap_or_default();
            read_answer_log(path, args.swap_args, &extra)?
        }
        (None, None, Some(scene)) => scene.gt_triplets.clone(),
        (None, None, None) => {
            return Err(Error::InvalidConfig(
                "no triplets given (use --triplets, --log or --scene)".into(),
            ))
        }
    };

    let labels: Option<LabelMap> = match (&args.labels, &scene) {
        (Some(path), _) => Some(read_labels(path)?),
        (None, Some(scene)) => Some(scene.gt_labels.clone()),
        (None, None) => None,
    };
    let roster: Vec<String> = match &scene {
        Some(scene) => scene.roster.clone(),
        None => initial.categories().to_vec(),
    };
    let oracle_name = if args.geometric {
        "geometric".to_string()
    } else if let Some(name) = &args.oracle {
        name.clone()
    } else if args.answers.is_some() {
        "scripted".to_string()
    } else if labels.is_some() {
        "geometric".to_string()
    } else {
        return Err(Error::InvalidConfig(
            "no oracle given (use --oracle, --answers or --geometric with labels)".into(),
        ));
    };
    let registry = OracleRegistry::with_builtins();
    let oracle = registry.build(
        &oracle_name,
        &OracleInputs {
            labels: labels.as_ref(),
            roster: &roster,
            answers: args.answers.as_deref(),
        },
    )?;

    let result = calibrate(&initial, oracle.as_ref(), &opts);
    let a = &result.audit;
    say(out, format_args!("initial      {}", a.initial))?;
    say(out, format_args!("background   {} removed", a.background_dropped))?;
    say(out, format_args!("augmented    {}", a.augmented))?;
    say(out, format_args!("validated    {}", a.validated))?;
    say(
        out,
        format_args!("contradicted {} cyclic, {} directional", a.cyclic, a.directional),
    )?;
    say(out, format_args!("dropped      {}", a.resolution.dropped))?;
    say(out, format_args!("final        {}", a.final_count))?;

    if let Some(path) = &args.out {
        write_triplets(path, &result.triplets)?;
    }
    let report = CalibrationReport {
        oracle: oracle_name,
        audit: result.audit,
        contradictions: result.contradictions,
    };
    if let Some(path) = &args.audit {
        write_json(path, &report)?;
    }
    Ok(report)
}

/// Constraint diagnostics at the final state plus the discrete check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    #[serde(flatten)]
    pub term: ConstraintTerm,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub scene: String,
    /// Set when alpha is 0 (unconstrained run).
    pub baseline: bool,
    pub refine: RefineConfig,
    pub loss: SpatialLossConfig,
    pub satisfaction_threshold: f64,
    pub triplets: Vec<SpatialTriplet>,
    pub trace: RefineTrace,
    pub constraints: Vec<ConstraintReport>,
    pub metrics: EvalReport,
}

/// Checks that every category a triplet set names is in the scene roster.
fn check_categories(set: &TripletSet, roster: &[String]) -> Result<()> {
    for t in set.iter() {
        for name in [&t.subject, &t.object] {
            if !roster.contains(name) {
                return Err(Error::UnknownCategory(name.clone()));
            }
        }
    }
    Ok(())
}

/// Refines one scene and writes `probs/`, `labels.rsgf` and `report.json`
/// into `dir`.
pub fn refine_scene(
    scene: &Scene,
    triplets: &TripletSet,
    cfg: &RunConfig,
    dir: &Path,
) -> Result<RefineReport> {
    check_categories(triplets, &scene.roster)?;
    let refined = refine(
        scene.roster.clone(),
        &scene.init_probs,
        triplets,
        &cfg.refine,
        &cfg.loss,
    )?;
    let pred = refined.state.argmax_labels();
    for (name, map) in scene.roster.iter().zip(refined.state.all_probs()) {
        write_probability_map(&dir.join("probs").join(format!("{name}.rsgf")), map)?;
    }
    write_labels(&dir.join(PRED_LABELS_FILE), &pred)?;

    let constraints = refined
        .final_terms
        .into_iter()
        .map(|term| ConstraintReport {
            satisfied: crate::eval::triplet_satisfied(
                &pred,
                &scene.roster,
                &term.triplet,
                cfg.satisfaction_threshold,
            ),
            term,
        })
        .collect();
    let report = RefineReport {
        scene: scene.spec.name.clone(),
        baseline: cfg.refine.is_baseline(),
        refine: cfg.refine,
        loss: cfg.loss,
        satisfaction_threshold: cfg.satisfaction_threshold,
        triplets: triplets.triplets().to_vec(),
        trace: refined.trace,
        constraints,
        metrics: evaluate(
            &scene.spec.name,
            &pred,
            &scene.gt_labels,
            &scene.roster,
            triplets,
            cfg.satisfaction_threshold,
        )?,
    };
    write_json(&dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

pub fn cmd_refine(args: &RefineArgs, out: &mut dyn Write) -> Result<Vec<RefineReport>> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    if let Some(alpha) = args.alpha {
        cfg.refine.alpha = alpha;
    }
    if let Some(steps) = args.steps {
        cfg.refine.steps = steps;
    }
    if let Some(lr) = args.lr {
        cfg.refine.learning_rate = lr;
    }
    cfg.validate()?;
    let dir = cfg.output_dir(args.out.as_deref())?;

    let reports = if let Some(bundle) = &args.scene {
        let scene = read_scene(bundle)?;
        let triplets = match &args.triplets {
            Some(path) => read_triplets(path)?,
            None => scene.gt_triplets.clone(),
        };
        vec![refine_scene(&scene, &triplets, &cfg, &dir)?]
    } else {
        let root = args.scenes.as_deref().expect("clap enforces --scene or --scenes");
        let manifest = Manifest::load(root)?;
        par_map(args.jobs, &manifest.scenes, |entry| {
            let scene = read_scene(&root.join(&entry.path))?;
            let triplets = read_triplets(&root.join(&entry.path).join(TRIPLETS_FILE))?;
            refine_scene(&scene, &triplets, &cfg, &dir.join(&entry.name))
        })?
    };
    for r in &reports {
        say(
            out,
            format_args!(
                "{}: total {:.6} -> {:.6}, mIoU {:.4}, satisfaction {:.4}",
                r.scene,
                r.trace.initial_total(),
                r.trace.final_record.total,
                r.metrics.miou,
                r.metrics.constraint_satisfaction
            ),
        )?;
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenes: usize,
    pub miou: f64,
    pub macc: f64,
    pub constraint_satisfaction: f64,
}

impl RunSummary {
    pub fn of(reports: &[EvalReport]) -> Self {
        let n = reports.len().max(1) as f64;
        RunSummary {
            scenes: reports.len(),
            miou: reports.iter().map(|r| r.miou).sum::<f64>() / n,
            macc: reports.iter().map(|r| r.macc).sum::<f64>() / n,
            constraint_satisfaction: reports.iter().map(|r| r.constraint_satisfaction).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub summary: RunSummary,
    pub scenes: Vec<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<EvalRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<DeltaReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub summary: RunSummary,
    pub scenes: Vec<EvalReport>,
}

fn read_prediction(pred_dir: &Path, scene: &str) -> Result<LabelMap> {
    let dir = pred_dir.join(scene);
    let rsgf = dir.join(PRED_LABELS_FILE);
    let pgm = dir.join(PRED_LABELS_PGM_FILE);
    if rsgf.exists() {
        read_labels(&rsgf)
    } else if pgm.exists() {
        read_labels(&pgm)
    } else {
        Err(Error::SetMismatch(format!(
            "no prediction for scene `{scene}` in {}",
            pred_dir.display()
        )))
    }
}

fn eval_dir(
    pred_dir: &Path,
    scenes_dir: &Path,
    manifest: &Manifest,
    threshold: f64,
    jobs: usize,
) -> Result<Vec<EvalReport>> {
    par_map(jobs, &manifest.scenes, |entry| {
        let scene = read_scene(&scenes_dir.join(&entry.path))?;
        let pred = read_prediction(pred_dir, &entry.name)?;
        pred.validate(scene.roster.len())?;
        evaluate(
            &entry.name,
            &pred,
            &scene.gt_labels,
            &scene.roster,
            &scene.gt_triplets,
            threshold,
        )
    })
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<EvalOutput> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let threshold = args.threshold.unwrap_or(cfg.satisfaction_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!("threshold must lie in [0,1], got {threshold}")));
    }
    let manifest = Manifest::load(&args.scenes)?;
    let scenes = eval_dir(&args.pred, &args.scenes, &manifest, threshold, args.jobs)?;
    let summary = RunSummary::of(&scenes);
    say(
        out,
        format_args!(
            "{} scenes: mIoU {:.4}, mAcc {:.4}, satisfaction {:.4}",
            summary.scenes, summary.miou, summary.macc, summary.constraint_satisfaction
        ),
    )?;

    let mut output = EvalOutput {
        summary,
        scenes,
        baseline: None,
        deltas: None,
    };
    if let Some(base_dir) = &args.baseline {
        let base = eval_dir(base_dir, &args.scenes, &manifest, threshold, args.jobs)?;
        let deltas = compare_runs(&base, &output.scenes, args.group_by)?;
        for b in deltas.buckets.iter().chain(std::iter::once(&deltas.overall)) {
            say(
                out,
                format_args!(
                    "bucket {:>10} ({:>3} scenes): {:.4} -> {:.4} ({:+.4})",
                    b.bucket, b.scenes, b.baseline_miou, b.refined_miou, b.delta
                ),
            )?;
        }
        output.baseline = Some(EvalRun {
            summary: RunSummary::of(&base),
            scenes: base,
        });
        output.deltas = Some(deltas);
    }

    if let Some(dir) = args.out.as_deref().or(cfg.output_dir.as_deref()) {
        write_json(&dir.join(EVAL_FILE), &output)?;
        if let Some(deltas) = &output.deltas {
            let mut bytes = Vec::new();
            write_delta_csv(&mut bytes, deltas)?;
            crate::grid::format::write(&dir.join(DELTA_CSV_FILE), &bytes)?;
        }
    }
    Ok(output)
}

pub fn cmd_gradcheck(args: &GradcheckArgs, out: &mut dyn Write) -> Result<u8> {
    let opts = GradcheckOptions {
        seed: args.seed,
        instances: args.instances,
        max_size: args.max_size,
        max_categories: args.max_categories,
        tolerance: args.tolerance,
        corrupt: args.corrupt,
        ..GradcheckOptions::default()
    };
    if opts.max_size == 0 || opts.max_categories < 2 {
        return Err(Error::InvalidConfig(
            "gradcheck needs --max-size >= 1 and --max-categories >= 2".into(),
        ));
    }
    let report = run_gradcheck(&opts)?;
    say(out, format_args!("instance  size   cats  cons  max_rel_error  result"))?;
    for r in &report.rows {
        say(
            out,
            format_args!(
                "{:>8}  {:>5}  {:>4}  {:>4}  {:>13.3e}  {}",
                r.instance,
                format!("{}x{}", r.height, r.width),
                r.categories,
                r.constraints,
                r.max_rel_error,
                if r.passed { "pass" } else { "FAIL" }
            ),
        )?;
    }
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(if report.all_passed() { 0 } else { EXIT_GRADCHECK_FAILED })
}
