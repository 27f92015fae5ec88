//! The work behind each subcommand, independent of argument parsing.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use stereobench_core::budget::{check_budget, human_macs, parse_graph, BudgetError, BudgetVerdict};
use stereobench_core::degrade::{
    synthesize_track1, synthesize_track2_ordered, DegradationConfig, DegradeError, Track2Order,
};
use stereobench_core::mech::{ensemble_params, MechError, ModelParams};
use stereobench_core::metrics::ScoreReport;
use stereobench_core::selftest::{run_each, SelftestOptions, SuiteResult};
use stereobench_core::{Image8, Rng, SceneId, Split, StereoPair, View};
use thiserror::Error;

use crate::dataset::{load_stereo_pair, lr_dir_name, scan_scenes, view_path, DatasetError};
use crate::io::{encode_png, write_bytes, IoError};
use crate::manifest::{sha256_hex, write_json, RunManifest, SceneFailure, SceneRecord, Timings, TOOLKIT, VERSION};
use crate::params::{load_params, save_params, ParamsError};
use crate::report::{summary_line, write_report, ReportFormat};
use crate::score::{score_submission, ScoreError};

/// Failures split by exit status: bad invocations exit 2, everything else 1.
#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Mech(#[from] MechError),
    #[error("{failed} of {total} scenes failed:\n  {details}")]
    ScenesFailed {
        failed: usize,
        total: usize,
        details: String,
    },
    #[error("over budget")]
    OverBudget,
    #[error("{0} selftest suite(s) failed")]
    SelftestFailed(usize),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn require_dir(path: &Path, what: &str) -> Result<(), CommandError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CommandError::Usage(format!(
            "{what} {} is not a directory",
            path.display()
        )))
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CommandError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CommandError::Usage(format!("{what} {} is not a file", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct DegradeRequest {
    pub hr_dir: PathBuf,
    /// Dataset root; outputs go to `<out>/lr_x<s>_track<t>/`.
    pub out_root: PathBuf,
    pub config: DegradationConfig,
    #[doc(hidden)]
    pub track2_order: Track2Order,
}

impl DegradeRequest {
    pub fn new(hr_dir: impl Into<PathBuf>, out_root: impl Into<PathBuf>, config: DegradationConfig) -> Self {
        Self {
            hr_dir: hr_dir.into(),
            out_root: out_root.into(),
            config,
            track2_order: Track2Order::Standard,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out_root.join(lr_dir_name(self.config.track, self.config.scale))
    }
}

#[derive(Debug, Clone)]
pub struct DegradeOutcome {
    pub manifest: RunManifest,
    pub timings: Timings,
    pub output_dir: PathBuf,
}

#[derive(Debug)]
enum SceneError {
    Dataset(DatasetError),
    Degrade(DegradeError),
    Io(IoError),
}

impl std::fmt::Display for SceneError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SceneError::Dataset(e) => e.fmt(f),
            SceneError::Degrade(e) => e.fmt(f),
            SceneError::Io(e) => e.fmt(f),
        }
    }
}

fn degrade_scene(req: &DegradeRequest, out_dir: &Path, scene: SceneId) -> Result<SceneRecord, SceneError> {
    let cfg = &req.config;
    let mut inputs = BTreeMap::new();
    for view in View::BOTH {
        let path = view_path(&req.hr_dir, scene, view);
        let bytes = fs::read(&path).map_err(|e| SceneError::Io(IoError::io(&path, e)))?;
        inputs.insert(format!("{}.png", scene.view_stem(view)), sha256_hex(&bytes));
    }
    let (l, r) = load_stereo_pair(&req.hr_dir, scene)
        .map_err(SceneError::Dataset)?
        .into_views();
    let crop = |v: &stereobench_core::Image| v.crop_to_multiple(cfg.scale).map_err(|e| SceneError::Degrade(e.into()));
    let hr = StereoPair::new(crop(&l)?, crop(&r)?).expect("equal views crop equally");
    let lr: StereoPair<Image8> = match cfg.track {
        1 => synthesize_track1(&hr, cfg.scale),
        _ => {
            let mut rng = Rng::for_scene(cfg.seed, scene.number);
            synthesize_track2_ordered(&hr, cfg, &mut rng, req.track2_order)
        }
    }
    .map_err(SceneError::Degrade)?;
    let mut outputs = BTreeMap::new();
    for view in View::BOTH {
        let bytes = encode_png(lr.view(view));
        let path = view_path(out_dir, scene, view);
        write_bytes(&path, &bytes).map_err(SceneError::Io)?;
        outputs.insert(format!("{}.png", scene.view_stem(view)), sha256_hex(&bytes));
    }
    Ok(SceneRecord {
        scene: scene.padded(),
        hr_dims: hr.dims(),
        inputs,
        outputs,
    })
}

/// Synthesizes the low-resolution set for every scene under `hr_dir`.
///
/// Scenes run in parallel on the current rayon pool; each draws noise from
/// its own stream keyed by (seed, scene id), so outputs do not depend on
/// scheduling. Failing scenes are collected, the rest still written, and
/// the manifest lists both. Any failure makes the result an error after
/// the manifest is on disk.
pub fn cmd_degrade(req: &DegradeRequest) -> Result<DegradeOutcome, CommandError> {
    require_dir(&req.hr_dir, "HR directory")?;
    req.config.validate().map_err(|e| CommandError::Usage(e.to_string()))?;
    let out_dir = req.output_dir();
    if same_dir(&out_dir, &req.hr_dir) {
        return Err(CommandError::Usage(
            "output directory must differ from the HR directory".into(),
        ));
    }
    let scenes = scan_scenes(&req.hr_dir, Split::Train)?;
    if scenes.is_empty() {
        return Err(CommandError::Usage(format!(
            "no <id>_L.png / <id>_R.png files in {}",
            req.hr_dir.display()
        )));
    }
    fs::create_dir_all(&out_dir).map_err(|e| IoError::io(&out_dir, e))?;

    let start = Instant::now();
    let results: Vec<(SceneId, Result<SceneRecord, SceneError>, f64)> = scenes
        .par_iter()
        .map(|&scene| {
            let t = Instant::now();
            let r = degrade_scene(req, &out_dir, scene);
            (scene, r, t.elapsed().as_secs_f64() * 1e3)
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Timings::default();
    for (scene, result, ms) in results {
        timings.scenes_ms.insert(scene.padded(), ms);
        match result {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(SceneFailure {
                scene: scene.padded(),
                error: e.to_string(),
            }),
        }
    }
    timings.total_ms = start.elapsed().as_secs_f64() * 1e3;
    let manifest = RunManifest {
        toolkit: TOOLKIT.into(),
        version: VERSION.into(),
        command: "degrade".into(),
        config: req.config.clone(),
        output_dir: lr_dir_name(req.config.track, req.config.scale),
        scenes: records,
        failures,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    write_json(&out_dir.join("timings.json"), &timings)?;
    if !manifest.failures.is_empty() {
        let details = manifest
            .failures
            .iter()
            .map(|f| format!("{}: {}", f.scene, f.error))
            .collect::<Vec<_>>()
            .join("\n  ");
        return Err(CommandError::ScenesFailed {
            failed: manifest.failures.len(),
            total: scenes.len(),
            details,
        });
    }
    Ok(DegradeOutcome {
        manifest,
        timings,
        output_dir: out_dir,
    })
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Scores `sr_dir` against `gt_dir`, writes the report to `out` if given,
/// and prints the summary line to `stdout`.
pub fn cmd_score(
    gt_dir: &Path,
    sr_dir: &Path,
    format: ReportFormat,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<ScoreReport, CommandError> {
    require_dir(gt_dir, "ground-truth directory")?;
    require_dir(sr_dir, "submission directory")?;
    let report = score_submission(gt_dir, sr_dir)?;
    if let Some(path) = out {
        let mut buf = Vec::new();
        write_report(&report, format, &mut buf).expect("writing to memory");
        write_bytes(path, &buf)?;
    }
    writeln!(stdout, "{}", summary_line(&report)).map_err(|e| IoError::io(Path::new("<stdout>"), e))?;
    Ok(report)
}

/// Prints the verdict and the costliest layers. Over-budget graphs are an
/// error so the exit status reflects the verdict.
pub fn cmd_budget(graph_path: &Path, stdout: &mut dyn Write) -> Result<BudgetVerdict, CommandError> {
    require_file(graph_path, "graph file")?;
    let text = fs::read_to_string(graph_path).map_err(|e| IoError::io(graph_path, e))?;
    let verdict = check_budget(&parse_graph(&text)?);
    let io = |e| IoError::io(Path::new("<stdout>"), e);
    writeln!(stdout, "{verdict}").map_err(io)?;
    for l in verdict.layers.iter().take(5) {
        writeln!(
            stdout,
            "  layer {:>3} {:<14} {:>10} params {:>12} MACs",
            l.index,
            l.layer,
            l.params,
            human_macs(l.macs)
        )
        .map_err(io)?;
    }
    if verdict.passed() {
        Ok(verdict)
    } else {
        Err(CommandError::OverBudget)
    }
}

/// Runs every suite, printing one table row per suite as it finishes.
pub fn cmd_selftest(opts: &SelftestOptions, stdout: &mut dyn Write) -> Result<Vec<SuiteResult>, CommandError> {
    let io = |e| CommandError::Io(IoError::io(Path::new("<stdout>"), e));
    writeln!(stdout, "{:<24} {:<6} {:>9}  detail", "suite", "result", "time").map_err(io)?;
    let start = Instant::now();
    let mut last = Instant::now();
    let mut failed = 0;
    let mut write_err = None;
    let results = run_each(opts, |r| {
        let ms = last.elapsed().as_secs_f64() * 1e3;
        last = Instant::now();
        failed += usize::from(!r.passed);
        let word = if r.passed { "PASS" } else { "FAIL" };
        if let Err(e) = writeln!(stdout, "{:<24} {:<6} {:>7.0}ms  {}", r.name, word, ms, r.detail) {
            write_err.get_or_insert(e);
        }
    });
    if let Some(e) = write_err {
        return Err(io(e));
    }
    writeln!(
        stdout,
        "{} of {} suites passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    )
    .map_err(io)?;
    if failed > 0 {
        return Err(CommandError::SelftestFailed(failed));
    }
    Ok(results)
}

/// Weighted average of parameter files; `weights` defaults to uniform.
pub fn cmd_ensemble(models: &[PathBuf], weights: Option<&[f64]>, out: &Path) -> Result<ModelParams, CommandError> {
    if models.is_empty() {
        return Err(CommandError::Usage("at least one model is required".into()));
    }
    for m in models {
        require_file(m, "model file")?;
    }
    let loaded = models.iter().map(|p| load_params(p)).collect::<Result<Vec<_>, _>>()?;
    let uniform = stereobench_core::mech::ensemble::uniform_weights(models.len());
    let merged = ensemble_params(&loaded, weights.unwrap_or(&uniform))?;
    save_params(&merged, out)?;
    Ok(merged)
}
