//! Scoring a submission directory against ground truth.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use stereobench_core::metrics::{evaluate, ImageScore, ScoreReport};
use stereobench_core::{SceneId, Split, View};
use thiserror::Error;

use crate::dataset::{load_view, scan_scenes, DatasetError};

/// One thing wrong with one scene of a submission.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneProblem {
    MissingScene {
        scene: String,
    },
    MissingView {
        stem: String,
    },
    DimensionMismatch {
        stem: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    Unreadable {
        stem: String,
        message: String,
    },
}

impl fmt::Display for SceneProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneProblem::MissingScene { scene } => write!(f, "scene {scene}: both views missing"),
            SceneProblem::MissingView { stem } => write!(f, "{stem}: view missing"),
            SceneProblem::DimensionMismatch { stem, expected, found } => write!(
                f,
                "{stem}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            SceneProblem::Unreadable { stem, message } => write!(f, "{stem}: {message}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("ground truth: {0}")]
    GroundTruth(DatasetError),
    #[error("no scenes in {0}")]
    NoScenes(PathBuf),
    #[error("submission has {} problem(s):\n  {}", .0.len(), list(.0))]
    Submission(Vec<SceneProblem>),
}

fn list(problems: &[SceneProblem]) -> String {
    problems
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n  ")
}

fn score_view(gt_dir: &Path, sr_dir: &Path, scene: SceneId, view: View) -> Result<ImageScore, ScoreOutcome> {
    let stem = scene.view_stem(view);
    let gt = load_view(gt_dir, scene, view).map_err(ScoreOutcome::Fatal)?;
    let sr = match load_view(sr_dir, scene, view) {
        Ok(img) => img,
        Err(DatasetError::MissingView { .. }) => return Err(ScoreOutcome::Problem(SceneProblem::MissingView { stem })),
        Err(e) => {
            return Err(ScoreOutcome::Problem(SceneProblem::Unreadable {
                stem,
                message: e.to_string(),
            }))
        }
    };
    if gt.dims() != sr.dims() {
        return Err(ScoreOutcome::Problem(SceneProblem::DimensionMismatch {
            stem,
            expected: gt.dims(),
            found: sr.dims(),
        }));
    }
    let metric = evaluate(&gt, &sr).map_err(|e| {
        ScoreOutcome::Problem(SceneProblem::Unreadable {
            stem,
            message: e.to_string(),
        })
    })?;
    Ok(ImageScore {
        scene,
        view,
        height: gt.height(),
        width: gt.width(),
        metric,
    })
}

enum ScoreOutcome {
    Fatal(DatasetError),
    Problem(SceneProblem),
}

/// Scores every scene found in `gt_dir` against the same file names in
/// `sr_dir`, in parallel on the current rayon pool. Every problem in the
/// submission is reported, ordered by scene then view.
pub fn score_submission(gt_dir: &Path, sr_dir: &Path) -> Result<ScoreReport, ScoreError> {
    let scenes = scan_scenes(gt_dir, Split::Test).map_err(ScoreError::GroundTruth)?;
    if scenes.is_empty() {
        return Err(ScoreError::NoScenes(gt_dir.to_path_buf()));
    }
    let jobs: Vec<(SceneId, View)> = scenes.iter().flat_map(|&s| View::BOTH.map(|v| (s, v))).collect();
    let mut results: Vec<_> = jobs
        .par_iter()
        .map(|&(s, v)| score_view(gt_dir, sr_dir, s, v))
        .collect();

    // an unreadable ground truth makes the whole run meaningless
    if let Some(pos) = results.iter().position(|r| matches!(r, Err(ScoreOutcome::Fatal(_)))) {
        if let Err(ScoreOutcome::Fatal(e)) = results.swap_remove(pos) {
            return Err(ScoreError::GroundTruth(e));
        }
    }
    let mut scores = Vec::with_capacity(results.len());
    let mut problems = Vec::new();
    for (pair, &scene) in results.chunks(2).zip(&scenes) {
        let missing = |r: &Result<_, _>| matches!(r, Err(ScoreOutcome::Problem(SceneProblem::MissingView { .. })));
        if missing(&pair[0]) && missing(&pair[1]) {
            problems.push(SceneProblem::MissingScene { scene: scene.padded() });
            continue;
        }
        for r in pair {
            match r {
                Ok(s) => scores.push(*s),
                Err(ScoreOutcome::Problem(p)) => problems.push(p.clone()),
                Err(ScoreOutcome::Fatal(_)) => unreachable!("handled above"),
            }
        }
    }
    if !problems.is_empty() {
        return Err(ScoreError::Submission(problems));
    }
    Ok(ScoreReport::from_scores(scores).expect("at least one scene"))
}
