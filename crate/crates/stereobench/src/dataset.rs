//! On-disk dataset layout: `<root>/{hr,lr_x4_track1,lr_x4_track2}/<id>_{L,R}.png`.

use std::fs;
use std::path::{Path, PathBuf};

use stereobench_core::{Image8, SceneId, Split, StereoPair, View};
use thiserror::Error;

use crate::io::{load_image, IoError};

pub const HR_DIR: &str = "hr";

/// Directory name of a low-resolution set, e.g. `lr_x4_track1`.
pub fn lr_dir_name(track: u8, scale: usize) -> String {
    format!("lr_x{scale}_track{track}")
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{stem}.png missing from {dir}")]
    MissingView { stem: String, dir: PathBuf },
    #[error("scene {scene}: left is {left:?} but right is {right:?}")]
    DimensionMismatch {
        scene: String,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("cannot list {dir}: {source}")]
    Scan { dir: PathBuf, source: std::io::Error },
}

pub fn view_path(dir: &Path, scene: SceneId, view: View) -> PathBuf {
    dir.join(format!("{}.png", scene.view_stem(view)))
}

/// Parses `0042_L.png` into its scene number and view.
pub fn parse_view_file(name: &str, split: Split) -> Option<(SceneId, View)> {
    let stem = name.strip_suffix(".png")?;
    let (id, view) = stem.rsplit_once('_')?;
    let view = match view {
        "L" => View::Left,
        "R" => View::Right,
        _ => return None,
    };
    Some((SceneId::parse(id, split).ok()?, view))
}

/// Scene ids with at least one view file in `dir`, ascending. Other files
/// are ignored.
pub fn scan_scenes(dir: &Path, split: Split) -> Result<Vec<SceneId>, DatasetError> {
    let scan = |source| DatasetError::Scan {
        dir: dir.to_path_buf(),
        source,
    };
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(scan)? {
        let name = entry.map_err(scan)?.file_name();
        if let Some((id, _)) = name.to_str().and_then(|n| parse_view_file(n, split)) {
            ids.push(id);
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

/// Loads one view, reporting an absent file as a missing view.
pub fn load_view(dir: &Path, scene: SceneId, view: View) -> Result<Image8, DatasetError> {
    match load_image(&view_path(dir, scene, view)) {
        Err(IoError::FileNotFound(_)) => Err(DatasetError::MissingView {
            stem: scene.view_stem(view),
            dir: dir.to_path_buf(),
        }),
        other => Ok(other?),
    }
}

pub fn load_stereo_pair8(dir: &Path, scene: SceneId) -> Result<StereoPair<Image8>, DatasetError> {
    let left = load_view(dir, scene, View::Left)?;
    let right = load_view(dir, scene, View::Right)?;
    let (l, r) = (left.dims(), right.dims());
    StereoPair::new(left, right).map_err(|_| DatasetError::DimensionMismatch {
        scene: scene.padded(),
        left: l,
        right: r,
    })
}

/// Both views of `scene` in float form.
pub fn load_stereo_pair(dir: &Path, scene: SceneId) -> Result<StereoPair, DatasetError> {
    Ok(load_stereo_pair8(dir, scene)?.to_float())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::save_image;
    use stereobench_core::synth::natural_image;

    fn write(dir: &Path, name: &str, h: usize, w: usize) {
        save_image(&natural_image(h, w, 1), &dir.join(name)).unwrap();
    }

    #[test]
    fn loads_matching_pair() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "0001_L.png", 90, 160);
        write(dir.path(), "0001_R.png", 90, 160);
        let id = SceneId::new(1, Split::Test);
        assert_eq!(load_stereo_pair(dir.path(), id).unwrap().dims(), (90, 160));
    }

    #[test]
    fn missing_right_view() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "0001_L.png", 9, 16);
        let err = load_stereo_pair(dir.path(), SceneId::new(1, Split::Test)).unwrap_err();
        assert!(
            matches!(&err, DatasetError::MissingView { stem, .. } if stem == "0001_R"),
            "{err}"
        );
    }

    #[test]
    fn mismatched_views() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "0001_L.png", 90, 160);
        write(dir.path(), "0001_R.png", 92, 160);
        let err = load_stereo_pair(dir.path(), SceneId::new(1, Split::Test)).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::DimensionMismatch {
                left: (90, 160),
                right: (92, 160),
                ..
            }
        ));
    }

    #[test]
    fn scan_ignores_strays() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "0002_L.png",
            "0002_R.png",
            "0001_R.png",
            "12_L.png",
            "0003_X.png",
            "notes.txt",
            "0004_L.jpg",
        ] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        let ids: Vec<_> = scan_scenes(dir.path(), Split::Val)
            .unwrap()
            .iter()
            .map(|s| s.number)
            .collect();
        assert_eq!(ids, [1, 2]);
    }

    #[test]
    fn layout_names() {
        assert_eq!(lr_dir_name(1, 4), "lr_x4_track1");
        assert_eq!(lr_dir_name(2, 4), "lr_x4_track2");
    }
}
