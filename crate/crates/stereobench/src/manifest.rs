//! Run manifests and their timing sidecars.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stereobench_core::degrade::DegradationConfig;

use crate::io::{write_bytes, IoError};

pub const TOOLKIT: &str = "stereobench";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to repeat a degrade run byte for byte: toolkit
/// version, resolved config, and checksums of every input and output.
/// Holds nothing that varies between identical runs; wall-clock times go
/// to a separate [`Timings`] file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: String,
    pub version: String,
    pub command: String,
    pub config: DegradationConfig,
    /// Output directory name relative to the output root.
    pub output_dir: String,
    pub scenes: Vec<SceneRecord>,
    pub failures: Vec<SceneFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene: String,
    /// High-resolution size after cropping to a multiple of the scale.
    pub hr_dims: (usize, usize),
    /// sha256 of each input file, by file name.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of each written file, by file name.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFailure {
    pub scene: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timings {
    pub total_ms: f64,
    pub scenes_ms: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}
