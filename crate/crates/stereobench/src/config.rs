//! Degradation config resolution: command-line flags over a JSON config
//! file over built-in defaults.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use stereobench_core::degrade::{DegradationConfig, DegradeError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Invalid(#[from] DegradeError),
}

/// Values given on the command line; `None` defers to the file, then to
/// the defaults.
#[derive(Debug, Clone, Default)]
pub struct DegradeOverrides {
    pub track: Option<u8>,
    pub scale: Option<usize>,
    pub seed: Option<u64>,
    pub blur_sigma: Option<f64>,
    pub blur_kernel_size: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub jpeg_quality: Option<u32>,
}

impl DegradeOverrides {
    fn apply(&self, map: &mut Map<String, Value>) {
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        set("track", self.track.map(Value::from));
        set("scale", self.scale.map(Value::from));
        set("seed", self.seed.map(Value::from));
        set("blur_sigma", self.blur_sigma.map(Value::from));
        set("blur_kernel_size", self.blur_kernel_size.map(Value::from));
        set("noise_sigma", self.noise_sigma.map(Value::from));
        set("jpeg_quality", self.jpeg_quality.map(Value::from));
    }
}

pub fn resolve_degradation(file: Option<&Path>, flags: &DegradeOverrides) -> Result<DegradationConfig, ConfigError> {
    let Value::Object(mut map) = serde_json::to_value(DegradationConfig::default()).expect("plain struct") else {
        unreachable!("structs serialize to objects")
    };
    if let Some(path) = file {
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        let Value::Object(from_file) = value else {
            return Err(parse_err("expected a JSON object".into()));
        };
        // unknown keys are caught by the typed parse below
        map.extend(from_file);
        let cfg: Result<DegradationConfig, _> = serde_json::from_value(Value::Object(map.clone()));
        cfg.map_err(|e| parse_err(e.to_string()))?;
    }
    flags.apply(&mut map);
    let cfg: DegradationConfig = serde_json::from_value(Value::Object(map))
        .map_err(|e| ConfigError::Invalid(DegradeError::InvalidConfig(e.to_string())))?;
    cfg.validate()?;
    Ok(cfg)
}
