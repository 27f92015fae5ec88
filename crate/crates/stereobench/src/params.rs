//! Binary container for named parameter arrays.
//!
//! Layout: a little-endian `u64` header length, a UTF-8 JSON header, then
//! the payload of little-endian `f32` values. The header lists each entry
//! as `{"name", "length", "offset"}`, with `length` in values and `offset`
//! in bytes from the start of the payload. Values are stored in single
//! precision, so a round trip through this format rounds to `f32`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stereobench_core::mech::ModelParams;
use thiserror::Error;

use crate::io::{write_bytes, IoError};

const FORMAT: &str = "stereobench-params";
const DTYPE: &str = "f32-le";

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("malformed parameter file: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    dtype: String,
    entries: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    length: usize,
    offset: usize,
}

pub fn encode_params(params: &ModelParams) -> Vec<u8> {
    let mut offset = 0;
    let entries = params
        .iter()
        .map(|(name, values)| {
            let e = Entry {
                name: name.to_string(),
                length: values.len(),
                offset,
            };
            offset += 4 * values.len();
            e
        })
        .collect();
    let header = serde_json::to_vec(&Header {
        format: FORMAT.into(),
        dtype: DTYPE.into(),
        entries,
    })
    .expect("plain struct");
    let mut out = Vec::with_capacity(8 + header.len() + offset);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, values) in params.iter() {
        for &v in values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_params(bytes: &[u8]) -> Result<ModelParams, ParamsError> {
    let bad = |m: &str| ParamsError::Malformed(m.to_string());
    let len_bytes: [u8; 8] = bytes
        .get(..8)
        .ok_or_else(|| bad("shorter than the length prefix"))?
        .try_into()
        .unwrap();
    let header_len = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| bad("header length overflows"))?;
    let header_end = 8usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("header runs past the end"))?;
    let header: Header =
        serde_json::from_slice(&bytes[8..header_end]).map_err(|e| ParamsError::Malformed(e.to_string()))?;
    if header.format != FORMAT || header.dtype != DTYPE {
        return Err(bad("unknown format or dtype"));
    }
    let payload = &bytes[header_end..];
    let mut params = ModelParams::new();
    for e in header.entries {
        let end = e
            .length
            .checked_mul(4)
            .and_then(|n| n.checked_add(e.offset))
            .filter(|&end| end <= payload.len() && e.offset % 4 == 0)
            .ok_or_else(|| ParamsError::Malformed(format!("entry {:?} is out of bounds", e.name)))?;
        if params.get(&e.name).is_some() {
            return Err(ParamsError::Malformed(format!("duplicate entry {:?}", e.name)));
        }
        let values = payload[e.offset..end]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        params
            .insert(e.name.clone(), values)
            .map_err(|err| ParamsError::Malformed(format!("entry {:?}: {err}", e.name)))?;
    }
    Ok(params)
}

pub fn load_params(path: &Path) -> Result<ModelParams, ParamsError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_params(&bytes)
}

pub fn save_params(params: &ModelParams, path: &Path) -> Result<(), ParamsError> {
    Ok(write_bytes(path, &encode_params(params))?)
}
