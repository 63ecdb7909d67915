//! Raw little-endian `f64` blobs with a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::RuntimeError;

/// Sidecar of a grid dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub shape: Vec<usize>,
    pub halo: usize,
    pub dtype: String,
    pub time_slots: Option<usize>,
}

impl DumpMeta {
    pub fn new(shape: &[usize], halo: usize, time_slots: Option<usize>) -> Self {
        DumpMeta {
            shape: shape.to_vec(),
            halo,
            dtype: "f64".into(),
            time_slots,
        }
    }
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn io(e: std::io::Error) -> RuntimeError {
    RuntimeError::Io(e.to_string())
}

/// Writes `<base>.bin` and `<base>.json`.
pub fn write_blob<T: Serialize>(base: &Path, data: &[f64], header: &T) -> Result<(), RuntimeError> {
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(with_ext(base, ".bin"), bytes).map_err(io)?;
    let json =
        serde_json::to_string_pretty(header).map_err(|e| RuntimeError::Dump(e.to_string()))?;
    std::fs::write(with_ext(base, ".json"), json).map_err(io)
}

pub fn read_blob<T: DeserializeOwned>(base: &Path) -> Result<(Vec<f64>, T), RuntimeError> {
    let bytes = std::fs::read(with_ext(base, ".bin")).map_err(io)?;
    if bytes.len() % 8 != 0 {
        return Err(RuntimeError::Dump(format!(
            "{} bytes is not a multiple of 8",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let text = std::fs::read_to_string(with_ext(base, ".json")).map_err(io)?;
    let header = serde_json::from_str(&text).map_err(|e| RuntimeError::Dump(e.to_string()))?;
    Ok((data, header))
}

pub fn write_dump(base: &Path, data: &[f64], meta: &DumpMeta) -> Result<(), RuntimeError> {
    if meta.shape.iter().product::<usize>() != data.len() {
        return Err(RuntimeError::Dump(format!(
            "shape {:?} does not hold {} values",
            meta.shape,
            data.len()
        )));
    }
    write_blob(base, data, meta)
}

pub fn read_dump(base: &Path) -> Result<(Vec<f64>, DumpMeta), RuntimeError> {
    let (data, meta): (Vec<f64>, DumpMeta) = read_blob(base)?;
    if meta.shape.iter().product::<usize>() != data.len() {
        return Err(RuntimeError::Dump(format!(
            "shape {:?} does not match {} values",
            meta.shape,
            data.len()
        )));
    }
    Ok((data, meta))
}
