//! Binary matrix files: little-endian header of two u64 values (column
//! count, row count) followed by row-major 64-bit floats, with a JSON
//! metadata sidecar written next to the data file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plasticity::WeightTrajectory;
use crate::scalar::Real;

pub fn write_matrix_f64(path: &Path, cols: u64, rows: u64, data: &[f64]) -> Result<()> {
    if data.len() as u64 != cols * rows {
        return Err(Error::Malformed {
            what: "matrix",
            detail: format!("{} values for {rows}x{cols}", data.len()),
        });
    }
    let mut bytes = Vec::with_capacity(16 + data.len() * 8);
    bytes.extend_from_slice(&cols.to_le_bytes());
    bytes.extend_from_slice(&rows.to_le_bytes());
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_matrix_f64(path: &Path) -> Result<(u64, u64, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if bytes.len() < 16 {
        return Err(Error::Malformed { what: "matrix", detail: "missing header".into() });
    }
    let cols = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected = 16 + (cols * rows * 8) as usize;
    if bytes.len() != expected {
        return Err(Error::Malformed {
            what: "matrix",
            detail: format!("{} bytes, expected {expected}", bytes.len()),
        });
    }
    let data = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((cols, rows, data))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.push_str(".meta.json");
    path.with_file_name(name)
}

pub fn write_sidecar<M: Serialize>(path: &Path, meta: &M) -> Result<()> {
    let sp = sidecar_path(path);
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Malformed { what: "sidecar json", detail: e.to_string() })?;
    fs::write(&sp, json).map_err(|e| Error::io(sp.display().to_string(), e))
}

pub fn read_sidecar<M: DeserializeOwned>(path: &Path) -> Result<M> {
    let sp = sidecar_path(path);
    let text = fs::read_to_string(&sp).map_err(|e| Error::io(sp.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed { what: "sidecar json", detail: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub stimulus_id: String,
    pub label: Option<u8>,
    pub sample_times_ms: Vec<f64>,
    pub edge_count: u64,
    pub sample_count: u64,
}

/// Header is (edge count, sample count); rows are snapshots.
pub fn write_weight_trajectory<T: Real>(path: &Path, traj: &WeightTrajectory<T>, label: Option<u8>) -> Result<()> {
    let cols = traj.dim() as u64;
    let rows = traj.vectors.len() as u64;
    let data: Vec<f64> = traj.vectors.iter().flatten().map(|v| v.to_f64_c()).collect();
    write_matrix_f64(path, cols, rows, &data)?;
    write_sidecar(
        path,
        &TrajectoryMeta {
            stimulus_id: traj.stimulus_id.clone(),
            label,
            sample_times_ms: traj.sample_times_ms(),
            edge_count: cols,
            sample_count: rows,
        },
    )
}

pub fn read_weight_trajectory<T: Real>(path: &Path) -> Result<(WeightTrajectory<T>, TrajectoryMeta)> {
    let (cols, rows, data) = read_matrix_f64(path)?;
    let meta: TrajectoryMeta = read_sidecar(path)?;
    if meta.edge_count != cols || meta.sample_count != rows {
        return Err(Error::Malformed { what: "trajectory sidecar", detail: "shape disagrees with matrix".into() });
    }
    let vectors = data
        .chunks_exact(cols as usize)
        .map(|row| row.iter().map(|&v| T::from_f64_c(v)).collect())
        .collect();
    let sample_ticks = meta
        .sample_times_ms
        .iter()
        .map(|&ms| crate::time::ms_to_ticks("sample time", ms))
        .collect::<Result<Vec<u64>>>()?;
    Ok((WeightTrajectory { stimulus_id: meta.stimulus_id.clone(), sample_ticks, vectors }, meta))
}
