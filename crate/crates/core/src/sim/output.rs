use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SimState, StateKind};
use crate::error::{Error, Result};
use crate::spectral::{Field2D, Grid2D};

/// Time series of `(𝓗, 𝒬)` sampled at a fixed stride.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantTrace {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub q: Vec<f64>,
}

impl InvariantTrace {
    pub fn push(&mut self, t: f64, (h, q): (f64, f64)) {
        self.t.push(t);
        self.h.push(h);
        self.q.push(q);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn drift(v: &[f64]) -> f64 {
        match (v.first(), v.last()) {
            (Some(a), Some(b)) if *a != 0.0 => ((b - a) / a).abs(),
            (Some(a), Some(b)) => (b - a).abs(),
            _ => 0.0,
        }
    }

    /// `|𝓗(T) - 𝓗(0)| / |𝓗(0)|`.
    pub fn h_drift(&self) -> f64 {
        Self::drift(&self.h)
    }

    /// `|𝒬(T) - 𝒬(0)| / |𝒬(0)|`.
    pub fn q_drift(&self) -> f64 {
        Self::drift(&self.q)
    }
}

/// Writes `t,H,Q` rows.
pub fn write_traces(path: &Path, trace: &InvariantTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "H", "Q"])?;
    for i in 0..trace.len() {
        w.serialize((trace.t[i], trace.h[i], trace.q[i]))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// JSON sidecar of a binary snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub grid: Grid2D,
    pub t: f64,
    pub c: f64,
    pub kind: StateKind,
    pub steps: u64,
    /// Layout of the binary file.
    pub layout: String,
}

const LAYOUT: &str = "f64 little-endian nodal values, y-major (row q holds y_q), Ny x Nx";

fn sidecar(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes nodal values to `path` and metadata to `path.json`.
pub fn write_snapshot(path: &Path, state: &SimState) -> Result<()> {
    let values = state.field.values();
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))?;
    let meta = SnapshotMeta {
        grid: *state.field.grid(),
        t: state.t,
        c: state.c,
        kind: state.kind,
        steps: state.steps,
        layout: LAYOUT.into(),
    };
    let side = sidecar(path);
    fs::write(&side, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<SimState> {
    let side = sidecar(path);
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(&side).map_err(|e| Error::io(&side, e))?)?;
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() != meta.grid.len() * 8 {
        return Err(Error::Grid(format!(
            "snapshot {} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            meta.grid.len() * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    let mut field = Field2D::from_values(meta.grid, &values);
    field.project_kp_constraint();
    Ok(SimState {
        t: meta.t,
        field,
        kind: meta.kind,
        c: meta.c,
        steps: meta.steps,
    })
}
