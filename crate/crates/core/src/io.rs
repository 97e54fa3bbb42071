//! Dataset files: CSV rows `block,pos,value,role` plus a `key=value` sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{SimpleDataset, SsmDataset};
use crate::error::{CoreError, Result};

/// Row label in a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    X1,
    X2,
    Anchor,
    Missing,
    Calib,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub block: usize,
    pub pos: usize,
    pub value: f64,
    pub role: Role,
}

/// Rows for a dataset of points; `block` is the point index and `pos` the component.
pub fn rows_for_points(data: &SimpleDataset<f64>, role: Role) -> Vec<DataRow> {
    data.points()
        .enumerate()
        .flat_map(|(i, p)| {
            p.iter().enumerate().map(move |(j, &v)| DataRow {
                block: i,
                pos: j,
                value: v,
                role,
            })
        })
        .collect()
}

/// Emission rows of a state-space dataset, labelled anchor or missing.
pub fn rows_for_ssm_emissions(data: &SsmDataset<f64>) -> Vec<DataRow> {
    let d = data.d_x();
    data.x_all()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let (i, j) = (k / d, k % d);
            let role = if j == 0 || j == d - 1 {
                Role::Anchor
            } else {
                Role::Missing
            };
            DataRow {
                block: i,
                pos: j,
                value: v,
                role,
            }
        })
        .collect()
}

/// Latent anchor rows of a state-space dataset.
pub fn rows_for_ssm_anchor_theta(data: &SsmDataset<f64>) -> Vec<DataRow> {
    let d = data.d_x();
    (0..data.n_blocks())
        .flat_map(|i| {
            let t = data.block_anchor_theta(i);
            [
                DataRow {
                    block: i,
                    pos: 0,
                    value: t[0],
                    role: Role::Anchor,
                },
                DataRow {
                    block: i,
                    pos: d - 1,
                    value: t[1],
                    role: Role::Anchor,
                },
            ]
        })
        .collect()
}

pub fn write_rows(path: &Path, rows: &[DataRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<DataRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["block", "pos", "value", "role"] {
        return Err(CoreError::Parse {
            location: format!("{}:1", path.display()),
            message: "expected header block,pos,value,role".into(),
        });
    }
    let mut out = Vec::new();
    for (line, rec) in r.deserialize().enumerate() {
        let row: DataRow = rec.map_err(|e| CoreError::Parse {
            location: format!("{}:{}", path.display(), line + 2),
            message: e.to_string(),
        })?;
        out.push(row);
    }
    Ok(out)
}

/// Rebuilds a point dataset from the rows with `role`.
pub fn points_from_rows(rows: &[DataRow], role: Role) -> Result<SimpleDataset<f64>> {
    let sel: Vec<&DataRow> = rows.iter().filter(|r| r.role == role).collect();
    if sel.is_empty() {
        return Ok(SimpleDataset::empty(1));
    }
    let d = sel.iter().map(|r| r.pos).max().unwrap_or(0) + 1;
    let n = sel.iter().map(|r| r.block).max().unwrap_or(0) + 1;
    let mut v = vec![f64::NAN; n * d];
    for r in &sel {
        v[r.block * d + r.pos] = r.value;
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(CoreError::Parse {
            location: format!("role {role:?}"),
            message: "incomplete point table".into(),
        });
    }
    SimpleDataset::new(d, v)
}

/// Rebuilds a state-space dataset from emission rows and latent anchor rows.
pub fn ssm_from_rows(emissions: &[DataRow], anchors: &[DataRow]) -> Result<SsmDataset<f64>> {
    let n = emissions.iter().map(|r| r.block).max().map_or(0, |b| b + 1);
    let d = emissions.iter().map(|r| r.pos).max().map_or(0, |p| p + 1);
    let mut x = vec![f64::NAN; n * d];
    for r in emissions {
        x[r.block * d + r.pos] = r.value;
    }
    let mut t = vec![f64::NAN; 2 * n];
    for r in anchors {
        let slot = if r.pos == 0 { 0 } else { 1 };
        t[2 * r.block + slot] = r.value;
    }
    if x.iter().chain(&t).any(|v| v.is_nan()) {
        return Err(CoreError::Parse {
            location: "state-space rows".into(),
            message: "incomplete block table".into(),
        });
    }
    SsmDataset::new(n, d, x, t, None)
}

pub fn write_sidecar(path: &Path, meta: &BTreeMap<String, String>) -> Result<()> {
    let mut s = String::new();
    for (k, v) in meta {
        s.push_str(k);
        s.push('=');
        s.push_str(v);
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CoreError::Parse {
            location: format!("{}:{}", path.display(), i + 1),
            message: "expected key=value".into(),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
