//! Simulated dataset files and their loaders.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gbcal_core::io::{
    points_from_rows, read_rows, read_sidecar, rows_for_points, rows_for_ssm_anchor_theta,
    rows_for_ssm_emissions, ssm_from_rows, write_rows, write_sidecar, Role,
};
use gbcal_core::{
    derive_seed, simulate_mixture, simulate_ssm, split_ssm_blocks, SimpleDataset, SplitSpec,
    SsmDataset,
};

use crate::config::{Config, Model};
use crate::error::{CliError, Result};

pub const MIXTURE_FILE: &str = "data.csv";
pub const META_FILE: &str = "meta.txt";

fn ssm_files(dir: &Path, part: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{part}_emissions.csv")),
        dir.join(format!("{part}_anchors.csv")),
    )
}

/// Draws the configured dataset and writes it to `cfg.out`; returns the sidecar entries.
pub fn simulate(cfg: &Config) -> Result<BTreeMap<String, String>> {
    let dir = &cfg.out;
    let mut meta = BTreeMap::new();
    meta.insert("seed".to_string(), cfg.seed.to_string());
    match cfg.model {
        Model::Mixture => {
            let m = &cfg.mixture;
            let d = simulate_mixture::<f64>(&m.truth, m.n1, m.n2, cfg.seed)?;
            // Calibration draws share the distribution of the first module.
            let y = simulate_mixture::<f64>(&m.truth, m.j, 0, derive_seed(cfg.seed, 1))?.x1;
            let mut rows = rows_for_points(&d.x1, Role::X1);
            rows.extend(rows_for_points(&d.x2, Role::X2));
            rows.extend(rows_for_points(&y, Role::Calib));
            write_rows(&dir.join(MIXTURE_FILE), &rows)?;
            meta.insert("model".into(), "mixture".into());
            meta.insert("n1".into(), m.n1.to_string());
            meta.insert("n2".into(), m.n2.to_string());
            meta.insert("j".into(), m.j.to_string());
        }
        Model::Ssm => {
            let s = &cfg.ssm;
            let d = simulate_ssm::<f64>(&s.truth, s.n_blocks, s.d_x, cfg.seed)?;
            let spec = SplitSpec::train_calib(s.train_fraction, derive_seed(cfg.seed, 1))?;
            let (train, calib, _) = split_ssm_blocks(&d, &spec)?;
            let train = train.ok_or_else(|| {
                CliError::Config("train_fraction leaves no training blocks".into())
            })?;
            let calib = calib.ok_or_else(|| {
                CliError::Config("train_fraction leaves no calibration blocks".into())
            })?;
            for (part, data) in [("train", &train), ("calib", &calib)] {
                let (e, a) = ssm_files(dir, part);
                write_rows(&e, &rows_for_ssm_emissions(data))?;
                write_rows(&a, &rows_for_ssm_anchor_theta(data))?;
            }
            meta.insert("model".into(), "ssm".into());
            meta.insert("d_x".into(), s.d_x.to_string());
            meta.insert("n_train".into(), train.n_blocks().to_string());
            meta.insert("n_calib".into(), calib.n_blocks().to_string());
        }
    }
    write_sidecar(&dir.join(META_FILE), &meta)?;
    Ok(meta)
}

fn check_model(dir: &Path, model: &str) -> Result<()> {
    let path = dir.join(META_FILE);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "no dataset in {}; run `gbcal simulate` first",
            dir.display()
        )));
    }
    let meta = read_sidecar(&path)?;
    match meta.get("model").map(String::as_str) {
        Some(m) if m == model => Ok(()),
        other => Err(CliError::Config(format!(
            "{} holds a {:?} dataset, expected {model}",
            dir.display(),
            other.unwrap_or("unknown")
        ))),
    }
}

pub struct MixtureData {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn load_mixture(dir: &Path) -> Result<MixtureData> {
    check_model(dir, "mixture")?;
    let rows = read_rows(&dir.join(MIXTURE_FILE))?;
    let get = |role| points_from_rows(&rows, role).map(|d: SimpleDataset<f64>| d.values().to_vec());
    Ok(MixtureData {
        x1: get(Role::X1)?,
        x2: get(Role::X2)?,
        y: get(Role::Calib)?,
    })
}

pub fn load_ssm(dir: &Path) -> Result<(SsmDataset<f64>, SsmDataset<f64>)> {
    check_model(dir, "ssm")?;
    let load = |part: &str| -> Result<SsmDataset<f64>> {
        let (e, a) = ssm_files(dir, part);
        Ok(ssm_from_rows(&read_rows(&e)?, &read_rows(&a)?)?)
    };
    Ok((load("train")?, load("calib")?))
}
