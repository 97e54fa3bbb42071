//! TOML experiment configuration. Every table rejects unknown keys and every key has a default.

use std::path::{Path, PathBuf};

use gbcal_core::{MixtureTruth, SsmTruth};
use gbcal_eval::{ChainBudget, MixtureStudyConfig, SsmStudyConfig};
use gbcal_hypercal::PosteriorKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Mixture,
    Ssm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    Nested,
}

/// Which modular posterior the calibrated hyperparameters index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Eta,
    Gamma,
    EtaBeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub model: Model,
    pub seed: u64,
    pub out: PathBuf,
    /// Directory holding simulated data; defaults to `out`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub mixture: MixtureSection,
    pub ssm: SsmSection,
    pub calibrate: CalibrateSection,
    pub risk_ratio: RiskRatioSection,
    pub study: StudySection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            model: Model::Mixture,
            seed: 1,
            out: PathBuf::from("gbcal-out"),
            data: None,
            mixture: MixtureSection::default(),
            ssm: SsmSection::default(),
            calibrate: CalibrateSection::default(),
            risk_ratio: RiskRatioSection::default(),
            study: StudySection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixtureSection {
    pub truth: MixtureTruth,
    pub n1: usize,
    pub n2: usize,
    /// Calibration draws `y_j ~ N(φ*, σ1²)`.
    pub j: usize,
}

impl Default for MixtureSection {
    fn default() -> Self {
        Self {
            truth: MixtureTruth::default(),
            n1: 30,
            n2: 60,
            j: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsmSection {
    pub truth: SsmTruth,
    pub n_blocks: usize,
    pub d_x: usize,
    /// Share of blocks kept for training; the rest calibrate.
    pub train_fraction: f64,
}

impl Default for SsmSection {
    fn default() -> Self {
        Self {
            truth: SsmTruth::default(),
            n_blocks: 60,
            d_x: 6,
            train_fraction: 1.0 / 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateSection {
    pub method: Method,
    pub kind: PosteriorKind,
    pub family: Family,
    pub grid_points: usize,
    /// Upper end of the η or γ lattice.
    pub s_max: f64,
    pub b_range: [f64; 2],
    pub b_points: usize,
    /// `uniform` for a flat prior on the lattice, otherwise a prior on the first axis
    /// such as `exp(1/3)` or `uniform(0,2)`.
    pub prior: String,
    pub chain: ChainBudget,
    pub outer_steps: usize,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        Self {
            method: Method::Grid,
            kind: PosteriorKind::Product,
            family: Family::Eta,
            grid_points: 41,
            s_max: 1.0,
            b_range: [0.25, 3.0],
            b_points: 12,
            prior: "uniform".into(),
            chain: ChainBudget::default(),
            outer_steps: 4000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskRatioSection {
    pub s1: f64,
    pub s2: f64,
    pub kind: PosteriorKind,
    pub n_test_sets: usize,
    /// Points per test set, or blocks for the state-space model.
    pub test_size: usize,
}

impl Default for RiskRatioSection {
    fn default() -> Self {
        Self {
            s1: 0.5,
            s2: 1.0,
            kind: PosteriorKind::Product,
            n_test_sets: 30,
            test_size: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    /// Misspecification levels `φ_M*` swept by the state-space study.
    pub phi_m_levels: Vec<f64>,
    pub ssm: SsmStudyConfig,
    pub mixture: MixtureStudyConfig,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            phi_m_levels: vec![0.5, 0.7, 1.0],
            ssm: SsmStudyConfig::default(),
            mixture: MixtureStudyConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Runtime(e.to_string()))
    }

    pub fn data_dir(&self) -> &Path {
        self.data.as_deref().unwrap_or(&self.out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.mixture
            .truth
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.ssm
            .truth
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.mixture.n1 == 0 || self.mixture.n2 == 0 || self.mixture.j == 0 {
            return bad("mixture sizes must be positive".into());
        }
        if self.ssm.n_blocks < 2 || self.ssm.d_x < 3 {
            return bad("the state-space model needs at least 2 blocks of length 3".into());
        }
        if !(self.ssm.train_fraction > 0.0 && self.ssm.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction {} must lie in (0, 1)",
                self.ssm.train_fraction
            ));
        }
        let c = &self.calibrate;
        if c.grid_points < 3 || c.b_points < 3 {
            return bad("lattices need at least 3 points per axis".into());
        }
        if !(c.s_max > 0.0 && c.s_max.is_finite()) {
            return bad(format!("s_max {} must be positive", c.s_max));
        }
        if !(c.b_range[0] > 0.0 && c.b_range[1] > c.b_range[0]) {
            return bad(format!(
                "b_range {:?} must be increasing and positive",
                c.b_range
            ));
        }
        if c.prior != "uniform" {
            c.prior
                .parse::<gbcal_hypercal::AxisPrior>()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        match (self.model, c.family) {
            (Model::Mixture, Family::EtaBeta) => {
                return bad("family eta_beta needs model ssm".into())
            }
            (Model::Ssm, Family::Gamma) => return bad("family gamma needs model mixture".into()),
            _ => {}
        }
        if matches!(self.model, Model::Ssm)
            && c.method == Method::Nested
            && c.family != Family::EtaBeta
        {
            return bad("nested calibration of the state-space model needs family eta_beta".into());
        }
        if self.risk_ratio.n_test_sets == 0 || self.risk_ratio.test_size == 0 {
            return bad("risk-ratio test sets must be non-empty".into());
        }
        if !(self.risk_ratio.s1 >= 0.0 && self.risk_ratio.s2 >= 0.0) {
            return bad("risk-ratio hyperparameters must be non-negative".into());
        }
        self.study
            .ssm
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.study.phi_m_levels.iter().any(|v| !(*v > 0.0)) {
            return bad("phi_m_levels must be positive".into());
        }
        Ok(())
    }
}
