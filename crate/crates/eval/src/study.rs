//! Replicate studies: simulate, split, calibrate, refit on the pooled data and
//! compare the calibrated update with Bayes, Cut and a high-precision optimum
//! on held-out test sets.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use gbcal_core::numerics::five_number_mean;
use gbcal_core::{
    derive_seed, simulate_mixture, simulate_ssm, split_dataset, split_ssm_blocks, HyperPoint,
    MixtureTruth, ModularDataset, SAxis, SplitSpec, SsmTruth,
};
use gbcal_hypercal::{
    build_grid_posterior, waic_estimator, EstimatorSet, GridPosterior, LatticeValue, PosteriorKind,
    SGrid, SPrior,
};
use gbcal_oracle::{MixtureStats, SmiKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EvalError, Result};
use crate::reference::{high_precision_optimal_s, OptimalS};
use crate::risk::{risk_ratio_pooled, risk_ratio_product, RiskRatioReport};
use crate::ssm::{anchor_pairs, AnchorPair, Phi2Posterior, SsmEta};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsmStudyConfig {
    pub truth: SsmTruth,
    pub d_x: usize,
    /// Blocks per replicate before the training/calibration split.
    pub n_blocks: usize,
    pub train_fraction: f64,
    pub n_test_sets: usize,
    pub test_blocks: usize,
    /// Blocks in the test set used for the high-precision optimum.
    pub reference_blocks: usize,
    pub eta_max: f64,
    pub grid_points: usize,
    pub kinds: Vec<PosteriorKind>,
    pub waic: bool,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for SsmStudyConfig {
    fn default() -> Self {
        Self {
            truth: SsmTruth::default(),
            d_x: 6,
            n_blocks: 60,
            train_fraction: 1.0 / 6.0,
            n_test_sets: 30,
            test_blocks: 100,
            reference_blocks: 1000,
            eta_max: 1.0,
            grid_points: 41,
            kinds: vec![PosteriorKind::Product, PosteriorKind::Pooled],
            waic: true,
            replicates: 100,
            seed: 1,
        }
    }
}

impl SsmStudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        if self.replicates == 0
            || self.n_test_sets == 0
            || self.test_blocks == 0
            || self.reference_blocks == 0
        {
            return Err(EvalError::Config(
                "replicates and test sizes must be positive".into(),
            ));
        }
        if self.grid_points < 3 || !(self.eta_max > 0.0) {
            return Err(EvalError::Config(
                "need at least 3 grid points on a positive η range".into(),
            ));
        }
        if self.kinds.is_empty() {
            return Err(EvalError::Config("no loss kinds requested".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 of the JSON form of a configuration.
pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// A risk ratio of one estimate against one reference update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedRatio {
    pub estimator: String,
    pub reference: String,
    pub report: RiskRatioReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindResult {
    pub kind: PosteriorKind,
    pub estimates: EstimatorSet,
    pub optimal: OptimalS,
    pub ratios: Vec<NamedRatio>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub config_hash: String,
    pub results: Vec<KindResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReplicateRecord {
    pub fn ratio(
        &self,
        kind: PosteriorKind,
        estimator: &str,
        reference: &str,
    ) -> Option<&RiskRatioReport> {
        self.results
            .iter()
            .find(|r| r.kind == kind)?
            .ratios
            .iter()
            .find(|r| r.estimator == estimator && r.reference == reference)
            .map(|r| &r.report)
    }

    pub fn estimate(&self, kind: PosteriorKind, estimator: &str) -> Option<f64> {
        let r = self.results.iter().find(|r| r.kind == kind)?;
        named_estimates(r)
            .into_iter()
            .find(|(n, _)| n == estimator)
            .map(|(_, v)| v)
    }
}

fn named_estimates(r: &KindResult) -> Vec<(String, f64)> {
    let e = &r.estimates;
    let mut v = vec![
        ("mode".to_string(), e.mode.eta),
        ("mean".to_string(), e.mean.eta),
    ];
    if let Some(h) = e.harmonic_mean {
        v.push(("harmonic_mean".into(), h.eta));
    }
    if let Some(w) = e.waic {
        v.push(("waic".into(), w.eta));
    }
    v.push(("optimal".into(), r.optimal.s));
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStudy<C> {
    pub config: C,
    pub config_hash: String,
    pub records: Vec<ReplicateRecord>,
}

/// One row of the box-plot summary: `(min, q25, median, q75, max, mean)` over replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: String,
    pub quantity: String,
    pub estimator: String,
    pub reference: String,
    pub n: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

impl SummaryRow {
    fn new(kind: &str, quantity: &str, estimator: &str, reference: &str, values: &[f64]) -> Self {
        let f = five_number_mean(values);
        Self {
            kind: kind.into(),
            quantity: quantity.into(),
            estimator: estimator.into(),
            reference: reference.into(),
            n: values.len(),
            min: f[0],
            q25: f[1],
            median: f[2],
            q75: f[3],
            max: f[4],
            mean: f[5],
        }
    }
}

impl<C: Serialize> ReplicateStudy<C> {
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut ratio_groups: BTreeMap<(String, String, String), Vec<f64>> = BTreeMap::new();
        let mut est_groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for rec in self.records.iter().filter(|r| r.error.is_none()) {
            for res in &rec.results {
                let kind = res.kind.name().to_string();
                for nr in &res.ratios {
                    ratio_groups
                        .entry((kind.clone(), nr.estimator.clone(), nr.reference.clone()))
                        .or_default()
                        .push(nr.report.value);
                }
                for (name, v) in named_estimates(res) {
                    est_groups.entry((kind.clone(), name)).or_default().push(v);
                }
            }
        }
        let mut rows: Vec<SummaryRow> = ratio_groups
            .iter()
            .map(|((k, e, r), v)| SummaryRow::new(k, "risk_ratio", e, r, v))
            .collect();
        rows.extend(
            est_groups
                .iter()
                .map(|((k, e), v)| SummaryRow::new(k, "estimate", e, "", v)),
        );
        rows
    }

    /// Writes `replicates.jsonl`, `summary.csv` and `config.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("replicates.jsonl"))?);
        for r in &self.records {
            serde_json::to_writer(&mut f, r)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        for row in self.summary() {
            w.serialize(row)?;
        }
        w.flush()?;
        std::fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(&self.config)?,
        )?;
        Ok(())
    }
}

/// Every replicate is seeded with `derive_seed(config.seed, replicate)`.
pub fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    derive_seed(seed, replicate as u64)
}

fn eta_grid(config_max: f64, n: usize) -> Result<SGrid> {
    Ok(SGrid::uniform_1d(SAxis::Eta, 0.0, config_max, n)?)
}

/// Replicates run concurrently; records come back ordered by replicate id, and a
/// failing replicate is recorded with its error.
pub fn ssm_replicate_study(config: &SsmStudyConfig) -> Result<ReplicateStudy<SsmStudyConfig>> {
    config.validate()?;
    let hash = config_hash(config)?;
    let records: Vec<ReplicateRecord> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(config.seed, r);
            match ssm_replicate(config, seed) {
                Ok(results) => ReplicateRecord {
                    replicate: r,
                    seed,
                    config_hash: hash.clone(),
                    results,
                    error: None,
                },
                Err(e) => {
                    log::warn!("replicate {r} failed: {e}");
                    ReplicateRecord {
                        replicate: r,
                        seed,
                        config_hash: hash.clone(),
                        results: vec![],
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(ReplicateStudy {
        config: config.clone(),
        config_hash: hash,
        records,
    })
}

fn ssm_test_pairs(
    truth: &SsmTruth,
    blocks: usize,
    d_x: usize,
    seed: u64,
) -> Result<Vec<AnchorPair>> {
    Ok(anchor_pairs(&simulate_ssm::<f64>(
        truth, blocks, d_x, seed,
    )?))
}

/// Calibration, references and risk ratios for one simulated SSM dataset.
pub fn ssm_replicate(config: &SsmStudyConfig, seed: u64) -> Result<Vec<KindResult>> {
    let data = simulate_ssm::<f64>(&config.truth, config.n_blocks, config.d_x, seed)?;
    let (train, calib, _) = split_ssm_blocks(
        &data,
        &SplitSpec::train_calib(config.train_fraction, derive_seed(seed, 1))?,
    )?;
    let train = train.ok_or_else(|| EvalError::Config("empty training split".into()))?;
    let calib =
        anchor_pairs(&calib.ok_or_else(|| EvalError::Config("empty calibration split".into()))?);
    let fit = SsmEta::new(&config.truth, train)?;
    let refit = fit.pooled_with(&calib);
    let test_sets: Vec<Vec<AnchorPair>> = (0..config.n_test_sets)
        .map(|k| {
            ssm_test_pairs(
                &config.truth,
                config.test_blocks,
                config.d_x,
                derive_seed(seed, 100 + k as u64),
            )
        })
        .collect::<Result<_>>()?;
    let reference = ssm_test_pairs(
        &config.truth,
        config.reference_blocks,
        config.d_x,
        derive_seed(seed, 2),
    )?;
    let grid = eta_grid(config.eta_max, config.grid_points)?;
    let prior = SPrior::uniform_on(&grid);

    let mut out = Vec::new();
    for &kind in &config.kinds {
        let gp = build_grid_posterior(kind, grid.clone(), &prior, |_, s| {
            fit.lattice_value(kind, s[0], &calib)
                .map_err(|e| e.to_string())
        })?;
        let mut estimates = EstimatorSet::from_posterior(&gp, HyperPoint::eta(0.0));
        if config.waic && kind == PosteriorKind::Product {
            let values = grid
                .points()
                .iter()
                .map(|s| fit.waic(s[0]))
                .collect::<Result<Vec<_>>>()?;
            let (pe, unreliable) = waic_estimator(&grid, &values)?;
            if unreliable {
                estimates
                    .warnings
                    .push("WAIC variance term exceeds its reliability limit".into());
            }
            estimates.waic = Some(HyperPoint::eta(pe.s[0]));
        }
        let optimal = high_precision_optimal_s(0.0, config.eta_max, config.grid_points, |eta| {
            Ok(-fit.log_predictive(kind, eta, &reference)?)
        })?;
        let res = KindResult {
            kind,
            estimates,
            optimal,
            ratios: vec![],
        };
        let ratios = ssm_ratios(&refit, kind, &named_estimates(&res), optimal.s, &test_sets)?;
        out.push(KindResult { ratios, ..res });
    }
    Ok(out)
}

fn ssm_ratios(
    refit: &SsmEta,
    kind: PosteriorKind,
    estimates: &[(String, f64)],
    optimal: f64,
    test_sets: &[Vec<AnchorPair>],
) -> Result<Vec<NamedRatio>> {
    let references = [
        ("bayes".to_string(), 1.0),
        ("cut".to_string(), 0.0),
        ("optimal".to_string(), optimal),
    ];
    let mut etas: Vec<f64> = estimates
        .iter()
        .chain(references.iter())
        .map(|(_, v)| *v)
        .collect();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    let posts: BTreeMap<u64, Phi2Posterior> = etas
        .iter()
        .map(|&e| Ok((e.to_bits(), refit.posterior(e)?)))
        .collect::<Result<_>>()?;
    let post = |s: &HyperPoint| {
        posts
            .get(&s.eta.to_bits())
            .ok_or_else(|| EvalError::Numeric("missing refit".into()))
    };
    let mut out = Vec::new();
    for (en, ev) in estimates {
        for (rn, rv) in &references {
            if en == rn {
                continue;
            }
            let (s1, s2) = (HyperPoint::eta(*ev), HyperPoint::eta(*rv));
            let report = match kind {
                PosteriorKind::Product => {
                    risk_ratio_product(s1, s2, test_sets, |s, z| Ok(post(s)?.log_pointwise(z)))?
                }
                PosteriorKind::Pooled => {
                    risk_ratio_pooled(s1, s2, test_sets, |s, set| refit.log_pooled(s.eta, set))?
                }
            };
            out.push(NamedRatio {
                estimator: en.clone(),
                reference: rn.clone(),
                report,
            });
        }
    }
    Ok(out)
}

/// Split-fraction sweep for the two-module normal example under η-SMI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixtureStudyConfig {
    pub truth: MixtureTruth,
    pub n1: usize,
    pub n2: usize,
    /// Training proportions of the well-specified module.
    pub split_fractions: Vec<f64>,
    pub n_test_sets: usize,
    pub test_size: usize,
    pub grid_points: usize,
    pub kinds: Vec<PosteriorKind>,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for MixtureStudyConfig {
    fn default() -> Self {
        Self {
            truth: MixtureTruth::default(),
            n1: 30,
            n2: 60,
            split_fractions: vec![0.2, 0.4, 0.6, 0.8],
            n_test_sets: 30,
            test_size: 100,
            grid_points: 41,
            kinds: vec![PosteriorKind::Product, PosteriorKind::Pooled],
            replicates: 100,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split_fraction: f64,
    pub results: Vec<KindResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureStudy {
    pub config: MixtureStudyConfig,
    pub config_hash: String,
    /// `(replicate, seed, per-split results)`, ordered by replicate.
    pub records: Vec<(usize, u64, Vec<SplitResult>)>,
}

impl MixtureStudy {
    /// Flattened view with one pseudo-replicate record per split, tagged in `config_hash`.
    pub fn records_for_split(&self, k: f64) -> Vec<ReplicateRecord> {
        self.records
            .iter()
            .filter_map(|(r, seed, splits)| {
                let s = splits.iter().find(|s| s.split_fraction == k)?;
                Some(ReplicateRecord {
                    replicate: *r,
                    seed: *seed,
                    config_hash: self.config_hash.clone(),
                    results: s.results.clone(),
                    error: None,
                })
            })
            .collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for &k in &self.config.split_fractions {
            let study = ReplicateStudy {
                config: &self.config,
                config_hash: self.config_hash.clone(),
                records: self.records_for_split(k),
            };
            study.write(&dir.join(format!("split_{k}")))?;
        }
        Ok(())
    }
}

fn mixture_lattice(
    stats: &MixtureStats,
    kind: PosteriorKind,
    eta: f64,
    y: &[f64],
) -> std::result::Result<LatticeValue, String> {
    let v = match kind {
        PosteriorKind::Product => stats.product_log_predictive(SmiKind::Eta, eta, y),
        PosteriorKind::Pooled => stats.pooled_log_predictive(SmiKind::Eta, eta, y),
    };
    v.map(LatticeValue::exact).map_err(|e| e.to_string())
}

pub fn mixture_split_study(config: &MixtureStudyConfig) -> Result<MixtureStudy> {
    config.truth.validate()?;
    if config
        .split_fractions
        .iter()
        .any(|k| !(*k > 0.0 && *k < 1.0))
    {
        return Err(EvalError::Config(
            "split fractions must lie in (0, 1)".into(),
        ));
    }
    let hash = config_hash(config)?;
    let records = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(config.seed, r);
            let splits = config
                .split_fractions
                .iter()
                .map(|&k| {
                    Ok(SplitResult {
                        split_fraction: k,
                        results: mixture_replicate(config, k, seed)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((r, seed, splits))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixtureStudy {
        config: config.clone(),
        config_hash: hash,
        records,
    })
}

fn mixture_replicate(config: &MixtureStudyConfig, k: f64, seed: u64) -> Result<Vec<KindResult>> {
    let truth = &config.truth;
    let data: ModularDataset<f64> = simulate_mixture(truth, config.n1, config.n2, seed)?;
    let (x1_train, x1_calib, _) =
        split_dataset(&data.x1, &SplitSpec::train_calib(k, derive_seed(seed, 1))?)?;
    let y: Vec<f64> = x1_calib.values().to_vec();
    let fit = MixtureStats::from_slices(x1_train.values(), data.x2.values(), truth);
    let refit = MixtureStats::from_slices(data.x1.values(), data.x2.values(), truth);
    let draw = |n: usize, tag: u64| -> Result<Vec<f64>> {
        let d: ModularDataset<f64> = simulate_mixture(truth, n, 0, derive_seed(seed, tag))?;
        Ok(d.x1.values().to_vec())
    };
    let test_sets: Vec<Vec<f64>> = (0..config.n_test_sets)
        .map(|t| draw(config.test_size, 100 + t as u64))
        .collect::<Result<_>>()?;
    let reference = draw(1000, 2)?;
    let grid = eta_grid(1.0, config.grid_points)?;
    let prior = SPrior::uniform_on(&grid);
    let mut out = Vec::new();
    for &kind in &config.kinds {
        let gp: GridPosterior = build_grid_posterior(kind, grid.clone(), &prior, |_, s| {
            mixture_lattice(&fit, kind, s[0], &y)
        })?;
        let estimates = EstimatorSet::from_posterior(&gp, HyperPoint::eta(0.0));
        let optimal = high_precision_optimal_s(0.0, 1.0, config.grid_points, |eta| {
            Ok(-mixture_lattice(&fit, kind, eta, &reference)
                .map_err(EvalError::Numeric)?
                .log_pred)
        })?;
        let res = KindResult {
            kind,
            estimates,
            optimal,
            ratios: vec![],
        };
        let references = [
            ("bayes".to_string(), 1.0),
            ("cut".to_string(), 0.0),
            ("optimal".to_string(), optimal.s),
        ];
        let mut ratios = Vec::new();
        for (en, ev) in named_estimates(&res) {
            for (rn, rv) in &references {
                if &en == rn {
                    continue;
                }
                let (s1, s2) = (HyperPoint::eta(ev), HyperPoint::eta(*rv));
                let report = match kind {
                    PosteriorKind::Product => {
                        risk_ratio_product(s1, s2, &test_sets, |s, z: &f64| {
                            Ok(refit.product_log_predictive(
                                SmiKind::Eta,
                                s.eta,
                                std::slice::from_ref(z),
                            )?)
                        })?
                    }
                    PosteriorKind::Pooled => {
                        risk_ratio_pooled(s1, s2, &test_sets, |s, set: &[f64]| {
                            Ok(refit.pooled_log_predictive(SmiKind::Eta, s.eta, set)?)
                        })?
                    }
                };
                ratios.push(NamedRatio {
                    estimator: en.clone(),
                    reference: rn.clone(),
                    report,
                });
            }
        }
        out.push(KindResult { ratios, ..res });
    }
    Ok(out)
}
