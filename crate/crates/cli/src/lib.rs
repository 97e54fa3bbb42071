//! The `gbcal` command line: simulate data, calibrate learning rates, run replicate
//! studies, check the closed-form oracles and compute risk ratios.

pub mod calibrate;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Suite;
pub use config::{Config, Method, Model};
pub use error::{CliError, Result};

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Parser)]
#[command(
    name = "gbcal",
    version,
    about = "Learning-rate calibration for generalised and modular Bayesian updates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel loops.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<Model>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// Smaller budgets.
    #[arg(long, global = true)]
    pub fast: bool,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset into the output directory.
    Simulate,
    /// Posterior over the hyperparameters and its point estimators.
    Calibrate,
    /// Replicate risk-ratio study.
    Study,
    /// Compare closed forms, quadrature and Monte Carlo against each other.
    OracleCheck {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Expected risk ratio between two hyperparameter values.
    RiskRatio,
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A reported quantity is outside its tolerance.
    ToleranceFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ToleranceFailure => 1,
        }
    }
}

/// The configuration after applying command-line overrides.
pub fn resolve(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.study.ssm.seed = s;
        cfg.study.mixture.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(m) = cli.model {
        cfg.model = m;
    }
    if let Some(m) = cli.method {
        cfg.calibrate.method = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve(cli)?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
        {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    if cli.dry_run {
        print!("{}", cfg.to_toml()?);
        return Ok(Outcome::Success);
    }
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join(RESOLVED_CONFIG), cfg.to_toml()?)?;
    match &cli.command {
        Command::Simulate => {
            let meta = data::simulate(&cfg)?;
            for (k, v) in &meta {
                println!("{k}={v}");
            }
            Ok(Outcome::Success)
        }
        Command::Calibrate => {
            let cal = calibrate::calibrate(&cfg)?;
            calibrate::write_calibration(&cal, &cfg.out)?;
            println!("{}", cal.estimators.to_json()?);
            for w in &cal.estimators.warnings {
                log::warn!("{w}");
            }
            match &cal.nested {
                Some((_, r)) => {
                    println!(
                        "nested KS {:?} (< {}), acceptance {:.2}: {}",
                        r.ks,
                        calibrate::KS_TOLERANCE,
                        r.accept_rate,
                        if r.passed { "PASS" } else { "FAIL" }
                    );
                    Ok(if r.passed {
                        Outcome::Success
                    } else {
                        Outcome::ToleranceFailure
                    })
                }
                None => Ok(Outcome::Success),
            }
        }
        Command::Study => {
            for d in commands::study(&cfg, cli.fast, &cfg.out)? {
                println!("wrote {d}");
            }
            Ok(Outcome::Success)
        }
        Command::OracleCheck { suite } => {
            let reports = commands::oracle_check(*suite, cli.fast)?;
            for r in &reports {
                println!("{}", r.line());
            }
            let path = cfg.out.join(format!("oracle_{}.json", suite.name()));
            std::fs::write(path, serde_json::to_string_pretty(&reports)?)?;
            Ok(if reports.iter().all(|r| r.passed) {
                Outcome::Success
            } else {
                Outcome::ToleranceFailure
            })
        }
        Command::RiskRatio => {
            let r = commands::risk_ratio(&cfg)?;
            std::fs::write(
                cfg.out.join("risk_ratio.json"),
                serde_json::to_string_pretty(&r)?,
            )?;
            println!(
                "R = {:.6} (mc se {:.2e}, {} test sets, {} dropped)",
                r.value,
                r.mc_se,
                r.n_test_sets,
                r.dropped.len()
            );
            Ok(Outcome::Success)
        }
    }
}
