//! Core types, simulators and numerical kernels for calibrating the
//! hyperparameters of generalised (Gibbs) posteriors.
//!
//! Model-level code is generic over [`Real`]; [`F64`] and [`F32`] name the two
//! supported scalars.

pub mod data;
pub mod error;
pub mod hyper;
pub mod io;
pub mod numerics;
pub mod real;
pub mod rng;
pub mod simulate;
pub mod split;
pub mod ssm;
pub mod truth;

pub use data::{ModularDataset, SimpleDataset, SsmDataset};
pub use error::{CoreError, Result};
pub use hyper::{EtaDomain, HyperPoint, SAxis};
pub use real::{ln_2pi, normal_logpdf, Real};
pub use rng::{derive_seed, rng_from_seed, stream_rng, Rng64};
pub use simulate::{simulate_conjugate_normal, simulate_mixture, simulate_ssm};
pub use split::{split_dataset, split_indices, split_ssm_blocks, SplitIndex, SplitSpec};
pub use ssm::{ArBridge, TridiagCholesky};
pub use truth::{MixtureTruth, SsmTruth};

pub type F64 = f64;
pub type F32 = f32;

pub type SimpleDatasetF64 = SimpleDataset<f64>;
pub type ModularDatasetF64 = ModularDataset<f64>;
pub type SsmDatasetF64 = SsmDataset<f64>;
