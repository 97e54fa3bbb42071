//! Train / calibration / test partitions.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{SimpleDataset, SsmDataset};
use crate::error::{CoreError, Result};
use crate::real::Real;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub calib_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

/// Index partition produced by [`split_indices`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndex {
    pub train: Vec<usize>,
    pub calib: Vec<usize>,
    pub test: Vec<usize>,
    /// Set when the input was empty but some fraction asked for points.
    pub empty_warning: bool,
}

impl SplitSpec {
    pub fn new(
        train_fraction: f64,
        calib_fraction: f64,
        test_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        let s = Self {
            train_fraction,
            calib_fraction,
            test_fraction,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Train fraction `k`, the rest for calibration.
    pub fn train_calib(k: f64, seed: u64) -> Result<Self> {
        Self::new(k, 1.0 - k, 0.0, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let f = [self.train_fraction, self.calib_fraction, self.test_fraction];
        if f.iter().any(|v| !(*v >= 0.0)) {
            return Err(CoreError::ParameterDomain(
                "split fractions must be non-negative".into(),
            ));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(CoreError::ParameterDomain(format!(
                "split fractions sum to {}, not 1",
                f.iter().sum::<f64>()
            )));
        }
        Ok(())
    }

    /// `(train, calib, test)` sizes for `n` items: floors for calibration and test, remainder to train.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The small guard keeps exact products such as 522 · (1/6) from flooring to 86.
        let fl = |f: f64| ((n as f64) * f + 1e-9).floor() as usize;
        let calib = fl(self.calib_fraction);
        let test = fl(self.test_fraction).min(n - calib.min(n));
        let calib = calib.min(n);
        (n - calib - test, calib, test)
    }
}

/// Random permutation of `0..n` followed by contiguous slicing.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndex> {
    spec.validate()?;
    let (nt, nc, _) = spec.sizes(n);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(spec.seed, 0x5917));
    let train = perm[..nt].to_vec();
    let calib = perm[nt..nt + nc].to_vec();
    let test = perm[nt + nc..].to_vec();
    let asks = spec.train_fraction > 0.0 || spec.calib_fraction > 0.0 || spec.test_fraction > 0.0;
    Ok(SplitIndex {
        train,
        calib,
        test,
        empty_warning: n == 0 && asks,
    })
}

pub fn split_dataset<T: Real>(
    data: &SimpleDataset<T>,
    spec: &SplitSpec,
) -> Result<(SimpleDataset<T>, SimpleDataset<T>, SimpleDataset<T>)> {
    let idx = split_indices(data.n(), spec)?;
    Ok((
        data.subset(&idx.train),
        data.subset(&idx.calib),
        data.subset(&idx.test),
    ))
}

/// Splits state-space data by whole blocks; empty parts are returned as `None`.
pub fn split_ssm_blocks<T: Real>(
    data: &SsmDataset<T>,
    spec: &SplitSpec,
) -> Result<(
    Option<SsmDataset<T>>,
    Option<SsmDataset<T>>,
    Option<SsmDataset<T>>,
)> {
    let idx = split_indices(data.n_blocks(), spec)?;
    let part = |v: &Vec<usize>| {
        if v.is_empty() {
            None
        } else {
            Some(data.subset_blocks(v))
        }
    };
    Ok((part(&idx.train), part(&idx.calib), part(&idx.test)))
}
