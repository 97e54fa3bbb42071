use gbcal_core::HyperPoint;
use serde::{Deserialize, Serialize};

use crate::error::{LossError, Result};
use crate::model::IntegralMethod;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    NegLogLik,
    BetaLoss,
    SmiEta,
    SmiGamma,
    SmiEtaBeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub hyper: HyperPoint,
    #[serde(default)]
    pub integral_method: IntegralMethod,
}

impl LossSpec {
    pub fn new(kind: LossKind, hyper: HyperPoint, integral_method: IntegralMethod) -> Result<Self> {
        let s = Self {
            kind,
            hyper,
            integral_method,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let need_beta = matches!(self.kind, LossKind::BetaLoss | LossKind::SmiEtaBeta);
        if need_beta {
            let beta = self
                .hyper
                .beta_value()
                .ok_or_else(|| LossError::Spec(format!("{:?} needs beta or b", self.kind)))?;
            if self.kind == LossKind::BetaLoss && beta == 1.0 {
                return Err(LossError::Spec(
                    "beta = 1 is the log-likelihood; use NegLogLik".into(),
                ));
            }
        }
        if self.kind == LossKind::SmiGamma && self.hyper.gamma.is_none() {
            return Err(LossError::Spec("SmiGamma needs gamma".into()));
        }
        if matches!(self.kind, LossKind::SmiEta | LossKind::SmiEtaBeta) && !(self.hyper.eta >= 0.0)
        {
            return Err(LossError::Spec("eta must be non-negative".into()));
        }
        Ok(())
    }
}
