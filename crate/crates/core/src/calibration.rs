//! Contextual post-calibration, used as a comparison baseline.
//!
//! The prior is the model's label distribution on content-free input under a
//! fixed plan; calibrated probabilities are `q(y) ∝ p(y) / prior(y)`.

use serde::{Deserialize, Serialize};

use crate::context::PromptContext;
use crate::error::{Error, Result};
use crate::fairness::ContentFreeInput;
use crate::prompt::{PredictiveDistribution, PromptPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationVector {
    pub prior: PredictiveDistribution,
}

impl CalibrationVector {
    /// Rejects priors with a zero entry.
    pub fn new(prior: PredictiveDistribution) -> Result<Self> {
        if let Some(index) = prior.probs().iter().position(|&p| p <= 0.0) {
            return Err(Error::CalibrationUndefined { index });
        }
        Ok(Self { prior })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            prior: PredictiveDistribution::uniform(n),
        }
    }
}

/// Mean of the normalized distributions of `plan ⊕ η` over `content_free`.
pub fn estimate_prior(
    ctx: &PromptContext<'_>,
    plan: &PromptPlan,
    content_free: &[ContentFreeInput],
) -> Result<CalibrationVector> {
    if content_free.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one content-free input".into(),
        ));
    }
    let mut sum = vec![0.0; ctx.labels.len()];
    for eta in content_free {
        let d = ctx.distribution(plan, eta.as_str())?;
        for (s, p) in sum.iter_mut().zip(d.probs()) {
            *s += p;
        }
    }
    let n = content_free.len() as f64;
    let mean: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    CalibrationVector::new(PredictiveDistribution::new(mean)?)
}

pub fn calibrate(
    dist: &PredictiveDistribution,
    calibration: &CalibrationVector,
) -> Result<PredictiveDistribution> {
    let prior = calibration.prior.probs();
    if prior.len() != dist.len() {
        return Err(Error::LengthMismatch {
            left: dist.len(),
            right: prior.len(),
        });
    }
    if let Some(index) = prior.iter().position(|&p| p <= 0.0) {
        return Err(Error::CalibrationUndefined { index });
    }
    let scaled: Vec<f64> = dist.probs().iter().zip(prior).map(|(p, q)| p / q).collect();
    let total: f64 = scaled.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateScores);
    }
    PredictiveDistribution::new(scaled.into_iter().map(|s| (s / total).min(1.0)).collect())
}
