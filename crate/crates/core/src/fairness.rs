//! Predictive-bias metrics.
//!
//! A prompt is probed with content-free inputs such as `[N/A]`. An unbiased
//! prompt should leave the model undecided on such input, so the more
//! uniform the resulting label distribution, the fairer the prompt.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::PromptContext;
use crate::error::{Error, Result};
use crate::prompt::{PredictiveDistribution, PromptPlan};

pub const DEFAULT_CONTENT_FREE: &str = "[N/A]";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContentFreeInput(String);

impl ContentFreeInput {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::InvalidArgument("empty content-free input".into()));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for ContentFreeInput {
    fn default() -> Self {
        Self(DEFAULT_CONTENT_FREE.to_string())
    }
}

impl TryFrom<String> for ContentFreeInput {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::new(s)
    }
}

impl From<ContentFreeInput> for String {
    fn from(c: ContentFreeInput) -> Self {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessKind {
    Entropy,
    MinClass,
    KlAttribute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessScore {
    pub value: f64,
    pub kind: FairnessKind,
}

/// Which metric to compute and on which probe inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FairnessProbe {
    /// Mean entropy over the content-free inputs.
    Entropy { content_free: Vec<ContentFreeInput> },
    /// Mean smallest class probability over the content-free inputs.
    MinClass { content_free: Vec<ContentFreeInput> },
    /// `1 / (1 + KL(P(ρ ⊕ a) ‖ P(ρ ⊕ b)))` for two attribute inputs.
    KlAttribute {
        attr_a: ContentFreeInput,
        attr_b: ContentFreeInput,
    },
}

impl Default for FairnessProbe {
    fn default() -> Self {
        FairnessProbe::Entropy {
            content_free: vec![ContentFreeInput::default()],
        }
    }
}

impl FairnessProbe {
    pub fn entropy(content_free: Vec<ContentFreeInput>) -> Result<Self> {
        Self::check_nonempty(&content_free)?;
        Ok(FairnessProbe::Entropy { content_free })
    }

    pub fn min_class(content_free: Vec<ContentFreeInput>) -> Result<Self> {
        Self::check_nonempty(&content_free)?;
        Ok(FairnessProbe::MinClass { content_free })
    }

    fn check_nonempty(content_free: &[ContentFreeInput]) -> Result<()> {
        if content_free.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one content-free input".into(),
            ));
        }
        Ok(())
    }

    pub fn kind(&self) -> FairnessKind {
        match self {
            FairnessProbe::Entropy { .. } => FairnessKind::Entropy,
            FairnessProbe::MinClass { .. } => FairnessKind::MinClass,
            FairnessProbe::KlAttribute { .. } => FairnessKind::KlAttribute,
        }
    }

    /// Probe inputs in evaluation order. Each costs one backend call.
    pub fn inputs(&self) -> Vec<&ContentFreeInput> {
        match self {
            FairnessProbe::Entropy { content_free } | FairnessProbe::MinClass { content_free } => {
                content_free.iter().collect()
            }
            FairnessProbe::KlAttribute { attr_a, attr_b } => vec![attr_a, attr_b],
        }
    }

    pub fn calls_per_prompt(&self) -> usize {
        self.inputs().len()
    }
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn entropy(dist: &PredictiveDistribution) -> f64 {
    -dist
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn entropy_fairness(dist: &PredictiveDistribution) -> FairnessScore {
    FairnessScore {
        value: entropy(dist),
        kind: FairnessKind::Entropy,
    }
}

/// Smallest class probability and its (lowest) label index.
pub fn min_class(dist: &PredictiveDistribution) -> (usize, f64) {
    let probs = dist.probs();
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p < probs[best] {
            best = i;
        }
    }
    (best, probs[best])
}

pub fn min_class_fairness(dist: &PredictiveDistribution) -> FairnessScore {
    FairnessScore {
        value: min_class(dist).1,
        kind: FairnessKind::MinClass,
    }
}

/// `KL(p ‖ q)` in nats.
pub fn kl_divergence(p: &PredictiveDistribution, q: &PredictiveDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::DivergenceUndefined { index });
        }
        total += pi * (pi / qi).ln();
    }
    // Rounding can leave a tiny negative for near-identical inputs.
    Ok(total.max(0.0))
}

pub fn kl_attribute_fairness(
    dist_a: &PredictiveDistribution,
    dist_b: &PredictiveDistribution,
) -> Result<FairnessScore> {
    Ok(FairnessScore {
        value: 1.0 / (1.0 + kl_divergence(dist_a, dist_b)?),
        kind: FairnessKind::KlAttribute,
    })
}

/// Fairness of one plan with the per-input distributions behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptFairness {
    pub score: FairnessScore,
    pub distributions: Vec<PredictiveDistribution>,
    /// For the min-class metric: the least likely label of each input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_classes: Option<Vec<usize>>,
}

/// Probes `plan` with every input of `probe` and combines the results.
/// Inputs are scored in parallel but always combined in probe order.
pub fn prompt_fairness(
    ctx: &PromptContext<'_>,
    plan: &PromptPlan,
    probe: &FairnessProbe,
) -> Result<PromptFairness> {
    let inputs = probe.inputs();
    let distributions = inputs
        .par_iter()
        .map(|input| ctx.distribution(plan, input.as_str()))
        .collect::<Result<Vec<_>>>()?;
    let (value, min_classes) = match probe {
        FairnessProbe::Entropy { .. } => (mean(distributions.iter().map(entropy)), None),
        FairnessProbe::MinClass { .. } => {
            let mins: Vec<(usize, f64)> = distributions.iter().map(min_class).collect();
            (
                mean(mins.iter().map(|m| m.1)),
                Some(mins.iter().map(|m| m.0).collect()),
            )
        }
        FairnessProbe::KlAttribute { .. } => (
            kl_attribute_fairness(&distributions[0], &distributions[1])?.value,
            None,
        ),
    };
    Ok(PromptFairness {
        score: FairnessScore {
            value,
            kind: probe.kind(),
        },
        distributions,
        min_classes,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}
