//! Deterministic stand-in language model.
//!
//! The log-score of label `y` for a prompt is
//!
//! ```text
//! prior(y) + Σ_t decay^(distance of t from the end) · w(bucket(t), y)
//!          + majority_label_weight · freq(y)
//! ```
//!
//! Tokens are the whitespace-separated words of the prompt. A token that
//! equals one of the label variants counts as a label mention: it feeds
//! `freq(y)` (mentions of `y` over all label mentions) instead of the feature
//! sum. Every other token is hashed into one of `feature_dim` buckets. Priors
//! and bucket weights are uniform in `[-1, 1)` scaled by `prior_scale` and
//! `feature_scale`, derived from the seed with a fixed hash, so scores are
//! identical across runs and platforms.
//!
//! The recency term makes demonstration order matter; the label-frequency
//! term makes the model lean toward whatever label dominates the prompt.

use serde::{Deserialize, Serialize};

use super::{ScoreBackend, ScoreRequest, ScoreResponse};
use crate::error::{Error, Result};

const TAG_PRIOR: u64 = 0x0070_7269_6f72;
const TAG_FEATURE: u64 = 0x6665_6174;

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLmConfig {
    pub seed: u64,
    /// In `(0, 1]`; 1 makes the model order-blind.
    pub recency_decay: f64,
    pub majority_label_weight: f64,
    /// At least 16.
    pub feature_dim: usize,
    #[serde(default = "default_scale")]
    pub prior_scale: f64,
    #[serde(default = "default_scale")]
    pub feature_scale: f64,
}

impl Default for SyntheticLmConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            recency_decay: 0.9,
            majority_label_weight: 1.0,
            feature_dim: 64,
            prior_scale: 1.0,
            feature_scale: 1.0,
        }
    }
}

impl SyntheticLmConfig {
    /// Zero prior and zero feature weights: every label scores the same on
    /// any prompt without label mentions.
    pub fn symmetric(seed: u64) -> Self {
        Self {
            seed,
            prior_scale: 0.0,
            feature_scale: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.recency_decay > 0.0 && self.recency_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "recency_decay {} not in (0, 1]",
                self.recency_decay
            )));
        }
        for (name, v) in [
            ("majority_label_weight", self.majority_label_weight),
            ("prior_scale", self.prior_scale),
            ("feature_scale", self.feature_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} {v} must be >= 0")));
            }
        }
        if self.feature_dim < 16 {
            return Err(Error::InvalidArgument(format!(
                "feature_dim {} must be >= 16",
                self.feature_dim
            )));
        }
        Ok(())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0u64, |acc, &p| splitmix(acc ^ p))
}

/// Uniform in `[-1, 1)` from 53 high bits.
fn unit(h: u64) -> f64 {
    ((h >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
}

#[derive(Debug, Clone)]
pub struct SyntheticLm {
    config: SyntheticLmConfig,
}

impl SyntheticLm {
    pub fn new(config: SyntheticLmConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &SyntheticLmConfig {
        &self.config
    }

    pub fn log_prior(&self, label: &str) -> f64 {
        self.config.prior_scale * unit(mix(&[self.config.seed, TAG_PRIOR, fnv1a(label.as_bytes())]))
    }

    pub fn bucket(&self, token: &str) -> u64 {
        fnv1a(token.as_bytes()) % self.config.feature_dim as u64
    }

    pub fn feature_weight(&self, token: &str, label: &str) -> f64 {
        self.config.feature_scale
            * unit(mix(&[
                self.config.seed,
                TAG_FEATURE,
                self.bucket(token),
                fnv1a(label.as_bytes()),
            ]))
    }

    /// Raw (unnormalized, strictly positive) scores for each label.
    pub fn score(&self, prompt_text: &str, label_variants: &[String]) -> Vec<f64> {
        let tokens: Vec<&str> = prompt_text.split_whitespace().collect();
        let mut log_scores: Vec<f64> = label_variants.iter().map(|l| self.log_prior(l)).collect();
        let mut mentions = vec![0usize; label_variants.len()];

        // Walk from the end so the decay factor is a running product.
        let mut weight = 1.0;
        for token in tokens.iter().rev() {
            if let Some(y) = label_variants.iter().position(|l| l == token) {
                mentions[y] += 1;
            } else if self.config.feature_scale > 0.0 {
                for (y, label) in label_variants.iter().enumerate() {
                    log_scores[y] += weight * self.feature_weight(token, label);
                }
            }
            weight *= self.config.recency_decay;
        }

        let total: usize = mentions.iter().sum();
        if total > 0 {
            for (s, m) in log_scores.iter_mut().zip(&mentions) {
                *s += self.config.majority_label_weight * (*m as f64 / total as f64);
            }
        }
        log_scores.into_iter().map(f64::exp).collect()
    }
}

impl ScoreBackend for SyntheticLm {
    fn backend_id(&self) -> String {
        let c = &self.config;
        format!(
            "synthetic:seed={},decay={},majority={},dim={},prior={},feature={}",
            c.seed,
            c.recency_decay,
            c.majority_label_weight,
            c.feature_dim,
            c.prior_scale,
            c.feature_scale
        )
    }

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        request.validate()?;
        Ok(ScoreResponse {
            raw_scores: self.score(&request.prompt_text, &request.label_variants),
            backend_id: self.backend_id(),
            cached: false,
        })
    }
}
