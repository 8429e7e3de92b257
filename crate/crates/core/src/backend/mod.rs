//! Model scoring: the `M(y | prompt)` contract and its implementations.
//!
//! Every backend answers one question: given a rendered prompt and the
//! surface forms of the labels, how much unnormalized probability mass does
//! the model put on each label as the continuation? Normalization happens
//! downstream in [`crate::prompt::normalize_scores`].

mod cache;
mod http;
mod synthetic;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{cache_key, CacheEntry, CacheStats, CachedBackend, ScoreCache};
pub use http::{HttpBackend, HttpConfig, LabelScoring};
pub use synthetic::{SyntheticLm, SyntheticLmConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub prompt_text: String,
    /// Label surface forms in label-space order.
    pub label_variants: Vec<String>,
}

impl ScoreRequest {
    pub fn new(prompt_text: impl Into<String>, label_variants: Vec<String>) -> Self {
        Self {
            prompt_text: prompt_text.into(),
            label_variants,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt_text.is_empty() {
            return Err(Error::InvalidArgument("empty prompt text".into()));
        }
        if self.label_variants.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 label variants, got {}",
                self.label_variants.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub raw_scores: Vec<f64>,
    pub backend_id: String,
    pub cached: bool,
}

impl ScoreResponse {
    pub(crate) fn check(&self, request: &ScoreRequest) -> Result<()> {
        if self.raw_scores.len() != request.label_variants.len() {
            return Err(Error::MalformedResponse(format!(
                "{} scores for {} labels",
                self.raw_scores.len(),
                request.label_variants.len()
            )));
        }
        if let Some(s) = self.raw_scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::MalformedResponse(format!("raw score {s}")));
        }
        Ok(())
    }
}

/// Scores label continuations. Implementations must tolerate concurrent
/// calls.
pub trait ScoreBackend: Send + Sync {
    /// Identifies the model and every setting that changes its scores.
    /// Part of the cache key.
    fn backend_id(&self) -> String;

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse>;
}

impl<B: ScoreBackend + ?Sized> ScoreBackend for &B {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        (**self).score_labels(request)
    }
}

impl<B: ScoreBackend + ?Sized> ScoreBackend for Box<B> {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        (**self).score_labels(request)
    }
}

impl<B: ScoreBackend + ?Sized> ScoreBackend for Arc<B> {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        (**self).score_labels(request)
    }
}

/// Counts `score_labels` invocations on the wrapped backend.
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicU64,
}

impl<B> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: ScoreBackend> ScoreBackend for CountingBackend<B> {
    fn backend_id(&self) -> String {
        self.inner.backend_id()
    }

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.score_labels(request)
    }
}
