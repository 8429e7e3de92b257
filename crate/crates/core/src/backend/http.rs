//! Completions-endpoint client that scores labels from echoed token
//! log-probabilities.
//!
//! For each label the client sends `prompt + " " + label` with `echo: true`,
//! `max_tokens: 0` and `logprobs: 0`, then sums the log-probabilities of the
//! tokens that fall after the prompt. The raw score is the exponential of
//! that sum (or of the first label token only, in first-token mode).

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ScoreBackend, ScoreRequest, ScoreResponse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScoring {
    /// Sum over every token of the label.
    #[default]
    FullSequence,
    /// Only the label's first token.
    FirstToken,
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_max_attempts() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Full URL of the completions endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub scoring: LabelScoring,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            timeout_secs: default_timeout_secs(),
            scoring: LabelScoring::default(),
            max_attempts: default_max_attempts(),
            backoff_ms: default_backoff_ms(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    logprobs: Option<Logprobs>,
}

#[derive(Debug, Deserialize)]
struct Logprobs {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
    text_offset: Vec<usize>,
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Retry(Error),
    Fail(Error),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self> {
        if config.max_attempts == 0 {
            return Err(Error::InvalidArgument("max_attempts must be >= 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    /// Log-probability of `label` as the continuation of `prompt`.
    pub fn label_logprob(&self, prompt: &str, label: &str) -> Result<f64> {
        let context = prompt.trim_end();
        let text = format!("{context} {label}");
        let body = json!({
            "model": self.config.model,
            "prompt": text,
            "max_tokens": 0,
            "echo": true,
            "logprobs": 0,
            "temperature": 0,
        });
        let response = self.post_with_retry(&body)?;
        let parsed: CompletionResponse = serde_json::from_str(&response)
            .map_err(|e| Error::MalformedResponse(format!("decoding body: {e}")))?;
        label_logprob_from_response(&parsed, context.chars().count(), label, self.config.scoring)
    }

    fn post_with_retry(&self, body: &serde_json::Value) -> Result<String> {
        let mut attempt = 1;
        loop {
            match self.post_once(body, attempt) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt >= self.config.max_attempts => return Err(e),
                Err(Attempt::Retry(_)) => {
                    let delay = self
                        .config
                        .backoff_ms
                        .saturating_mul(1 << (attempt - 1).min(16));
                    thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
            }
        }
    }

    fn post_once(
        &self,
        body: &serde_json::Value,
        attempt: u32,
    ) -> std::result::Result<String, Attempt> {
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            Attempt::Retry(Error::Transport {
                attempts: attempt,
                message: e.to_string(),
            })
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            Attempt::Retry(Error::Transport {
                attempts: attempt,
                message: e.to_string(),
            })
        })?;
        if status.is_success() {
            return Ok(text);
        }
        let err = Error::HttpStatus {
            status: status.as_u16(),
            attempts: attempt,
            body: text,
        };
        if status.is_server_error() || status.as_u16() == 429 {
            Err(Attempt::Retry(err))
        } else {
            Err(Attempt::Fail(err))
        }
    }
}

/// Picks the tokens that end past `prompt_chars` and combines their
/// log-probabilities.
fn label_logprob_from_response(
    response: &CompletionResponse,
    prompt_chars: usize,
    label: &str,
    scoring: LabelScoring,
) -> Result<f64> {
    let logprobs = response
        .choices
        .first()
        .and_then(|c| c.logprobs.as_ref())
        .ok_or_else(|| Error::MalformedResponse("no logprobs in first choice".into()))?;
    let n = logprobs.tokens.len();
    if logprobs.token_logprobs.len() != n || logprobs.text_offset.len() != n {
        return Err(Error::MalformedResponse(
            "tokens, token_logprobs and text_offset differ in length".into(),
        ));
    }
    let mut total = 0.0;
    let mut seen = 0;
    for i in 0..n {
        let end = logprobs.text_offset[i] + logprobs.tokens[i].chars().count();
        if end <= prompt_chars {
            continue;
        }
        let lp = logprobs.token_logprobs[i]
            .ok_or_else(|| Error::MalformedResponse(format!("null logprob for label token {i}")))?;
        total += lp;
        seen += 1;
        if scoring == LabelScoring::FirstToken {
            break;
        }
    }
    if seen == 0 {
        return Err(Error::MissingLabelTokens {
            label: label.to_string(),
        });
    }
    Ok(total)
}

impl ScoreBackend for HttpBackend {
    fn backend_id(&self) -> String {
        let scoring = match self.config.scoring {
            LabelScoring::FullSequence => "full",
            LabelScoring::FirstToken => "first",
        };
        format!(
            "http:{}@{}:{scoring}",
            self.config.model, self.config.endpoint
        )
    }

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        request.validate()?;
        let raw_scores = request
            .label_variants
            .iter()
            .map(|label| {
                self.label_logprob(&request.prompt_text, label)
                    .map(f64::exp)
            })
            .collect::<Result<Vec<_>>>()?;
        let response = ScoreResponse {
            raw_scores,
            backend_id: self.backend_id(),
            cached: false,
        };
        response.check(request)?;
        Ok(response)
    }
}
