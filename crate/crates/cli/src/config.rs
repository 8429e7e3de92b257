use std::fs;
use std::path::{Path, PathBuf};

use fairprompt::backend::{HttpBackend, HttpConfig, ScoreBackend, SyntheticLm, SyntheticLmConfig};
use fairprompt::fairness::{ContentFreeInput, FairnessKind, FairnessProbe};
use fairprompt::prompt::{load_examples, Example, LabelSpace, Template};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable that overrides the HTTP backend's API key.
pub const API_KEY_ENV: &str = "FAIRPROMPT_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    /// The synthetic model's seed is offset by the run seed.
    Synthetic(SyntheticLmConfig),
    Http(HttpConfig),
}

fn default_content_free() -> Vec<ContentFreeInput> {
    vec![ContentFreeInput::default()]
}

fn default_fairness() -> FairnessKind {
    FairnessKind::Entropy
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendConfig,
    pub template: Template,
    pub labels: LabelSpace,
    #[serde(default = "default_content_free")]
    pub content_free: Vec<ContentFreeInput>,
    #[serde(default = "default_fairness")]
    pub fairness: FairnessKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attr_a: Option<ContentFreeInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attr_b: Option<ContentFreeInput>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Demonstrations drawn per seed; all of the training file when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    /// Relative paths resolve against the config file's directory.
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

/// A parsed config plus everything loaded from the files it names.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub digest: String,
    pub train_pool: Vec<Example>,
    pub test: Vec<Example>,
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if self.content_free.is_empty() {
            return Err(CliError::Config("content_free must not be empty".into()));
        }
        if self.n_train == Some(0) {
            return Err(CliError::Config("n_train must be at least 1".into()));
        }
        if let BackendConfig::Synthetic(c) = &self.backend {
            c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form. Credentials are never serialized,
    /// so they do not affect the digest.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Probe for the metric `kind`, taking attribute inputs from the
    /// arguments first and the config second.
    pub fn probe(
        &self,
        kind: FairnessKind,
        attr_a: Option<&str>,
        attr_b: Option<&str>,
    ) -> Result<FairnessProbe, CliError> {
        let config_err = |e: fairprompt::Error| CliError::Config(e.to_string());
        match kind {
            FairnessKind::Entropy => {
                FairnessProbe::entropy(self.content_free.clone()).map_err(config_err)
            }
            FairnessKind::MinClass => {
                FairnessProbe::min_class(self.content_free.clone()).map_err(config_err)
            }
            FairnessKind::KlAttribute => {
                let pick = |arg: Option<&str>, cfg: &Option<ContentFreeInput>, name: &str| match (
                    arg, cfg,
                ) {
                    (Some(a), _) => ContentFreeInput::new(a).map_err(config_err),
                    (None, Some(c)) => Ok(c.clone()),
                    (None, None) => Err(CliError::Config(format!(
                        "the kl metric needs --{name} or {} in the config",
                        name.replace('-', "_")
                    ))),
                };
                Ok(FairnessProbe::KlAttribute {
                    attr_a: pick(attr_a, &self.attr_a, "attr-a")?,
                    attr_b: pick(attr_b, &self.attr_b, "attr-b")?,
                })
            }
        }
    }
}

impl LoadedConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| fairprompt::Error::Io {
            context: path.display().to_string(),
            source: e,
        })?;
        let config = RunConfig::from_json(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let train_pool = load_examples(&base_dir.join(&config.train), &config.labels)?;
        let test = load_examples(&base_dir.join(&config.test), &config.labels)?;
        if train_pool.is_empty() {
            return Err(CliError::Config("training file has no examples".into()).into());
        }
        if test.is_empty() {
            return Err(CliError::Config("test file has no examples".into()).into());
        }
        if let Some(n) = config.n_train {
            if n > train_pool.len() {
                return Err(CliError::Config(format!(
                    "n_train = {n} exceeds the {} training examples",
                    train_pool.len()
                ))
                .into());
            }
        }
        Ok(Self {
            digest: config.digest(),
            config,
            train_pool,
            test,
            base_dir,
        })
    }

    /// Cache path from the config, resolved against its directory.
    pub fn cache_path(&self) -> Option<PathBuf> {
        self.config.cache.as_ref().map(|p| self.base_dir.join(p))
    }

    /// Pool indices of the demonstrations used under `seed`: a ChaCha8
    /// shuffle of the pool, truncated to `n_train`.
    pub fn train_indices(&self, seed: u64) -> Vec<usize> {
        let mut indices: Vec<usize> = (0..self.train_pool.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
        indices.truncate(self.config.n_train.unwrap_or(indices.len()));
        indices
    }

    pub fn train_subset(&self, seed: u64) -> Vec<Example> {
        self.train_indices(seed)
            .into_iter()
            .map(|i| self.train_pool[i].clone())
            .collect()
    }

    pub fn backend(&self, seed: u64) -> anyhow::Result<Box<dyn ScoreBackend>> {
        Ok(match &self.config.backend {
            BackendConfig::Synthetic(c) => {
                let mut c = c.clone();
                c.seed = c.seed.wrapping_add(seed);
                Box::new(SyntheticLm::new(c)?)
            }
            BackendConfig::Http(c) => {
                let mut c = c.clone();
                if let Ok(key) = std::env::var(API_KEY_ENV) {
                    c.api_key = Some(key);
                }
                Box::new(HttpBackend::new(c)?)
            }
        })
    }
}
