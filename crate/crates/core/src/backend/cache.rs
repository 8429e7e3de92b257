//! Content-addressed score cache with a replay mode.
//!
//! Entries are keyed by a SHA-256 digest over the JSON array
//! `[backend_id, prompt_text, [labels...]]` and persisted one JSON record per
//! line. In replay mode the wrapped backend is never called and a miss is an
//! error, so a recorded run can be reproduced without network access.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ScoreBackend, ScoreRequest, ScoreResponse};
use crate::error::{Error, Result};

pub fn cache_key(backend_id: &str, prompt_text: &str, label_variants: &[String]) -> String {
    let canonical = serde_json::to_vec(&(backend_id, prompt_text, label_variants))
        .expect("strings always serialize");
    hex::encode(Sha256::digest(&canonical))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub backend_id: String,
    pub raw_scores: Vec<f64>,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub by_backend: BTreeMap<String, usize>,
    pub oldest: Option<u64>,
    pub newest: Option<u64>,
}

struct CacheState {
    entries: HashMap<String, CacheEntry>,
    writer: Option<File>,
}

pub struct ScoreCache {
    path: Option<PathBuf>,
    state: Mutex<CacheState>,
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn read_entries(path: &Path) -> Result<Vec<CacheEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CacheEntry = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{} line {}", path.display(), lineno + 1), e))?;
        out.push(entry);
    }
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn encode_lines<'a>(entries: impl IntoIterator<Item = &'a CacheEntry>) -> Vec<u8> {
    let mut buf = Vec::new();
    for entry in entries {
        serde_json::to_writer(&mut buf, entry).expect("entries always serialize");
        buf.push(b'\n');
    }
    buf
}

fn open_append(path: &Path) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            state: Mutex::new(CacheState {
                entries: HashMap::new(),
                writer: None,
            }),
        }
    }

    /// Opens (creating if needed) a cache file. Earlier records win over
    /// later duplicates of the same key.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            for entry in read_entries(&path)? {
                entries.entry(entry.key.clone()).or_insert(entry);
            }
        }
        let writer = Some(open_append(&path)?);
        Ok(Self {
            path: Some(path),
            state: Mutex::new(CacheState { entries, writer }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        self.state
            .lock()
            .expect("cache lock")
            .entries
            .get(key)
            .cloned()
    }

    /// Stores `entry` unless its key is present. Returns whether it was new.
    pub fn insert(&self, entry: CacheEntry) -> Result<bool> {
        let mut state = self.state.lock().expect("cache lock");
        if state.entries.contains_key(&entry.key) {
            return Ok(false);
        }
        if let Some(writer) = state.writer.as_mut() {
            let line = encode_lines([&entry]);
            writer
                .write_all(&line)
                .and_then(|_| writer.flush())
                .map_err(|e| Error::io("appending to score cache", e))?;
        }
        state.entries.insert(entry.key.clone(), entry);
        Ok(true)
    }

    pub fn stats(&self) -> CacheStats {
        let state = self.state.lock().expect("cache lock");
        let mut by_backend = BTreeMap::new();
        for e in state.entries.values() {
            *by_backend.entry(e.backend_id.clone()).or_insert(0) += 1;
        }
        CacheStats {
            entries: state.entries.len(),
            by_backend,
            oldest: state.entries.values().map(|e| e.created_at).min(),
            newest: state.entries.values().map(|e| e.created_at).max(),
        }
    }

    fn sorted(entries: &HashMap<String, CacheEntry>) -> Vec<&CacheEntry> {
        let mut v: Vec<&CacheEntry> = entries.values().collect();
        v.sort_by(|a, b| a.key.cmp(&b.key));
        v
    }

    /// Drops entries whose age at `now` is `max_age_secs` or more, then
    /// rewrites the backing file. Returns the number removed.
    pub fn gc(&self, max_age_secs: u64, now: u64) -> Result<usize> {
        let mut state = self.state.lock().expect("cache lock");
        let before = state.entries.len();
        state
            .entries
            .retain(|_, e| now.saturating_sub(e.created_at) < max_age_secs);
        let removed = before - state.entries.len();
        if let Some(path) = &self.path {
            state.writer = None;
            write_atomic(path, &encode_lines(Self::sorted(&state.entries)))?;
            state.writer = Some(open_append(path)?);
        }
        Ok(removed)
    }

    pub fn gc_now(&self, max_age_secs: u64) -> Result<usize> {
        self.gc(max_age_secs, now_secs())
    }

    /// Writes every entry, sorted by key, to `path`. The output depends only
    /// on the cache contents.
    pub fn export(&self, path: &Path) -> Result<usize> {
        let state = self.state.lock().expect("cache lock");
        let sorted = Self::sorted(&state.entries);
        write_atomic(path, &encode_lines(sorted.iter().copied()))?;
        Ok(sorted.len())
    }

    /// Merges records from an exported file. Returns how many were new.
    pub fn import(&self, path: &Path) -> Result<usize> {
        let mut added = 0;
        for entry in read_entries(path)? {
            if self.insert(entry)? {
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn keys(&self) -> Vec<String> {
        let state = self.state.lock().expect("cache lock");
        let mut keys: Vec<String> = state.entries.keys().cloned().collect();
        keys.sort();
        keys
    }
}

/// Serves scores from a [`ScoreCache`], falling through to the wrapped
/// backend on a miss unless in replay mode.
pub struct CachedBackend<B> {
    inner: B,
    cache: Arc<ScoreCache>,
    replay: bool,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<B: ScoreBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: Arc<ScoreCache>) -> Self {
        Self {
            inner,
            cache,
            replay: false,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Read-only: misses are errors and `inner` is only used for its id.
    pub fn replay(inner: B, cache: Arc<ScoreCache>) -> Self {
        Self {
            replay: true,
            ..Self::new(inner, cache)
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn cache(&self) -> &Arc<ScoreCache> {
        &self.cache
    }
}

impl<B: ScoreBackend> ScoreBackend for CachedBackend<B> {
    fn backend_id(&self) -> String {
        self.inner.backend_id()
    }

    fn score_labels(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        request.validate()?;
        let backend_id = self.inner.backend_id();
        let key = cache_key(&backend_id, &request.prompt_text, &request.label_variants);
        if let Some(entry) = self.cache.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            let response = ScoreResponse {
                raw_scores: entry.raw_scores,
                backend_id,
                cached: true,
            };
            response.check(request)?;
            return Ok(response);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        if self.replay {
            return Err(Error::CacheMiss { key });
        }
        let response = self.inner.score_labels(request)?;
        response.check(request)?;
        self.cache.insert(CacheEntry {
            key,
            backend_id,
            raw_scores: response.raw_scores.clone(),
            created_at: now_secs(),
        })?;
        Ok(ScoreResponse {
            cached: false,
            ..response
        })
    }
}
