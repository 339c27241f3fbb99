//! Completion client: sends prompts to an OpenAI-compatible endpoint with
//! fixed decoding parameters, caches responses on disk, retries transient
//! failures, and runs batches with bounded concurrency.
//!
//! The cache is keyed by a digest of (model, decoding parameters, prompt),
//! so identical prompts — e.g. the seven per-box examples sharing one
//! all-box prompt — cost one request, and an interrupted batch resumes
//! without re-requesting anything already answered.

use crate::prompt::PromptRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};
use thiserror::Error;

/// Environment variable holding the bearer token, read at startup and never
/// written into records or cache files.
pub const API_KEY_ENV: &str = "BOXTRACK_API_KEY";

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed endpoint response: {detail} (body starts {excerpt:?})")]
    Protocol { detail: String, excerpt: String },
    #[error("cache I/O at {}", path.display())]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Decoding parameters sent verbatim with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
}

impl DecodeParams {
    /// Greedy decoding, 150-token budget, newline stop.
    pub fn greedy(model: &str) -> Self {
        DecodeParams {
            model: model.to_string(),
            temperature: 0.0,
            max_tokens: 150,
            stop: vec!["\n".to_string()],
        }
    }
}

/// Where to send requests. The key is optional (local servers don't need
/// one) and deliberately not serializable.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub base_url: String,
    pub api_key: Option<String>,
}

impl Endpoint {
    pub fn new(base_url: &str) -> Self {
        Endpoint { base_url: base_url.trim_end_matches('/').to_string(), api_key: None }
    }

    /// Pick up the bearer token from [`API_KEY_ENV`] if set.
    pub fn from_env(base_url: &str) -> Self {
        let mut endpoint = Self::new(base_url);
        endpoint.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        endpoint
    }

    fn completions_url(&self) -> String {
        format!("{}/completions", self.base_url)
    }
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub tries: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { tries: 5, backoff: Duration::from_millis(250) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Error,
}

/// One prompt's outcome, joinable back to its example by `key`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub key: String,
    pub prompt_hash: String,
    pub status: RunStatus,
    pub completion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub endpoint: String,
    pub params: DecodeParams,
    pub timestamp: u64,
}

/// Digest identifying one (model, params, prompt) request; cache file name
/// and `prompt_hash` of the record.
pub fn cache_key(params: &DecodeParams, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    let identity =
        serde_json::json!({ "params": params, "prompt": prompt });
    hasher.update(identity.to_string().as_bytes());
    hex::encode(hasher.finalize())
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.txt"))
}

fn cache_read(dir: &Path, key: &str) -> Option<String> {
    std::fs::read_to_string(cache_path(dir, key)).ok()
}

fn cache_write(dir: &Path, key: &str, text: &str) -> Result<(), RunnerError> {
    let final_path = cache_path(dir, key);
    let tmp_path = dir.join(format!("{key}.tmp"));
    let write = || -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(&tmp_path, text)?;
        std::fs::rename(&tmp_path, &final_path)
    };
    write().map_err(|source| RunnerError::Cache { path: final_path, source })
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    text: String,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

fn excerpt(body: &str) -> String {
    body.chars().take(120).collect()
}

/// One completion request with retries. Transport failures and non-2xx
/// statuses back off exponentially; a well-formed HTTP response that is not
/// a completions payload is a protocol error and is not retried.
pub fn complete(
    agent: &ureq::Agent,
    endpoint: &Endpoint,
    params: &DecodeParams,
    prompt: &str,
    retry: &RetryPolicy,
) -> Result<String, RunnerError> {
    let url = endpoint.completions_url();
    let body = serde_json::json!({
        "model": params.model,
        "prompt": prompt,
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
        "stop": params.stop,
    });
    let tries = retry.tries.max(1);
    let mut last_error = String::new();
    for attempt in 0..tries {
        if attempt > 0 {
            std::thread::sleep(retry.backoff * (1 << (attempt - 1).min(8)));
        }
        let mut request = agent.post(&url);
        if let Some(key) = &endpoint.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let response = match request.send_json(&body) {
            Ok(response) => response,
            Err(error) => {
                last_error = error.to_string();
                continue;
            }
        };
        let raw = match response.into_body().read_to_string() {
            Ok(raw) => raw,
            Err(error) => {
                last_error = format!("reading response body: {error}");
                continue;
            }
        };
        let parsed: WireResponse = serde_json::from_str(&raw).map_err(|error| {
            RunnerError::Protocol { detail: error.to_string(), excerpt: excerpt(&raw) }
        })?;
        let Some(choice) = parsed.choices.into_iter().next() else {
            return Err(RunnerError::Protocol {
                detail: "no choices in response".to_string(),
                excerpt: excerpt(&raw),
            });
        };
        // Servers should already honor `stop`; truncate defensively anyway.
        let mut text = choice.text;
        for stop in &params.stop {
            if let Some(at) = text.find(stop.as_str()) {
                text.truncate(at);
            }
        }
        return Ok(text);
    }
    Err(RunnerError::Transport { attempts: tries, message: last_error })
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub parallelism: usize,
    pub retry: RetryPolicy,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { parallelism: 4, retry: RetryPolicy::default() }
    }
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Run a batch of prompts: distinct (params, prompt) pairs are requested
/// once across at most `parallelism` concurrent connections, every response
/// is persisted to the cache as it arrives, and one record per input prompt
/// is returned in input order. Per-prompt failures become error records;
/// only cache I/O aborts the batch.
pub fn run_batch(
    prompts: &[PromptRecord],
    params: &DecodeParams,
    endpoint: &Endpoint,
    cache_dir: &Path,
    options: &RunOptions,
) -> Result<Vec<CompletionRecord>, RunnerError> {
    std::fs::create_dir_all(cache_dir)
        .map_err(|source| RunnerError::Cache { path: cache_dir.to_path_buf(), source })?;

    // Unique work: first occurrence of each cache key.
    let mut jobs: Vec<(String, &str)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for record in prompts {
        let key = cache_key(params, &record.prompt);
        if seen.insert(key.clone()) {
            jobs.push((key, record.prompt.as_str()));
        }
    }

    let results: Mutex<std::collections::BTreeMap<String, Result<String, String>>> =
        Mutex::new(std::collections::BTreeMap::new());
    let cache_failure: Mutex<Option<RunnerError>> = Mutex::new(None);
    let cursor = AtomicUsize::new(0);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(120)))
        .build()
        .into();

    let workers = options.parallelism.max(1).min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let agent = agent.clone();
            let jobs = &jobs;
            let results = &results;
            let cache_failure = &cache_failure;
            let cursor = &cursor;
            scope.spawn(move || loop {
                let index = cursor.fetch_add(1, Ordering::SeqCst);
                let Some((key, prompt)) = jobs.get(index) else { break };
                if let Some(hit) = cache_read(cache_dir, key) {
                    results.lock().unwrap().insert(key.clone(), Ok(hit));
                    continue;
                }
                match complete(&agent, endpoint, params, prompt, &options.retry) {
                    Ok(text) => {
                        if let Err(error) = cache_write(cache_dir, key, &text) {
                            *cache_failure.lock().unwrap() = Some(error);
                            break;
                        }
                        results.lock().unwrap().insert(key.clone(), Ok(text));
                    }
                    Err(error) => {
                        results.lock().unwrap().insert(key.clone(), Err(error.to_string()));
                    }
                }
            });
        }
    });

    if let Some(error) = cache_failure.into_inner().unwrap() {
        return Err(error);
    }

    let results = results.into_inner().unwrap();
    let timestamp = now_unix();
    let records = prompts
        .iter()
        .map(|record| {
            let key = cache_key(params, &record.prompt);
            let (status, completion, error) = match results.get(&key) {
                Some(Ok(text)) => (RunStatus::Ok, text.clone(), None),
                Some(Err(message)) => (RunStatus::Error, String::new(), Some(message.clone())),
                None => (
                    RunStatus::Error,
                    String::new(),
                    Some("batch aborted before this prompt".to_string()),
                ),
            };
            CompletionRecord {
                key: record.key.clone(),
                prompt_hash: key,
                status,
                completion,
                error,
                endpoint: endpoint.base_url.clone(),
                params: params.clone(),
                timestamp,
            }
        })
        .collect();
    Ok(records)
}
