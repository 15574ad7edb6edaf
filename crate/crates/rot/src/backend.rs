//! Generation backends: a remote OpenAI-compatible chat-completions
//! client and a deterministic scripted replay twin.
//!
//! Both implement [`Backend`] and are safe to call from concurrent
//! workers. Requests are keyed by a content hash of (messages, model):
//! the hash is computed over a canonical serialization, so it does not
//! depend on on-disk field order, and it is what the scripted backend
//! uses to look up recorded completions. The remote client retries
//! transient failures (HTTP 429/5xx, timeouts) with exponential backoff
//! and full jitter; a successful completion is accepted at most once per
//! request, since the retry loop ends on the first success.
//!
//! Configuration: endpoint via `--endpoint` or `ROT_ENDPOINT`,
//! credential via `ROT_API_KEY`. Defaults are temperature 0.0 and
//! max_tokens 8192.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prompt::ChatMessage;

/// Environment variable holding the API credential.
pub const API_KEY_ENV: &str = "ROT_API_KEY";
/// Environment variable holding the endpoint base URL.
pub const ENDPOINT_ENV: &str = "ROT_ENDPOINT";
/// Optional override of the retry backoff base, in milliseconds.
pub const RETRY_BASE_ENV: &str = "ROT_RETRY_BASE_MS";

pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_TOKENS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRequest {
    pub messages: Vec<ChatMessage>,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub request_id: String,
}

impl GenerationRequest {
    pub fn new(messages: Vec<ChatMessage>, model_id: impl Into<String>, request_id: impl Into<String>) -> Self {
        GenerationRequest {
            messages,
            model_id: model_id.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            request_id: request_id.into(),
        }
    }

    /// Stable content hash of (messages, model).
    pub fn content_hash(&self) -> String {
        content_hash(&self.messages, &self.model_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    /// Completion text; empty only if the backend returned empty content.
    pub text: String,
    pub prompt_tokens: Option<usize>,
    pub completion_tokens: Option<usize>,
    /// True when `completion_tokens` is a whitespace estimate rather
    /// than endpoint-reported usage.
    pub tokens_estimated: bool,
    pub latency_ms: u64,
    pub backend: BackendKind,
}

/// Canonical hash of a prompt: sha256 over a fixed-field-order JSON
/// rendering of the model id and messages.
pub fn content_hash(messages: &[ChatMessage], model_id: &str) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        model: &'a str,
        messages: &'a [ChatMessage],
    }
    let canonical = serde_json::to_string(&Canonical {
        model: model_id,
        messages,
    })
    .expect("chat messages serialize");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

pub trait Backend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult>;
    fn kind(&self) -> BackendKind;
}

// ---------------------------------------------------------------------------
// Remote backend

/// Retry schedule: exponential backoff with full jitter.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base: Duration::from_secs(1),
            factor: 2,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Sleep before retry number `attempt` (1-based): uniform in
    /// [0, base * factor^(attempt-1)].
    fn backoff(&self, attempt: u32) -> Duration {
        let cap = self.base.saturating_mul(self.factor.saturating_pow(attempt - 1));
        rand::thread_rng().gen_range(Duration::ZERO..=cap)
    }
}

pub struct RemoteBackend {
    url: String,
    api_key: String,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: Option<usize>,
    #[serde(default)]
    completion_tokens: Option<usize>,
}

impl RemoteBackend {
    /// Build a remote backend from an explicit endpoint and key.
    ///
    /// `endpoint` is the base URL; `/v1/chat/completions` is appended
    /// unless the URL already ends in `/chat/completions`.
    pub fn new(endpoint: &str, api_key: Option<String>) -> Result<Self> {
        let api_key = api_key.ok_or_else(|| {
            Error::Config(format!("missing credential: set {API_KEY_ENV}"))
        })?;
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/v1/chat/completions")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(RemoteBackend {
            url,
            api_key,
            retry: RetryPolicy::default(),
            client,
        })
    }

    /// Build from `ROT_ENDPOINT` / `ROT_API_KEY`, with `endpoint_flag`
    /// taking precedence over the environment. `ROT_RETRY_BASE_MS`
    /// shortens the backoff base for fast local endpoints.
    pub fn from_env(endpoint_flag: Option<&str>) -> Result<Self> {
        let endpoint = match endpoint_flag {
            Some(e) => e.to_string(),
            None => std::env::var(ENDPOINT_ENV)
                .map_err(|_| Error::Config(format!("no endpoint: pass --endpoint or set {ENDPOINT_ENV}")))?,
        };
        let mut backend = Self::new(&endpoint, std::env::var(API_KEY_ENV).ok())?;
        if let Some(ms) = std::env::var(RETRY_BASE_ENV)
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
        {
            backend.retry.base = Duration::from_millis(ms);
        }
        Ok(backend)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn call_once(&self, request: &GenerationRequest) -> std::result::Result<WireResponse, TransientOrFatal> {
        let wire = WireRequest {
            model: &request.model_id,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let response = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&wire)
            .send()
            .map_err(|e| {
                // Connection-level failures (refused, DNS, timeout) are transient.
                TransientOrFatal::Transient(e.to_string())
            })?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransientOrFatal::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(TransientOrFatal::Fatal(format!("HTTP {status}: {body}")));
        }
        response
            .json::<WireResponse>()
            .map_err(|e| TransientOrFatal::Fatal(format!("bad response body: {e}")))
    }
}

enum TransientOrFatal {
    Transient(String),
    Fatal(String),
}

impl Backend for RemoteBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult> {
        let start = Instant::now();
        let mut last_error = String::new();
        for attempt in 1..=self.retry.max_attempts {
            match self.call_once(request) {
                Ok(response) => {
                    let text = response
                        .choices
                        .first()
                        .and_then(|c| c.message.content.clone())
                        .unwrap_or_default();
                    let usage = response.usage;
                    let completion_tokens = usage.as_ref().and_then(|u| u.completion_tokens);
                    return Ok(GenerationResult {
                        tokens_estimated: completion_tokens.is_none(),
                        prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens),
                        completion_tokens,
                        latency_ms: start.elapsed().as_millis() as u64,
                        backend: BackendKind::Remote,
                        text,
                    });
                }
                Err(TransientOrFatal::Fatal(message)) => {
                    return Err(Error::Endpoint { message, attempts: attempt });
                }
                Err(TransientOrFatal::Transient(message)) => {
                    last_error = message;
                    if attempt < self.retry.max_attempts {
                        std::thread::sleep(self.retry.backoff(attempt));
                    }
                }
            }
        }
        Err(Error::Endpoint {
            message: last_error,
            attempts: self.retry.max_attempts,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }
}

// ---------------------------------------------------------------------------
// Scripted backend

/// One recorded completion in the fixture store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub hash: String,
    pub model: String,
    pub text: String,
    #[serde(default)]
    pub note: Option<String>,
}

/// Append-only JSONL store of recorded completions, keyed by prompt
/// hash. Writes are serialized; on duplicate hashes the last write wins.
pub struct FixtureStore {
    path: PathBuf,
    entries: Mutex<HashMap<String, FixtureEntry>>,
}

impl FixtureStore {
    /// Open a store, loading any existing entries. A missing file is an
    /// empty store; the file is created on first record.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let raw = crate::dataset::read_file(&path)?;
            for (idx, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: FixtureEntry = serde_json::from_str(line).map_err(|e| {
                    Error::schema(path.display().to_string(), idx + 1, e.to_string())
                })?;
                entries.insert(entry.hash.clone(), entry);
            }
        }
        Ok(FixtureStore {
            path,
            entries: Mutex::new(entries),
        })
    }

    /// Record a completion for a request; replayed by [`ScriptedBackend`]
    /// on any later request with the same content hash.
    pub fn record(&self, request: &GenerationRequest, text: &str) -> Result<FixtureEntry> {
        let entry = FixtureEntry {
            hash: request.content_hash(),
            model: request.model_id.clone(),
            text: text.to_string(),
            note: None,
        };
        let mut entries = self.entries.lock().expect("fixture store lock");
        if entries.contains_key(&entry.hash) {
            log::warn!("fixture {} re-recorded; last write wins", entry.hash);
        }
        let line = serde_json::to_string(&entry)
            .map_err(|e| Error::Config(format!("serialize fixture: {e}")))?;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        file.write_all(line.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .and_then(|_| file.flush())
            .map_err(|e| Error::io(&self.path, e))?;
        entries.insert(entry.hash.clone(), entry.clone());
        Ok(entry)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("fixture store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lookup(&self, hash: &str) -> Option<FixtureEntry> {
        self.entries.lock().expect("fixture store lock").get(hash).cloned()
    }
}

/// Deterministic replay backend over a fixture store.
pub struct ScriptedBackend {
    store: FixtureStore,
}

impl ScriptedBackend {
    pub fn new(store: FixtureStore) -> Self {
        ScriptedBackend { store }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(ScriptedBackend::new(FixtureStore::open(path)?))
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl Backend for ScriptedBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult> {
        let hash = request.content_hash();
        let entry = self
            .store
            .lookup(&hash)
            .ok_or(Error::FixtureMiss { hash })?;
        Ok(GenerationResult {
            completion_tokens: Some(entry.text.split_whitespace().count()),
            tokens_estimated: true,
            prompt_tokens: None,
            latency_ms: 0,
            backend: BackendKind::Scripted,
            text: entry.text,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Role;

    fn request(text: &str) -> GenerationRequest {
        GenerationRequest::new(
            vec![
                ChatMessage::new(Role::System, "be brief"),
                ChatMessage::new(Role::User, text),
            ],
            "test-model",
            "req-1",
        )
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = request("hello").content_hash();
        let b = request("hello").content_hash();
        let c = request("goodbye").content_hash();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut other_model = request("hello");
        other_model.model_id = "different".into();
        assert_ne!(a, other_model.content_hash());
    }

    #[test]
    fn hash_ignores_on_disk_field_order() {
        let ordered: ChatMessage =
            serde_json::from_str(r#"{"role": "user", "content": "hi"}"#).unwrap();
        let scrambled: ChatMessage =
            serde_json::from_str(r#"{"content": "hi", "role": "user"}"#).unwrap();
        assert_eq!(
            content_hash(&[ordered], "m"),
            content_hash(&[scrambled], "m")
        );
    }

    #[test]
    fn scripted_record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::open(dir.path().join("fixtures.jsonl")).unwrap();
        let req = request("what is 6 x 7?");
        store
            .record(&req, "Row 1: checking.\nFinal Answer: 42")
            .unwrap();
        let backend = ScriptedBackend::new(store);
        let result = backend.generate(&req).unwrap();
        assert_eq!(result.text, "Row 1: checking.\nFinal Answer: 42");
        assert_eq!(result.backend, BackendKind::Scripted);
        assert_eq!(result.completion_tokens, Some(6));
    }

    #[test]
    fn scripted_replay_survives_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.jsonl");
        let req = request("ping");
        FixtureStore::open(&path).unwrap().record(&req, "pong").unwrap();
        let backend = ScriptedBackend::open(&path).unwrap();
        assert_eq!(backend.generate(&req).unwrap().text, "pong");
    }

    #[test]
    fn scripted_miss_names_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let backend = ScriptedBackend::open(dir.path().join("fixtures.jsonl")).unwrap();
        let req = request("never recorded");
        match backend.generate(&req) {
            Err(Error::FixtureMiss { hash }) => assert_eq!(hash, req.content_hash()),
            other => panic!("expected fixture miss, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_record_last_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::open(dir.path().join("fixtures.jsonl")).unwrap();
        let req = request("dup");
        store.record(&req, "first").unwrap();
        store.record(&req, "second").unwrap();
        assert_eq!(store.len(), 1);
        let backend = ScriptedBackend::new(store);
        assert_eq!(backend.generate(&req).unwrap().text, "second");
    }

    #[test]
    fn remote_requires_credential() {
        assert!(matches!(
            RemoteBackend::new("http://localhost:9", None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn remote_unreachable_exhausts_attempts() {
        let backend = RemoteBackend::new("http://127.0.0.1:9", Some("k".into()))
            .unwrap()
            .with_retry(RetryPolicy {
                base: Duration::from_millis(1),
                factor: 2,
                max_attempts: 5,
            });
        match backend.generate(&request("hi")) {
            Err(Error::Endpoint { attempts, .. }) => assert_eq!(attempts, 5),
            other => panic!("expected endpoint error, got {other:?}"),
        }
    }
}
