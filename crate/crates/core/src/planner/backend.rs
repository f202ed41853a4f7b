use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::Stage;
use crate::coalition::{allocate, form_policy, Assignment};
use crate::dsl::{serialize, serialize_decomposition};
use crate::model::{Decomposition, RobotSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub stage: Stage,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("token limit reached: {0}")]
    TokenLimit(String),
    #[error("endpoint answered {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("scripted backend: {0}")]
    Script(String),
}

/// A chat-completion service. Shared across worker threads.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Delay before retry i is `backoff_ms[min(i, len - 1)]`.
    #[serde(default = "default_backoff")]
    pub backoff_ms: Vec<u64>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_max_tokens() -> u32 {
    2048
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> Vec<u64> {
    vec![500, 2000, 8000]
}

fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid backend config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid backend config: {0}")]
    Invalid(String),
}

impl BackendConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: BackendConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.api_key_env.is_empty() {
            return Err(ConfigError::Invalid("api_key_env is empty".into()));
        }
        Ok(())
    }

    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = match self.backoff_ms.len() {
            0 => 0,
            n => self.backoff_ms[(retry as usize).min(n - 1)],
        };
        Duration::from_millis(ms)
    }
}

/// Client for an OpenAI-style `chat/completions` endpoint.
pub struct HttpBackend {
    config: BackendConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(String),
    Done(Result<String, BackendError>),
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .new_agent();
        Self { config, agent }
    }

    fn attempt(&self, key: &str, body: &serde_json::Value) -> Attempt {
        let response = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let token_limit = |t: &str| t.contains("context_length") || t.contains("maximum context");
        match status {
            200..=299 => Attempt::Done(extract_content(&text)),
            401 | 403 => Attempt::Done(Err(BackendError::Auth(format!("status {status}: {text}")))),
            429 | 500..=599 => Attempt::Retry(format!("status {status}: {text}")),
            _ if token_limit(&text) => Attempt::Done(Err(BackendError::TokenLimit(text))),
            _ => Attempt::Done(Err(BackendError::Http { status, body: text })),
        }
    }
}

fn extract_content(text: &str) -> Result<String, BackendError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| BackendError::Protocol(format!("response is not JSON: {e}")))?;
    let choice = &v["choices"][0];
    if choice["finish_reason"] == "length" {
        return Err(BackendError::TokenLimit("reply truncated at max_tokens".into()));
    }
    choice["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| BackendError::Protocol("no choices[0].message.content".into()))
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let key = std::env::var(&self.config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::Auth(format!("environment variable {} is not set", self.config.api_key_env)))?;
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let attempts = self.config.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff(attempt - 1));
            }
            match self.attempt(&key, &body) {
                Attempt::Done(result) => return result,
                Attempt::Retry(message) => last = message,
            }
        }
        Err(BackendError::Transport { attempts, message: last })
    }
}

/// Replies from a fixed list, one per call, and records every request.
pub struct ScriptedBackend {
    replies: Mutex<std::collections::VecDeque<String>>,
    calls: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedBackend {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<CompletionRequest> {
        self.calls.lock().expect("lock").clone()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        self.calls.lock().expect("lock").push(request.clone());
        self.replies
            .lock()
            .expect("lock")
            .pop_front()
            .ok_or_else(|| BackendError::Script(format!("no reply left for the {} stage", request.stage)))
    }
}

/// Offline stand-in for a language model that answers every stage with the
/// deterministic solver's output for a known decomposition.
pub struct OracleBackend {
    decomposition: Decomposition,
    robots: Vec<RobotSpec>,
}

impl OracleBackend {
    pub fn new(decomposition: Decomposition, robots: Vec<RobotSpec>) -> Self {
        Self { decomposition, robots }
    }
}

impl ChatBackend for OracleBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let policy = form_policy(&self.decomposition, &self.robots);
        let refuse = || {
            let d = policy
                .decisions
                .iter()
                .find(|d| d.assignment == Assignment::Infeasible)
                .expect("infeasible decision");
            format!("INFEASIBLE: {}: {}", d.subtask_id, d.rationale)
        };
        Ok(match request.stage {
            Stage::Decomposition => format!("```\n{}```\n", serialize_decomposition(&self.decomposition)),
            Stage::Coalition if policy.infeasible().is_some() => refuse(),
            Stage::Coalition => format!("```json\n{}\n```\n", policy.to_json()),
            Stage::Allocation => match allocate(&self.decomposition, &policy) {
                Ok(plan) => format!("```\n{}```\n", serialize(&plan)),
                Err(_) => refuse(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub stage: Stage,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Stage calls in order. With a path set, each record is appended to that
/// JSON-lines file as soon as it is pushed.
#[derive(Debug, Default)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
    path: Option<PathBuf>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn to_file(path: impl Into<PathBuf>) -> Self {
        Self {
            records: Vec::new(),
            path: Some(path.into()),
        }
    }

    pub fn push(&mut self, record: TranscriptRecord) -> std::io::Result<()> {
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(f, "{line}")?;
            f.flush()?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}
