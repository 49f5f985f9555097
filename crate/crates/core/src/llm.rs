//! Grammar-constrained completion.
//!
//! [`LlmClient`] wraps a [`Backend`] with retries and re-checks every
//! constrained completion against its grammar locally: a backend that
//! returns text outside the grammar is reported as non-conforming, never
//! passed on.
//!
//! Two backends ship with the crate:
//!
//! * [`HttpBackend`] posts `{prompt, grammar, n_predict, temperature, seed}`
//!   to a grammar-capable inference server and reads the `content` field of
//!   the JSON reply;
//! * [`MockBackend`] walks the grammar itself, picking alternatives from a
//!   [`MockScript`]. It is a pure function of request and script.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grammar::{Choice, Grammar};

pub const ENV_URL: &str = "HAWKDOVE_LLM_URL";
pub const ENV_AUTH_HEADER: &str = "HAWKDOVE_LLM_AUTH_HEADER";
pub const ENV_AUTH_TOKEN: &str = "HAWKDOVE_LLM_AUTH_TOKEN";
pub const ENV_TIMEOUT_SECS: &str = "HAWKDOVE_LLM_TIMEOUT_SECS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    /// Empty means unconstrained.
    pub grammar_text: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl CompletionRequest {
    pub fn constrained(prompt: impl Into<String>, grammar_text: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            grammar_text: grammar_text.into(),
            max_tokens: 1024,
            temperature: 0.0,
            seed: 0,
        }
    }

    pub fn unconstrained(prompt: impl Into<String>) -> Self {
        Self::constrained(prompt, "")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub text: String,
    pub backend_id: String,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    /// Worth retrying: connection failures, timeouts, 5xx, 429.
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend refused the request: {0}")]
    Refused(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend refused the request: {0}")]
    Refused(String),
    #[error("backend {backend} returned text outside the request grammar: {text:?}")]
    NonConforming { backend: String, text: String },
}

pub trait Backend: Send + Sync {
    fn id(&self) -> String;
    fn generate(&self, req: &CompletionRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, initial_backoff_ms: 250, max_backoff_ms: 4000 }
    }
}

impl RetryPolicy {
    /// Exponential backoff before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

#[derive(Clone)]
pub struct LlmClient {
    backend: Arc<dyn Backend>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient").field("backend", &self.backend.id()).field("retry", &self.retry).finish()
    }
}

impl LlmClient {
    pub fn new(backend: Arc<dyn Backend>, retry: RetryPolicy) -> Self {
        LlmClient { backend, retry }
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        if req.max_tokens == 0 || !(req.temperature >= 0.0) {
            return Err(LlmError::InvalidRequest(format!(
                "max_tokens={} temperature={}",
                req.max_tokens, req.temperature
            )));
        }
        let grammar = if req.grammar_text.is_empty() {
            None
        } else {
            Some(Grammar::parse(&req.grammar_text).map_err(|e| LlmError::InvalidRequest(e.to_string()))?)
        };
        let start = Instant::now();
        let attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        let text = loop {
            attempt += 1;
            match self.backend.generate(req) {
                Ok(text) => break text,
                Err(BackendError::Refused(m)) => return Err(LlmError::Refused(m)),
                Err(BackendError::Transport(m)) if attempt >= attempts => {
                    return Err(LlmError::Transport { attempts: attempt, message: m })
                }
                Err(BackendError::Transport(m)) => {
                    log::warn!("{} attempt {attempt} failed: {m}; retrying", self.backend.id());
                    std::thread::sleep(self.retry.backoff(attempt));
                }
            }
        };
        if let Some(g) = grammar {
            if !g.accepts(&text) {
                return Err(LlmError::NonConforming { backend: self.backend.id(), text });
            }
        }
        Ok(CompletionResult { text, backend_id: self.backend.id(), latency: start.elapsed() })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultChoice {
    /// Always take the first alternative.
    #[default]
    First,
    /// At temperature 0 take the first alternative; otherwise draw one
    /// from a generator seeded by the request seed and the text so far.
    Seeded,
}

/// Script rule: when the current question (or, outside a question, the
/// current line) contains `when`, pick the alternative labelled `answer`.
/// With `prompt` set, the rule only fires if the prompt contains it too.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    pub when: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
    pub default: DefaultChoice,
    /// Returned verbatim for unconstrained requests.
    pub completion: String,
}

impl MockScript {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn rule(mut self, when: impl Into<String>, answer: impl Into<String>) -> Self {
        self.rules.push(MockRule { when: when.into(), answer: answer.into(), prompt: None });
        self
    }

    pub fn rule_for_prompt(
        mut self,
        prompt: impl Into<String>,
        when: impl Into<String>,
        answer: impl Into<String>,
    ) -> Self {
        self.rules.push(MockRule { when: when.into(), answer: answer.into(), prompt: Some(prompt.into()) });
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    script: MockScript,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        MockBackend { script }
    }

    fn choose(&self, req: &CompletionRequest, choice: &Choice<'_>) -> usize {
        let current_line = choice.prefix.rsplit('\n').next().unwrap_or("");
        let question =
            choice.prefix.lines().rev().find_map(|l| l.strip_prefix("Q: ")).filter(|_| current_line.is_empty());
        let context = question.unwrap_or(current_line);
        for rule in &self.script.rules {
            if !context.contains(rule.when.as_str())
                || rule.prompt.as_ref().is_some_and(|p| !req.prompt.contains(p.as_str()))
            {
                continue;
            }
            if let Some(i) = choice.options.iter().position(|o| option_label(o) == rule.answer) {
                return i;
            }
        }
        match self.script.default {
            DefaultChoice::Seeded if req.temperature > 0.0 => {
                let mut rng = ChaCha8Rng::seed_from_u64(req.seed ^ fnv1a(choice.prefix.as_bytes()));
                rng.random_range(0..choice.options.len())
            }
            _ => 0,
        }
    }
}

fn option_label(option: &str) -> &str {
    let o = option.strip_suffix('\n').unwrap_or(option);
    o.strip_prefix("A: ").unwrap_or(o)
}

/// Per-request seed: the run seed mixed with a hash of the prompt, so
/// seeded sampling differs between prompts but not between runs.
pub fn request_seed(base: u64, prompt: &str) -> u64 {
    base ^ fnv1a(prompt.as_bytes())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

impl Backend for MockBackend {
    fn id(&self) -> String {
        "mock".to_string()
    }

    fn generate(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        if req.grammar_text.is_empty() {
            return Ok(self.script.completion.clone());
        }
        let g = Grammar::parse(&req.grammar_text).map_err(|e| BackendError::Refused(e.to_string()))?;
        Ok(g.generate(1 << 20, &mut |c| self.choose(req, c)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    pub url: String,
    #[serde(default)]
    pub auth_header: Option<String>,
    #[serde(default)]
    pub auth_token: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

impl HttpConfig {
    /// Read `HAWKDOVE_LLM_URL` (required), `HAWKDOVE_LLM_AUTH_HEADER`
    /// (defaults to `Authorization` when a token is set),
    /// `HAWKDOVE_LLM_AUTH_TOKEN` and `HAWKDOVE_LLM_TIMEOUT_SECS`.
    pub fn from_env() -> Option<HttpConfig> {
        let url = std::env::var(ENV_URL).ok().filter(|u| !u.is_empty())?;
        Some(HttpConfig {
            url,
            auth_header: std::env::var(ENV_AUTH_HEADER).ok(),
            auth_token: std::env::var(ENV_AUTH_TOKEN).ok(),
            timeout_secs: std::env::var(ENV_TIMEOUT_SECS)
                .ok()
                .and_then(|s| s.parse().ok())
                .unwrap_or_else(default_timeout),
        })
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    grammar: &'a str,
    n_predict: u32,
    temperature: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct WireResponse {
    content: String,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::InvalidRequest(format!("cannot build HTTP client: {e}")))?;
        Ok(HttpBackend { config, client })
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}", self.config.url)
    }

    fn generate(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let body = WireRequest {
            prompt: &req.prompt,
            grammar: &req.grammar_text,
            n_predict: req.max_tokens,
            temperature: req.temperature,
            seed: req.seed,
        };
        let mut builder = self.client.post(&self.config.url).json(&body);
        if let Some(token) = &self.config.auth_token {
            let header = self.config.auth_header.as_deref().unwrap_or("Authorization");
            builder = builder.header(header, token);
        }
        let resp = builder.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(BackendError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(BackendError::Refused(format!(
                "HTTP {status}: {}",
                text.chars().take(200).collect::<String>()
            )));
        }
        let parsed: WireResponse =
            resp.json().map_err(|e| BackendError::Refused(format!("response lacks a `content` string: {e}")))?;
        Ok(parsed.content)
    }
}
