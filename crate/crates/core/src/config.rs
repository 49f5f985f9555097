//! Run configuration, read from TOML.
//!
//! Every section is optional; missing fields take the defaults shown by
//! [`Config::default_toml`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::llm::{HttpConfig, RetryPolicy};
use crate::retrieval::RetrievalConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub retrieval: RetrievalConfig,
    pub prompts: Prompts,
    pub retry: RetryPolicy,
    pub decoding: Decoding,
    pub synthesis: SynthesisMode,
    pub backend: BackendConfig,
    pub diff: DiffConfig,
    pub report: ReportConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    /// One constrained completion per paragraph.
    #[default]
    Llm,
    /// Majority vote over trace assessments; no backend call.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Decoding {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding { max_tokens: 1024, temperature: 0.0, seed: DEFAULT_SEED }
    }
}

pub const DEFAULT_SEED: u64 = 20240806;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// JSON mock script; relative paths resolve against the config file.
    pub mock_script: Option<PathBuf>,
    /// Overrides the environment when present.
    pub http: Option<HttpConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffConfig {
    pub tau: f64,
}

pub const DEFAULT_TAU: f64 = 0.7;

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig { tau: DEFAULT_TAU }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Highlight colours from dovish to hawkish.
    pub palette: [String; 5],
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { palette: DEFAULT_PALETTE.map(String::from) }
    }
}

/// Blue to red, light enough for black text.
pub const DEFAULT_PALETTE: [&str; 5] = ["#92c5de", "#d1e5f0", "#f7f7f7", "#fddbc7", "#f4a582"];

/// Prompt templates. Placeholders are written `{name}`; see
/// [`WALK_PLACEHOLDERS`], [`SYNTHESIS_PLACEHOLDERS`] and
/// [`SUMMARY_PLACEHOLDERS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prompts {
    pub walk: String,
    pub synthesis: String,
    pub summary: String,
}

pub const WALK_PLACEHOLDERS: &[&str] = &["paragraph", "mnemonic", "topic_name", "topic_surface"];
pub const SYNTHESIS_PLACEHOLDERS: &[&str] = &["paragraph", "sentences", "assessments"];
pub const SUMMARY_PLACEHOLDERS: &[&str] = &["sentences"];

const DEFAULT_WALK: &str = "\
You are assessing the monetary policy stance expressed in a paragraph from a central bank publication.
Topic: {topic_name} ({mnemonic}): {topic_surface}

Paragraph:
{paragraph}

Answer each question about this topic as it applies to the paragraph, choosing one of the offered answers, until you reach an assessment.
";

const DEFAULT_SYNTHESIS: &str = "\
You are classifying the monetary policy stance of a paragraph from a central bank publication.

Paragraph:
{paragraph}

Sentences:
{sentences}

Topic assessments:
{assessments}

Weigh the topic assessments and give one class for the paragraph, then one class for each numbered sentence, informed by the paragraph class.
";

const DEFAULT_SUMMARY: &str = "\
Summarise the following new points from a central bank publication in a few sentences.

{sentences}
";

impl Default for Prompts {
    fn default() -> Self {
        Prompts { walk: DEFAULT_WALK.into(), synthesis: DEFAULT_SYNTHESIS.into(), summary: DEFAULT_SUMMARY.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config {path}: {field}: {message}")]
    Invalid { path: PathBuf, field: String, message: String },
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        Self::parse_at(text, Path::new("<inline>"))
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse_at(&text, path)?;
        if let (Some(script), Some(dir)) = (cfg.backend.mock_script.as_mut(), path.parent()) {
            if script.is_relative() {
                *script = dir.join(&*script);
            }
        }
        Ok(cfg)
    }

    fn parse_at(text: &str, path: &Path) -> Result<Config, ConfigError> {
        let cfg: Config = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.validate().map_err(|(field, message)| ConfigError::Invalid { path: path.to_path_buf(), field, message })?;
        Ok(cfg)
    }

    pub fn default_toml() -> String {
        toml::to_string_pretty(&Config::default()).expect("default config serializes")
    }

    /// Checks that TOML types cannot express. Returns `(field, message)`.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let bad = |f: &str, m: String| Err((f.to_string(), m));
        self.retrieval.bm25.validate().or_else(|e| bad("retrieval.bm25", e.to_string()))?;
        if self.retrieval.top_phrases == 0 || self.retrieval.max_topics == 0 {
            return bad("retrieval", "top_phrases and max_topics must be at least 1".into());
        }
        if !(self.retrieval.k_rrf > 0.0) {
            return bad("retrieval.k_rrf", format!("must be positive, got {}", self.retrieval.k_rrf));
        }
        if self.decoding.max_tokens == 0 || !(self.decoding.temperature >= 0.0) {
            return bad("decoding", "max_tokens must be positive and temperature non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.diff.tau) {
            return bad("diff.tau", format!("must lie in [0, 1], got {}", self.diff.tau));
        }
        for (i, c) in self.report.palette.iter().enumerate() {
            if !is_hex_colour(c) {
                return bad(&format!("report.palette[{i}]"), format!("{c:?} is not a #rrggbb colour"));
            }
        }
        for (field, text, allowed) in [
            ("prompts.walk", &self.prompts.walk, WALK_PLACEHOLDERS),
            ("prompts.synthesis", &self.prompts.synthesis, SYNTHESIS_PLACEHOLDERS),
            ("prompts.summary", &self.prompts.summary, SUMMARY_PLACEHOLDERS),
        ] {
            if let Some(p) = placeholders(text).into_iter().find(|p| !allowed.contains(p)) {
                return bad(field, format!("unknown placeholder {{{p}}}; allowed: {}", allowed.join(", ")));
            }
        }
        Ok(())
    }
}

fn is_hex_colour(s: &str) -> bool {
    s.len() == 7 && s.starts_with('#') && s[1..].chars().all(|c| c.is_ascii_hexdigit())
}

/// `{name}` tokens in a template, in order of appearance.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        rest = &rest[open + 1..];
        if let Some(close) = rest.find('}') {
            let name = &rest[..close];
            if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                out.push(name);
                rest = &rest[close + 1..];
            }
        }
    }
    out
}

/// Substitute `{name}` placeholders in a single pass, so values that
/// themselves contain braces are left alone. Unknown names are kept.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after
            .find('}')
            .and_then(|close| values.iter().find(|(k, _)| *k == &after[..close]).map(|(_, v)| (close, v)));
        match hit {
            Some((close, v)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
