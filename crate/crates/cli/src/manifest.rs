//! Run manifest written next to classification results.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DocStatus {
    Ok,
    /// Some paragraphs fell back to deterministic synthesis.
    Degraded,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct DocEntry {
    pub doc_id: String,
    pub status: DocStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_file: Option<String>,
    pub paragraphs: usize,
    pub degraded_paragraphs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// SHA-256 of the effective configuration rendered as TOML.
    pub config_hash: String,
    pub taxonomy_version: String,
    pub backend_id: String,
    pub seed: u64,
    pub jobs: u16,
    pub started_at: String,
    pub finished_at: String,
    pub documents: Vec<DocEntry>,
}

impl RunManifest {
    pub fn hard_failures(&self) -> usize {
        self.documents.iter().filter(|d| d.status == DocStatus::Failed).count()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_abc() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
