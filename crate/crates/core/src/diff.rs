//! What changed between two documents: which stance-bearing sentences of
//! the newer one restate a point already made, and which are new.
//!
//! Matching is greedy. Each selected sentence of the new document takes
//! its most similar selected sentence of the old one (the earliest on
//! ties) and counts as similar when that similarity reaches `tau`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::render;
use crate::llm::{CompletionRequest, LlmClient, LlmError};
use crate::reasoner::DocumentResult;
use crate::retrieval::DenseScorer;
use crate::similarity::TfIdfModel;
use crate::stance::StanceClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarPoint {
    pub new: String,
    pub old: String,
    pub sim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffResult {
    pub stance: BTreeSet<StanceClass>,
    pub tau: f64,
    pub similar: Vec<SimilarPoint>,
    pub new_points: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("tau must lie in [0, 1], got {0}")]
    InvalidTau(f64),
    #[error("similarity scorer {scorer} failed: {message}")]
    Scorer { scorer: String, message: String },
}

/// TF-IDF cosine with IDF fitted on `[a, b]`.
pub fn sentence_similarity(a: &str, b: &str) -> f64 {
    TfIdfModel::fit(&[a, b]).similarity(a, b)
}

/// Default scorer for a diff: TF-IDF cosine with IDF fitted on the
/// selected sentences of both documents.
pub struct CorpusTfIdf {
    model: TfIdfModel,
}

impl CorpusTfIdf {
    pub fn fit<S: AsRef<str>>(sentences: &[S]) -> Self {
        CorpusTfIdf { model: TfIdfModel::fit(sentences) }
    }
}

impl DenseScorer for CorpusTfIdf {
    fn id(&self) -> &str {
        "tfidf-cosine"
    }

    fn score(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>, String> {
        let q = self.model.vector(query);
        Ok(candidates.iter().map(|c| crate::similarity::cosine(&q, &self.model.vector(c))).collect())
    }
}

/// Sentences of `r` whose class is in `stance`, in document order.
pub fn stance_sentences<'a>(r: &'a DocumentResult, stance: &BTreeSet<StanceClass>) -> Vec<&'a str> {
    r.sentences().filter(|s| stance.contains(&s.stance)).map(|s| s.text.as_str()).collect()
}

pub fn partition_points(
    new_doc: &DocumentResult,
    old_doc: &DocumentResult,
    stance: &BTreeSet<StanceClass>,
    tau: f64,
) -> Result<DiffResult, DiffError> {
    let new = stance_sentences(new_doc, stance);
    let old = stance_sentences(old_doc, stance);
    let all: Vec<&str> = new.iter().chain(&old).copied().collect();
    partition_sentences(&new, &old, stance, tau, &CorpusTfIdf::fit(&all))
}

/// [`partition_points`] over pre-selected sentences with any scorer.
pub fn partition_sentences(
    new: &[&str],
    old: &[&str],
    stance: &BTreeSet<StanceClass>,
    tau: f64,
    scorer: &dyn DenseScorer,
) -> Result<DiffResult, DiffError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(DiffError::InvalidTau(tau));
    }
    let mut similar = Vec::new();
    let mut new_points = Vec::new();
    for &s in new {
        let best = if old.is_empty() {
            None
        } else {
            let scores = scorer
                .score(s, old)
                .map_err(|message| DiffError::Scorer { scorer: scorer.id().to_string(), message })?;
            if scores.len() != old.len() || scores.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(DiffError::Scorer {
                    scorer: scorer.id().to_string(),
                    message: "expected one score in [0, 1] per old sentence".into(),
                });
            }
            let mut best = 0;
            for (j, &x) in scores.iter().enumerate() {
                if x > scores[best] {
                    best = j;
                }
            }
            Some((best, scores[best]))
        };
        match best {
            Some((j, sim)) if sim >= tau => similar.push(SimilarPoint { new: s.into(), old: old[j].into(), sim }),
            _ => new_points.push(s.to_string()),
        }
    }
    Ok(DiffResult { stance: stance.clone(), tau, similar, new_points })
}

pub fn summary_prompt(template: &str, points: &[String]) -> String {
    let list: Vec<String> = points.iter().map(|p| format!("- {p}")).collect();
    render(template, &[("sentences", &list.join("\n"))])
}

/// Unconstrained summary of `points`. No backend call for an empty list.
pub fn summarize_points(client: &LlmClient, template: &str, points: &[String], seed: u64) -> Result<String, LlmError> {
    if points.is_empty() {
        return Ok(String::new());
    }
    let req = CompletionRequest::unconstrained(summary_prompt(template, points)).with_seed(seed);
    Ok(client.complete(&req)?.text)
}
