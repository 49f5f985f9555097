//! Paragraph-level topic annotation.
//!
//! Two rankers feed a reciprocal-rank fusion:
//!
//! * a keyword ranker: BM25 with the paragraph as query and every taxonomy
//!   phrase as a document; the topics owning the top-k phrases are counted;
//! * a dense ranker behind [`DenseScorer`], comparing the paragraph with each
//!   topic's surface description. [`TfIdfScorer`] is the built-in default.
//!
//! BM25 for query `Q` and phrase `D`, summed over distinct query terms:
//!
//! ```text
//! idf(t)     = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
//! score(D,Q) = Σ idf(t) · tf(t,D)·(k1+1) / (tf(t,D) + k1·(1 - b + b·|D|/avgdl))
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::similarity::TfIdfModel;
use crate::taxonomy::{Taxonomy, Topic};

/// Number of phrases whose parent topics vote in the keyword ranking.
pub const DEFAULT_TOP_PHRASES: usize = 10;
/// The usual reciprocal-rank-fusion constant.
pub const DEFAULT_K_RRF: f64 = 60.0;

/// Lowercase, split on anything that is not alphanumeric, drop empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b)) {
            return Err(RetrievalError::InvalidParams(format!("k1={} b={}", self.k1, self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("invalid retrieval parameters: {0}")]
    InvalidParams(String),
    #[error("dense scorer {scorer} failed: {message}")]
    Backend { scorer: String, message: String },
}

/// Inverted index over phrases.
#[derive(Debug, Clone)]
pub struct PhraseIndex {
    phrases: Vec<String>,
    postings: HashMap<String, Vec<(usize, u32)>>,
    doc_lengths: Vec<usize>,
    avgdl: f64,
    params: Bm25Params,
}

impl PhraseIndex {
    pub fn build<S: AsRef<str>>(phrases: &[S], params: Bm25Params) -> Result<Self, RetrievalError> {
        params.validate()?;
        let mut postings: HashMap<String, Vec<(usize, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(phrases.len());
        for (id, p) in phrases.iter().enumerate() {
            let tokens = tokenize(p.as_ref());
            doc_lengths.push(tokens.len());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (t, f) in tf {
                postings.entry(t).or_default().push((id, f));
            }
        }
        let total: usize = doc_lengths.iter().sum();
        let avgdl = if phrases.is_empty() { 0.0 } else { total as f64 / phrases.len() as f64 };
        Ok(PhraseIndex {
            phrases: phrases.iter().map(|p| p.as_ref().to_string()).collect(),
            postings,
            doc_lengths,
            avgdl,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrase(&self, id: usize) -> &str {
        &self.phrases[id]
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.document_frequency(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 score of every phrase against `query`.
    pub fn score_all(&self, query: &str) -> Vec<f64> {
        let mut scores = vec![0.0; self.len()];
        if self.avgdl <= 0.0 {
            return scores;
        }
        let Bm25Params { k1, b } = self.params;
        let terms: HashSet<String> = tokenize(query).into_iter().collect();
        let mut terms: Vec<String> = terms.into_iter().collect();
        // fixed summation order keeps scores bit-reproducible
        terms.sort();
        for t in &terms {
            let Some(list) = self.postings.get(t) else { continue };
            let idf = self.idf(t);
            for &(id, tf) in list {
                let tf = f64::from(tf);
                let norm = 1.0 - b + b * self.doc_lengths[id] as f64 / self.avgdl;
                scores[id] += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
        }
        scores
    }
}

/// Top `k` phrases by BM25 score for a paragraph. Phrases sharing no term
/// with the paragraph are never returned. Ties go to the lower phrase id.
pub fn rank_phrases(index: &PhraseIndex, paragraph: &str, k: usize) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> =
        index.score_all(paragraph).into_iter().enumerate().filter(|&(_, s)| s > 0.0).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Deduplicated phrase list of a taxonomy with the topics owning each
/// phrase. Phrase ids follow first appearance in topic order.
#[derive(Debug, Clone)]
pub struct PhraseTable {
    pub phrases: Vec<String>,
    pub owners: Vec<Vec<String>>,
}

impl PhraseTable {
    pub fn from_taxonomy(t: &Taxonomy) -> Self {
        let mut phrases = Vec::new();
        let mut owners: Vec<Vec<String>> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        for topic in &t.topics {
            for p in &topic.phrases {
                let key = tokenize(p).join(" ");
                let id = *ids.entry(key).or_insert_with(|| {
                    phrases.push(p.clone());
                    owners.push(Vec::new());
                    phrases.len() - 1
                });
                if !owners[id].contains(&topic.mnemonic) {
                    owners[id].push(topic.mnemonic.clone());
                }
            }
        }
        PhraseTable { phrases, owners }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTopic {
    pub mnemonic: String,
    pub score: f64,
    pub rank: usize,
}

/// Topics in descending relevance, ranks 1, 2, 3, ...
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicRanking {
    pub entries: Vec<RankedTopic>,
}

impl TopicRanking {
    /// Rank already-ordered `(mnemonic, score)` pairs.
    pub fn from_ordered(items: impl IntoIterator<Item = (String, f64)>) -> Self {
        let entries = items
            .into_iter()
            .enumerate()
            .map(|(i, (mnemonic, score))| RankedTopic { mnemonic, score, rank: i + 1 })
            .collect();
        TopicRanking { entries }
    }

    /// Sort by score descending, ties by mnemonic, then rank.
    pub fn from_scores(mut items: Vec<(String, f64)>) -> Self {
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(items)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, mnemonic: &str) -> Option<&RankedTopic> {
        self.entries.iter().find(|e| e.mnemonic == mnemonic)
    }

    pub fn mnemonics(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.mnemonic.as_str()).collect()
    }
}

/// Count how often each topic owns one of the ranked phrases.
pub fn topics_from_phrases(t: &Taxonomy, ranked: &[(usize, f64)]) -> TopicRanking {
    let table = PhraseTable::from_taxonomy(t);
    topics_from_table(&table, ranked)
}

fn topics_from_table(table: &PhraseTable, ranked: &[(usize, f64)]) -> TopicRanking {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &(id, _) in ranked {
        for owner in &table.owners[id] {
            *counts.entry(owner.as_str()).or_default() += 1;
        }
    }
    TopicRanking::from_scores(counts.into_iter().map(|(m, c)| (m.to_string(), c as f64)).collect())
}

/// Scores a paragraph against topic surface descriptions. Implementations
/// return one score in `[0, 1]` per surface, in input order, and report
/// failures rather than returning zeros.
pub trait DenseScorer: Send + Sync {
    fn id(&self) -> &str;
    fn score(&self, paragraph: &str, surfaces: &[&str]) -> Result<Vec<f64>, String>;
}

/// TF-IDF cosine with IDF fitted on the surfaces being scored.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfIdfScorer;

impl DenseScorer for TfIdfScorer {
    fn id(&self) -> &str {
        "tfidf-cosine"
    }

    fn score(&self, paragraph: &str, surfaces: &[&str]) -> Result<Vec<f64>, String> {
        let model = TfIdfModel::fit(surfaces);
        let p = model.vector(paragraph);
        Ok(surfaces.iter().map(|s| crate::similarity::cosine(&p, &model.vector(s))).collect())
    }
}

/// Score every topic with `scorer`; ties keep input order.
pub fn dense_rank(scorer: &dyn DenseScorer, paragraph: &str, topics: &[Topic]) -> Result<TopicRanking, RetrievalError> {
    let surfaces: Vec<&str> = topics.iter().map(|t| t.surface.as_str()).collect();
    let fail = |message: String| RetrievalError::Backend { scorer: scorer.id().to_string(), message };
    let scores = scorer.score(paragraph, &surfaces).map_err(fail)?;
    if scores.len() != topics.len() {
        return Err(fail(format!("returned {} scores for {} topics", scores.len(), topics.len())));
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(fail(format!("score {bad} outside [0, 1]")));
    }
    let mut items: Vec<(String, f64)> = topics.iter().map(|t| t.mnemonic.clone()).zip(scores).collect();
    items.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(TopicRanking::from_ordered(items))
}

/// Reciprocal rank fusion: each topic scores `Σ 1 / (k_rrf + rank)` over the
/// rankings that contain it.
pub fn fuse(rankings: &[TopicRanking], k_rrf: f64) -> Result<TopicRanking, RetrievalError> {
    if !(k_rrf > 0.0) || rankings.is_empty() {
        return Err(RetrievalError::InvalidParams(format!(
            "fuse needs k_rrf > 0 and at least one ranking (k_rrf={k_rrf}, rankings={})",
            rankings.len()
        )));
    }
    let mut scores: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rankings {
        for e in &r.entries {
            scores.entry(e.mnemonic.as_str()).or_default().push(1.0 / (k_rrf + e.rank as f64));
        }
    }
    let items = scores
        .into_iter()
        .map(|(m, mut parts)| {
            // order-independent sum, so fusion is permutation invariant
            parts.sort_by(f64::total_cmp);
            (m.to_string(), parts.iter().sum())
        })
        .collect();
    Ok(TopicRanking::from_scores(items))
}

/// Up to `max_topics` leading topics scoring at least `min_score`; the top
/// topic is always kept when the ranking is non-empty.
pub fn select_topics(r: &TopicRanking, max_topics: usize, min_score: f64) -> Vec<String> {
    let max_topics = max_topics.max(1);
    let mut out: Vec<String> =
        r.entries.iter().filter(|e| e.score >= min_score).take(max_topics).map(|e| e.mnemonic.clone()).collect();
    if out.is_empty() {
        if let Some(first) = r.entries.first() {
            out.push(first.mnemonic.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub top_phrases: usize,
    pub bm25: Bm25Params,
    pub k_rrf: f64,
    /// Dense-ranked topics (with a positive score) admitted to fusion.
    pub dense_top_k: usize,
    /// Disable to run keyword-only.
    pub use_dense: bool,
    pub max_topics: usize,
    pub min_score: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            top_phrases: DEFAULT_TOP_PHRASES,
            bm25: Bm25Params::default(),
            k_rrf: DEFAULT_K_RRF,
            dense_top_k: 10,
            use_dense: true,
            max_topics: 3,
            min_score: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub keyword: TopicRanking,
    pub dense: Option<TopicRanking>,
    pub fused: TopicRanking,
    pub selected: Vec<String>,
    pub warnings: Vec<String>,
}

/// Keyword + dense retrieval over one taxonomy.
pub struct HybridRetriever<'t> {
    taxonomy: &'t Taxonomy,
    table: PhraseTable,
    index: PhraseIndex,
    scorer: Box<dyn DenseScorer>,
    config: RetrievalConfig,
}

impl<'t> HybridRetriever<'t> {
    pub fn new(taxonomy: &'t Taxonomy, config: RetrievalConfig) -> Result<Self, RetrievalError> {
        Self::with_scorer(taxonomy, config, Box::new(TfIdfScorer))
    }

    pub fn with_scorer(
        taxonomy: &'t Taxonomy,
        config: RetrievalConfig,
        scorer: Box<dyn DenseScorer>,
    ) -> Result<Self, RetrievalError> {
        if config.top_phrases == 0 || config.max_topics == 0 {
            return Err(RetrievalError::InvalidParams("top_phrases and max_topics must be at least 1".into()));
        }
        let table = PhraseTable::from_taxonomy(taxonomy);
        let index = PhraseIndex::build(&table.phrases, config.bm25)?;
        Ok(HybridRetriever { taxonomy, table, index, scorer, config })
    }

    pub fn index(&self) -> &PhraseIndex {
        &self.index
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn retrieve(&self, paragraph: &str) -> Retrieval {
        let ranked = rank_phrases(&self.index, paragraph, self.config.top_phrases);
        let keyword = topics_from_table(&self.table, &ranked);
        let mut warnings = Vec::new();
        let dense = if self.config.use_dense {
            match dense_rank(self.scorer.as_ref(), paragraph, &self.taxonomy.topics) {
                Ok(r) => Some(TopicRanking::from_ordered(
                    r.entries
                        .into_iter()
                        .filter(|e| e.score > 0.0)
                        .take(self.config.dense_top_k)
                        .map(|e| (e.mnemonic, e.score)),
                )),
                Err(e) => {
                    warnings.push(format!("{e}; using keyword ranking only"));
                    None
                }
            }
        } else {
            None
        };
        let mut inputs = vec![keyword.clone()];
        inputs.extend(dense.clone());
        let fused = fuse(&inputs, self.config.k_rrf).expect("validated fusion inputs");
        let selected = select_topics(&fused, self.config.max_topics, self.config.min_score);
        Retrieval { keyword, dense, fused, selected, warnings }
    }
}
