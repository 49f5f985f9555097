//! TF-IDF cosine similarity, the offline default for both dense topic
//! scoring and sentence matching.
//!
//! Weights are raw term counts times a smoothed inverse document frequency
//! fitted on a reference collection:
//!
//! ```text
//! idf(t) = ln((1 + N) / (1 + df(t))) + 1
//! ```
//!
//! Terms never seen in the collection get `df = 0`. All weights are
//! non-negative, so cosines fall in `[0, 1]`.

use std::collections::{BTreeMap, HashMap};

use crate::retrieval::tokenize;

#[derive(Debug, Clone)]
pub struct TfIdfModel {
    n_docs: usize,
    df: HashMap<String, usize>,
}

pub type SparseVector = BTreeMap<String, f64>;

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        for d in docs {
            let mut terms = tokenize(d.as_ref());
            terms.sort();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_default() += 1;
            }
        }
        TfIdfModel { n_docs: docs.len(), df }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1.0 + self.n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    pub fn vector(&self, text: &str) -> SparseVector {
        let mut v = SparseVector::new();
        for t in tokenize(text) {
            *v.entry(t).or_default() += 1.0;
        }
        for (t, w) in v.iter_mut() {
            *w *= self.idf(t);
        }
        v
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        cosine(&self.vector(a), &self.vector(b))
    }
}

/// Cosine of two non-negative sparse vectors; 0 when either is empty.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small.iter().filter_map(|(t, w)| large.get(t).map(|x| w * x)).sum();
    let na: f64 = a.values().map(|w| w * w).sum();
    let nb: f64 = b.values().map(|w| w * w).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // sqrt(na * nb) is exact for identical vectors, giving exactly 1.0.
    (dot / (na * nb).sqrt()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idf_smoothing() {
        let m = TfIdfModel::fit(&["a b", "a c"]);
        assert!((m.idf("a") - ((3.0f64 / 3.0).ln() + 1.0)).abs() < 1e-15);
        assert!((m.idf("b") - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
        assert!((m.idf("zzz") - (3.0f64.ln() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn identical_text_scores_exactly_one() {
        let s = "Underlying inflation remains too high, and the labour market is tight.";
        let m = TfIdfModel::fit(&[s, "Wages growth has picked up."]);
        assert_eq!(m.similarity(s, s), 1.0);
    }

    #[test]
    fn disjoint_and_empty() {
        let m = TfIdfModel::fit(&["rates rose", "housing fell"]);
        assert_eq!(m.similarity("rates rose", "housing fell"), 0.0);
        assert_eq!(m.similarity("", "housing fell"), 0.0);
        assert_eq!(m.similarity("", ""), 0.0);
    }
}
