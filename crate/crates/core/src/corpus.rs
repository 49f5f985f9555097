//! Document ingestion and segmentation.

use std::collections::HashSet;
use std::io::BufRead;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub date: NaiveDate,
    /// `statement`, `minutes`, or anything else.
    pub doc_type: String,
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate doc_id {id:?}")]
    DuplicateId { line: usize, id: String },
}

/// Read a JSONL corpus: one `{doc_id, date, doc_type, text}` object per
/// line. Blank lines are skipped.
pub fn load_corpus(source: impl BufRead) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed { line: i + 1, message: e.to_string() })?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateId { line: i + 1, id: doc.doc_id });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Split on runs of blank lines. Paragraphs are trimmed; empty ones are
/// dropped.
pub fn split_paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut flush = |current: &mut Vec<&str>| {
        let p = current.join("\n");
        let p = p.trim();
        if !p.is_empty() {
            out.push(p.to_string());
        }
        current.clear();
    };
    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut current);
        } else {
            current.push(line);
        }
    }
    flush(&mut current);
    out
}

/// Revision of [`ABBREVIATIONS`]; bump when the list changes, since it
/// changes segmentation.
pub const ABBREVIATIONS_VERSION: u32 = 1;

/// Tokens ending in a full stop that never end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "cf.", "vs.", "approx.", "No.", "Nos.", "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "Jan.",
    "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.", "Fig.", "Inc.", "Ltd.",
    "Co.", "Corp.",
];

const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']'];
const OPENERS: &[char] = &['"', '\'', '\u{201c}', '\u{2018}', '(', '['];

/// Rule-based sentence segmentation.
///
/// A sentence ends after `.`, `!` or `?` (plus any closing quotes or
/// brackets) when whitespace follows and the next word starts with an
/// uppercase letter or a digit, optionally behind an opening quote or
/// bracket. A full stop closing an entry of [`ABBREVIATIONS`] or a single
/// capital initial does not end a sentence.
pub fn split_sentences(paragraph: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = paragraph.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (byte, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map_or(paragraph.len(), |&(b, _)| b);
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary =
            k > j && starts_sentence(&chars[k..]) && !(c == '.' && is_protected(&paragraph[start..byte + 1]));
        if boundary {
            push_trimmed(&mut out, &paragraph[start..end]);
            start = chars[k].0;
            i = k;
        } else {
            i += 1;
        }
    }
    push_trimmed(&mut out, &paragraph[start..]);
    out
}

fn starts_sentence(rest: &[(usize, char)]) -> bool {
    let mut it = rest.iter().map(|&(_, c)| c).skip_while(|c| OPENERS.contains(c));
    it.next().is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
}

fn is_protected(upto_stop: &str) -> bool {
    let word = upto_stop.rsplit(|c: char| c.is_whitespace() || OPENERS.contains(&c)).next().unwrap_or("");
    if ABBREVIATIONS.contains(&word) {
        return true;
    }
    let mut cs = word.chars();
    matches!((cs.next(), cs.next(), cs.next()), (Some(a), Some('.'), None) if a.is_uppercase())
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}
