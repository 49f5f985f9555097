#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;

use hawkdove::config::Config;
use hawkdove::corpus::{load_corpus, Document};
use hawkdove::llm::{LlmClient, MockBackend, MockScript};
use hawkdove::stance::StanceClass;
use hawkdove::taxonomy::{Answer, Terminal, Topic, TreeNode};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_config() -> Config {
    Config::load(&fixture("config.toml")).expect("fixture config")
}

pub fn fixture_corpus() -> Vec<Document> {
    load_corpus(BufReader::new(File::open(fixture("corpus.jsonl")).unwrap())).expect("fixture corpus")
}

pub fn fixture_script() -> MockScript {
    MockScript::from_json(&std::fs::read_to_string(fixture("mock-script.json")).unwrap()).expect("fixture script")
}

pub fn mock_client(script: MockScript) -> LlmClient {
    LlmClient::new(Arc::new(MockBackend::new(script)), Default::default())
}

/// Random decision tree with at most `max_depth` questions on any path and
/// 2..=`max_branch` answers per question. Every word of every question and
/// label is unique within the tree, and labels are exactly two words, so
/// no single-token edit turns one transcript into another.
pub struct TreeGen<'r, R: Rng> {
    pub rng: &'r mut R,
    pub max_depth: usize,
    pub max_branch: usize,
    words: usize,
}

impl<'r, R: Rng> TreeGen<'r, R> {
    pub fn new(rng: &'r mut R, max_depth: usize, max_branch: usize) -> Self {
        TreeGen { rng, max_depth, max_branch, words: 0 }
    }

    fn word(&mut self) -> String {
        self.words += 1;
        format!("w{}", self.words)
    }

    pub fn tree(&mut self) -> TreeNode {
        self.node(0)
    }

    fn node(&mut self, depth: usize) -> TreeNode {
        let ask = depth < self.max_depth && (depth == 0 || self.rng.random_bool(0.6));
        if !ask {
            let stance = StanceClass::ALL[self.rng.random_range(0..5)];
            let rationale = format!("{} {}", self.word(), self.word());
            return TreeNode::Terminal { terminal: Terminal { stance, rationale } };
        }
        let question = format!("{} {} {}?", self.word(), self.word(), self.word());
        let n = self.rng.random_range(2..=self.max_branch);
        let answers = (0..n)
            .map(|_| {
                let label = format!("{} {}", self.word(), self.word());
                Answer { label, next: self.node(depth + 1) }
            })
            .collect();
        TreeNode::Question { question, answers }
    }
}

pub fn topic_with(mnemonic: &str, tree: TreeNode) -> Topic {
    Topic {
        mnemonic: mnemonic.to_string(),
        name: mnemonic.to_lowercase(),
        theme: "test".into(),
        surface: format!("{mnemonic} surface"),
        phrases: vec![mnemonic.to_lowercase().replace('-', " ")],
        tree,
    }
}

/// Tokens of a transcript: maximal runs of non-whitespace, and single
/// newlines. Returned as byte ranges.
pub fn tokens(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, i));
            }
            if c == '\n' {
                out.push((i, i + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

/// One single-token mutation: replace a word with a fresh one, delete a
/// token, or duplicate it.
pub fn mutate<R: Rng>(rng: &mut R, text: &str) -> String {
    let toks = tokens(text);
    let (s, e) = toks[rng.random_range(0..toks.len())];
    let tok = &text[s..e];
    let newline = tok == "\n";
    match rng.random_range(0..3) {
        0 if !newline => format!("{}zzfresh{}", &text[..s], &text[e..]),
        1 | 0 => {
            // drop a separating space with the word so lines stay well formed
            let s = if !newline && s > 0 && text.as_bytes()[s - 1] == b' ' { s - 1 } else { s };
            format!("{}{}", &text[..s], &text[e..])
        }
        _ => {
            let sep = if newline { "" } else { " " };
            format!("{}{sep}{tok}{}", &text[..e], &text[e..])
        }
    }
}
