//! Decision trees as context-free grammars.
//!
//! Every root-to-terminal path through a tree is rendered as a *transcript*:
//!
//! ```text
//! Q: <question>
//! A: <answer label>
//! ...
//! ASSESSMENT: <stance>
//! ```
//!
//! [`compile_tree`] emits a grammar whose language is exactly the set of
//! transcripts of a tree. Question text is forced by the grammar, so a
//! constrained model only ever chooses among sibling answer labels.
//! [`parse_transcript`] maps a transcript back to its [`TreePath`].

pub mod cfg;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::stance::StanceClass;
use crate::taxonomy::{Terminal, Topic, TreeNode};

pub use cfg::{Choice, Grammar, GrammarTextError};

const Q_PREFIX: &str = "Q: ";
const A_PREFIX: &str = "A: ";
const ASSESSMENT_PREFIX: &str = "ASSESSMENT: ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledGrammar {
    pub topic_mnemonic: String,
    pub grammar_text: String,
    /// Nonterminal name to the answer-index path of the tree node it
    /// expands. `root` maps to the empty path.
    pub node_ids: BTreeMap<String, Vec<usize>>,
}

impl CompiledGrammar {
    pub fn grammar(&self) -> Grammar {
        Grammar::parse(&self.grammar_text).expect("compiled grammar text is well formed")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreePath {
    pub steps: Vec<PathStep>,
    pub terminal: Terminal,
}

impl TreePath {
    pub fn stance(&self) -> StanceClass {
        self.terminal.stance
    }

    /// Canonical transcript of this path.
    pub fn transcript(&self) -> String {
        let mut s = String::new();
        for step in &self.steps {
            s.push_str(Q_PREFIX);
            s.push_str(&step.question);
            s.push('\n');
            s.push_str(A_PREFIX);
            s.push_str(&step.answer);
            s.push('\n');
        }
        s.push_str(ASSESSMENT_PREFIX);
        s.push_str(self.terminal.stance.as_str());
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("topic {topic}: answer label {label:?} repeats a sibling under rule `{rule}`")]
    DuplicateLabel { topic: String, rule: String, label: String },
}

/// Nonterminal for a node reached by the given answer indices.
pub fn nonterminal_name(path: &[usize]) -> String {
    if path.is_empty() {
        return "root".to_string();
    }
    let mut s = String::from("n");
    for i in path {
        s.push('_');
        s.push_str(&i.to_string());
    }
    s
}

pub fn compile_tree(topic: &Topic) -> Result<CompiledGrammar, CompileError> {
    let mut lines = Vec::new();
    let mut node_ids = BTreeMap::new();
    let mut path = Vec::new();
    emit_rule(&topic.mnemonic, &topic.tree, &mut path, &mut lines, &mut node_ids)?;
    let mut grammar_text = lines.join("\n");
    grammar_text.push('\n');
    Ok(CompiledGrammar { topic_mnemonic: topic.mnemonic.clone(), grammar_text, node_ids })
}

// Pre-order emission keeps `root` first and parents above children.
fn emit_rule(
    mnemonic: &str,
    node: &TreeNode,
    path: &mut Vec<usize>,
    lines: &mut Vec<String>,
    ids: &mut BTreeMap<String, Vec<usize>>,
) -> Result<(), CompileError> {
    let name = nonterminal_name(path);
    ids.insert(name.clone(), path.clone());
    match node {
        TreeNode::Terminal { terminal } => {
            let text = format!("{ASSESSMENT_PREFIX}{}\n", terminal.stance.as_str());
            lines.push(format!("{name} ::= {}", cfg::quote_terminal(&text)));
        }
        TreeNode::Question { question, answers } => {
            let mut seen = std::collections::HashSet::new();
            let mut alts = Vec::with_capacity(answers.len());
            for (i, answer) in answers.iter().enumerate() {
                if !seen.insert(answer.label.as_str()) {
                    return Err(CompileError::DuplicateLabel {
                        topic: mnemonic.to_string(),
                        rule: name,
                        label: answer.label.clone(),
                    });
                }
                path.push(i);
                let child = nonterminal_name(path);
                path.pop();
                alts.push(format!("{} {child}", cfg::quote_terminal(&format!("{A_PREFIX}{}\n", answer.label))));
            }
            let q = cfg::quote_terminal(&format!("{Q_PREFIX}{question}\n"));
            lines.push(format!("{name} ::= {q} ({})", alts.join(" | ")));
            for (i, answer) in answers.iter().enumerate() {
                path.push(i);
                emit_rule(mnemonic, &answer.next, path, lines, ids)?;
                path.pop();
            }
        }
    }
    Ok(())
}

/// All root-to-terminal paths, ordered lexicographically by answer index.
pub fn enumerate_paths(tree: &TreeNode) -> Vec<TreePath> {
    let mut out = Vec::new();
    let mut steps = Vec::new();
    collect_paths(tree, &mut steps, &mut out);
    out
}

fn collect_paths(node: &TreeNode, steps: &mut Vec<PathStep>, out: &mut Vec<TreePath>) {
    match node {
        TreeNode::Terminal { terminal } => out.push(TreePath { steps: steps.clone(), terminal: terminal.clone() }),
        TreeNode::Question { question, answers } => {
            for a in answers {
                steps.push(PathStep { question: question.clone(), answer: a.label.clone() });
                collect_paths(&a.next, steps, out);
                steps.pop();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    /// The forced question line differs from the tree.
    QuestionMismatch {
        expected: String,
    },
    /// No sibling answer matches the `A:` line.
    UnknownAnswer {
        question: String,
    },
    /// The `ASSESSMENT:` line does not state the reached terminal's stance.
    AssessmentMismatch {
        expected: StanceClass,
    },
    Truncated,
    TrailingText,
}

/// Where and why a transcript left the tree. `line` is 1-based; `offset`
/// is the byte index of the first character that cannot be matched.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transcript diverges at line {line} (byte {offset}): {kind}")]
pub struct TranscriptError {
    pub line: usize,
    pub offset: usize,
    pub kind: Divergence,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::QuestionMismatch { expected } => write!(f, "expected question {expected:?}"),
            Divergence::UnknownAnswer { question } => write!(f, "answer is not one of the options for {question:?}"),
            Divergence::AssessmentMismatch { expected } => write!(f, "expected assessment {expected}"),
            Divergence::Truncated => f.write_str("transcript ends early"),
            Divergence::TrailingText => f.write_str("unexpected text after the assessment"),
        }
    }
}

/// Recover the unique path whose canonical transcript equals `text`.
pub fn parse_transcript(topic: &Topic, text: &str) -> Result<TreePath, TranscriptError> {
    let mut cur = Cursor { text, pos: 0 };
    let mut node = &topic.tree;
    let mut steps = Vec::new();
    loop {
        match node {
            TreeNode::Terminal { terminal } => {
                let expected = format!("{ASSESSMENT_PREFIX}{}\n", terminal.stance.as_str());
                cur.expect(&expected, || Divergence::AssessmentMismatch { expected: terminal.stance })?;
                if cur.pos != text.len() {
                    return Err(cur.error_at(cur.pos, Divergence::TrailingText));
                }
                return Ok(TreePath { steps, terminal: terminal.clone() });
            }
            TreeNode::Question { question, answers } => {
                let expected = format!("{Q_PREFIX}{question}\n");
                cur.expect(&expected, || Divergence::QuestionMismatch { expected: question.clone() })?;
                let rest = &text[cur.pos..];
                let hit = answers.iter().find(|a| {
                    rest.strip_prefix(A_PREFIX)
                        .and_then(|r| r.strip_prefix(a.label.as_str()))
                        .is_some_and(|r| r.starts_with('\n'))
                });
                match hit {
                    Some(a) => {
                        cur.pos += A_PREFIX.len() + a.label.len() + 1;
                        steps.push(PathStep { question: question.clone(), answer: a.label.clone() });
                        node = &a.next;
                    }
                    None => {
                        let reach = answers
                            .iter()
                            .map(|a| common_prefix(rest, &format!("{A_PREFIX}{}\n", a.label)))
                            .max()
                            .unwrap_or(0);
                        let kind = if reach == rest.len() {
                            Divergence::Truncated
                        } else {
                            Divergence::UnknownAnswer { question: question.clone() }
                        };
                        return Err(cur.error_at(cur.pos + reach, kind));
                    }
                }
            }
        }
    }
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn expect(&mut self, lit: &str, kind: impl FnOnce() -> Divergence) -> Result<(), TranscriptError> {
        let rest = &self.text[self.pos..];
        if rest.starts_with(lit) {
            self.pos += lit.len();
            return Ok(());
        }
        let reach = common_prefix(rest, lit);
        let kind = if reach == rest.len() { Divergence::Truncated } else { kind() };
        Err(self.error_at(self.pos + reach, kind))
    }

    fn error_at(&self, offset: usize, kind: Divergence) -> TranscriptError {
        let line = 1 + self.text[..offset].matches('\n').count();
        TranscriptError { line, offset, kind }
    }
}

/// Length in bytes of the longest common prefix, on a char boundary.
fn common_prefix(a: &str, b: &str) -> usize {
    a.char_indices()
        .zip(b.chars())
        .find(|((_, ca), cb)| ca != cb)
        .map(|((i, _), _)| i)
        .unwrap_or_else(|| a.len().min(b.len()))
}
