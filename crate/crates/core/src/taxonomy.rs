//! Themes, topics, phrases and the decision tree attached to every topic.
//!
//! A taxonomy is a single JSON document. Trees are nested inline, so a
//! loaded taxonomy can never contain a dangling reference. Loading always
//! validates; a [`Taxonomy`] obtained from [`load_taxonomy`] satisfies every
//! invariant checked by [`validate_taxonomy`].

use std::collections::HashSet;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::retrieval::tokenize;
use crate::stance::StanceClass;

/// The only schema version this crate reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Trees deeper than this are rejected. Real trees are three or four
/// questions deep.
pub const MAX_TREE_DEPTH: usize = 32;

const REFERENCE_JSON: &str = include_str!("../data/reference-taxonomy.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taxonomy {
    pub schema_version: u32,
    pub version: String,
    pub topics: Vec<Topic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topic {
    /// `THEME-NAME`, e.g. `CORE-INFLATION`.
    pub mnemonic: String,
    pub name: String,
    pub theme: String,
    /// Human-readable description with examples; this is what dense scorers
    /// compare paragraphs against.
    pub surface: String,
    pub phrases: Vec<String>,
    pub tree: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Question { question: String, answers: Vec<Answer> },
    Terminal { terminal: Terminal },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Answer {
    pub label: String,
    pub next: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terminal {
    pub stance: StanceClass,
    pub rationale: String,
}

impl TreeNode {
    pub fn terminal(stance: StanceClass, rationale: impl Into<String>) -> Self {
        TreeNode::Terminal { terminal: Terminal { stance, rationale: rationale.into() } }
    }

    pub fn question(text: impl Into<String>, answers: Vec<(&str, TreeNode)>) -> Self {
        TreeNode::Question {
            question: text.into(),
            answers: answers.into_iter().map(|(label, next)| Answer { label: label.to_string(), next }).collect(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Terminal { .. } => 1,
            TreeNode::Question { answers, .. } => answers.iter().map(|a| a.next.leaf_count()).sum(),
        }
    }

    /// Number of questions on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Terminal { .. } => 0,
            TreeNode::Question { answers, .. } => 1 + answers.iter().map(|a| a.next.depth()).max().unwrap_or(0),
        }
    }
}

impl Taxonomy {
    /// The taxonomy bundled with the crate: 66 topics across ten themes.
    pub fn reference() -> Taxonomy {
        load_taxonomy(REFERENCE_JSON.as_bytes()).expect("bundled taxonomy is valid")
    }

    pub fn reference_json() -> &'static str {
        REFERENCE_JSON
    }

    pub fn topic(&self, mnemonic: &str) -> Option<&Topic> {
        self.topics.iter().find(|t| t.mnemonic == mnemonic)
    }

    pub fn mnemonics(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(|t| t.mnemonic.as_str())
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("taxonomy serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ViolationCode {
    DuplicateMnemonic,
    MalformedMnemonic,
    EmptySurface,
    EmptyPhrase,
    TooFewAnswers,
    DuplicateAnswerLabel,
    IllegalLabel,
    IllegalQuestion,
    TreeTooDeep,
    UnsupportedSchema,
}

/// A broken invariant, located by a human-readable path such as
/// `topics[3](CORE-WAGES).tree.answers[1].next`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("failed to read taxonomy: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed taxonomy document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid taxonomy: {}", .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Vec<Violation>),
}

pub fn load_taxonomy(mut source: impl Read) -> Result<Taxonomy, TaxonomyError> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    let taxonomy: Taxonomy = serde_json::from_slice(&buf)?;
    let violations = validate_taxonomy(&taxonomy);
    if violations.is_empty() {
        Ok(taxonomy)
    } else {
        Err(TaxonomyError::Invalid(violations))
    }
}

pub fn validate_taxonomy(t: &Taxonomy) -> Vec<Violation> {
    let mut out = Vec::new();
    if t.schema_version != SCHEMA_VERSION {
        out.push(Violation {
            code: ViolationCode::UnsupportedSchema,
            path: "schema_version".into(),
            message: format!("expected {SCHEMA_VERSION}, found {}", t.schema_version),
        });
    }

    let mut seen = HashSet::new();
    for (i, topic) in t.topics.iter().enumerate() {
        let base = format!("topics[{i}]({})", topic.mnemonic);
        if !seen.insert(topic.mnemonic.as_str()) {
            out.push(Violation {
                code: ViolationCode::DuplicateMnemonic,
                path: format!("{base}.mnemonic"),
                message: format!("mnemonic {} is already used by an earlier topic", topic.mnemonic),
            });
        }
        if !is_well_formed_mnemonic(&topic.mnemonic) {
            out.push(Violation {
                code: ViolationCode::MalformedMnemonic,
                path: format!("{base}.mnemonic"),
                message: "mnemonic must look like THEME-NAME (uppercase letters and digits)".into(),
            });
        }
        if topic.surface.trim().is_empty() {
            out.push(Violation {
                code: ViolationCode::EmptySurface,
                path: format!("{base}.surface"),
                message: "surface description is empty".into(),
            });
        }
        for (j, phrase) in topic.phrases.iter().enumerate() {
            if tokenize(phrase).is_empty() {
                out.push(Violation {
                    code: ViolationCode::EmptyPhrase,
                    path: format!("{base}.phrases[{j}]"),
                    message: "phrase has no indexable tokens".into(),
                });
            }
        }
        validate_node(&topic.tree, &format!("{base}.tree"), 0, &mut out);
    }
    out
}

fn validate_node(node: &TreeNode, path: &str, depth: usize, out: &mut Vec<Violation>) {
    let TreeNode::Question { question, answers } = node else {
        return;
    };
    if depth >= MAX_TREE_DEPTH {
        out.push(Violation {
            code: ViolationCode::TreeTooDeep,
            path: path.to_string(),
            message: format!("tree exceeds {MAX_TREE_DEPTH} nested questions"),
        });
        return;
    }
    if question.trim().is_empty() || question.contains(['\n', '\r']) {
        out.push(Violation {
            code: ViolationCode::IllegalQuestion,
            path: format!("{path}.question"),
            message: "question text must be a single non-empty line".into(),
        });
    }
    if answers.len() < 2 {
        out.push(Violation {
            code: ViolationCode::TooFewAnswers,
            path: path.to_string(),
            message: format!("question {question:?} has {} answer(s); at least 2 are required", answers.len()),
        });
    }
    let mut labels = HashSet::new();
    for (k, answer) in answers.iter().enumerate() {
        let apath = format!("{path}.answers[{k}]");
        if answer.label.trim().is_empty() || answer.label.contains(['\n', '\r']) {
            out.push(Violation {
                code: ViolationCode::IllegalLabel,
                path: format!("{apath}.label"),
                message: format!("answer label {:?} must be a single non-empty line", answer.label),
            });
        } else if !labels.insert(answer.label.as_str()) {
            out.push(Violation {
                code: ViolationCode::DuplicateAnswerLabel,
                path: format!("{apath}.label"),
                message: format!("answer label {:?} repeats a sibling", answer.label),
            });
        }
        validate_node(&answer.next, &format!("{apath}.next"), depth + 1, out);
    }
}

fn is_well_formed_mnemonic(m: &str) -> bool {
    let Some((theme, name)) = m.split_once('-') else {
        return false;
    };
    let part_ok = |s: &str| {
        s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
            && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
    };
    part_ok(theme) && part_ok(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(tree: &str) -> String {
        format!(
            r#"{{"schema_version":1,"version":"t","topics":[{{"mnemonic":"CORE-INFLATION","name":"Inflation","theme":"core mandate","surface":"Inflation and inflationary pressures","phrases":["inflation"],"tree":{tree}}}]}}"#
        )
    }

    #[test]
    fn smallest_legal_taxonomy_loads() {
        let json = minimal_json(r#"{"terminal":{"stance":"neutral","rationale":"nothing to see"}}"#);
        let t = load_taxonomy(json.as_bytes()).unwrap();
        assert_eq!(t.topics.len(), 1);
        assert_eq!(t.topics[0].tree, TreeNode::terminal(StanceClass::Neutral, "nothing to see"));
    }

    #[test]
    fn single_answer_question_names_the_node() {
        let json = minimal_json(
            r#"{"question":"Is it hot?","answers":[{"label":"yes","next":{"terminal":{"stance":"hawkish","rationale":"r"}}}]}"#,
        );
        match load_taxonomy(json.as_bytes()) {
            Err(TaxonomyError::Invalid(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].code, ViolationCode::TooFewAnswers);
                assert_eq!(v[0].path, "topics[0](CORE-INFLATION).tree");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(load_taxonomy(&b"{\"schema_version\":1,"[..]), Err(TaxonomyError::Parse(_))));
        let unknown_stance = minimal_json(r#"{"terminal":{"stance":"very hawkish","rationale":"r"}}"#);
        assert!(matches!(load_taxonomy(unknown_stance.as_bytes()), Err(TaxonomyError::Parse(_))));
    }

    fn topic(mnemonic: &str, tree: TreeNode) -> Topic {
        Topic {
            mnemonic: mnemonic.into(),
            name: "n".into(),
            theme: "t".into(),
            surface: "s".into(),
            phrases: vec!["wages growth".into()],
            tree,
        }
    }

    #[test]
    fn duplicate_mnemonic_is_reported() {
        let leaf = TreeNode::terminal(StanceClass::Neutral, "r");
        let t = Taxonomy {
            schema_version: 1,
            version: "t".into(),
            topics: vec![topic("CORE-WAGES", leaf.clone()), topic("CORE-WAGES", leaf)],
        };
        let v = validate_taxonomy(&t);
        assert_eq!(v.iter().map(|v| v.code).collect::<Vec<_>>(), vec![ViolationCode::DuplicateMnemonic]);
        assert_eq!(v[0].path, "topics[1](CORE-WAGES).mnemonic");
    }

    #[test]
    fn newline_in_label_is_illegal() {
        let leaf = TreeNode::terminal(StanceClass::Neutral, "r");
        let tree = TreeNode::question("Q?", vec![("a\nb", leaf.clone()), ("c", leaf)]);
        let t = Taxonomy { schema_version: 1, version: "t".into(), topics: vec![topic("CORE-WAGES", tree)] };
        let v = validate_taxonomy(&t);
        assert_eq!(v.iter().map(|v| v.code).collect::<Vec<_>>(), vec![ViolationCode::IllegalLabel]);
        assert_eq!(v[0].path, "topics[0](CORE-WAGES).tree.answers[0].label");
    }

    #[test]
    fn other_invariants() {
        let leaf = TreeNode::terminal(StanceClass::Neutral, "r");
        let tree = TreeNode::question("", vec![("same", leaf.clone()), ("same", leaf.clone())]);
        let mut bad = topic("wages", tree);
        bad.surface = "  ".into();
        bad.phrases.push("--".into());
        let t = Taxonomy { schema_version: 2, version: "t".into(), topics: vec![bad] };
        let codes: HashSet<_> = validate_taxonomy(&t).into_iter().map(|v| v.code).collect();
        for code in [
            ViolationCode::UnsupportedSchema,
            ViolationCode::MalformedMnemonic,
            ViolationCode::EmptySurface,
            ViolationCode::EmptyPhrase,
            ViolationCode::IllegalQuestion,
            ViolationCode::DuplicateAnswerLabel,
        ] {
            assert!(codes.contains(&code), "missing {code:?}");
        }
    }

    #[test]
    fn mnemonic_shape() {
        assert!(is_well_formed_mnemonic("CORE-INFLATION"));
        assert!(is_well_formed_mnemonic("EC-FORECAST"));
        assert!(!is_well_formed_mnemonic("CORE"));
        assert!(!is_well_formed_mnemonic("core-inflation"));
        assert!(!is_well_formed_mnemonic("CORE-INFLATION-X"));
        assert!(!is_well_formed_mnemonic("-INFLATION"));
    }

    #[test]
    fn depth_and_leaves() {
        let leaf = TreeNode::terminal(StanceClass::Neutral, "r");
        let inner = TreeNode::question("b", vec![("x", leaf.clone()), ("y", leaf.clone()), ("z", leaf.clone())]);
        let tree = TreeNode::question("a", vec![("p", inner), ("q", leaf)]);
        assert_eq!(tree.depth(), 2);
        assert_eq!(tree.leaf_count(), 4);
    }

    #[test]
    fn reference_taxonomy() {
        let t = Taxonomy::reference();
        assert_eq!(t.topics.len(), 66);
        assert!(validate_taxonomy(&t).is_empty());
        let themes: HashSet<&str> = t.topics.iter().map(|t| t.theme.as_str()).collect();
        assert_eq!(themes.len(), 10);
        let inflation = t.topic("CORE-INFLATION").unwrap();
        assert_eq!(inflation.tree.leaf_count(), 5);
        assert!(t.topics.iter().all(|t| (1..=3).contains(&t.tree.depth())));
    }
}
