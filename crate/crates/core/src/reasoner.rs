//! Paragraph classification: retrieve topics, walk each topic's tree under
//! its grammar, then synthesize paragraph and sentence classes.
//!
//! Backend failures never abort a document. A paragraph whose walk or
//! synthesis fails is marked `degraded` and synthesized by
//! [`fallback_synthesis`].

use std::collections::HashMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{render, Config, Decoding, Prompts, SynthesisMode};
use crate::corpus::{split_paragraphs, split_sentences, Document};
use crate::grammar::{
    cfg::quote_terminal, compile_tree, parse_transcript, CompileError, CompiledGrammar, TranscriptError, TreePath,
};
use crate::llm::{request_seed, CompletionRequest, LlmClient, LlmError};
use crate::retrieval::{HybridRetriever, RetrievalError, TopicRanking};
use crate::stance::StanceClass;
use crate::taxonomy::{Taxonomy, Terminal, Topic, TreeNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicTrace {
    pub mnemonic: String,
    pub path: TreePath,
    pub assessment: Terminal,
}

impl TopicTrace {
    /// Identifier used to link sentences to traces in reports.
    pub fn trace_id(&self, paragraph_index: usize) -> String {
        format!("p{paragraph_index}-{}", self.mnemonic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceClass {
    pub text: String,
    pub stance: StanceClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphResult {
    pub paragraph_index: usize,
    pub text: String,
    /// Fused ranking; traces exist for the selected prefix of it.
    pub topics: TopicRanking,
    pub traces: Vec<TopicTrace>,
    pub paragraph_class: StanceClass,
    pub sentence_classes: Vec<SentenceClass>,
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentResult {
    pub doc_id: String,
    pub date: NaiveDate,
    pub doc_type: String,
    pub paragraphs: Vec<ParagraphResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DocumentResult {
    pub fn degraded_paragraphs(&self) -> usize {
        self.paragraphs.iter().filter(|p| p.degraded).count()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &SentenceClass> {
        self.paragraphs.iter().flat_map(|p| &p.sentence_classes)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReasonerError {
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// A failed completion for one paragraph.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("{0}")]
    Llm(#[from] LlmError),
    #[error("topic {mnemonic}: transcript does not follow the tree: {error}")]
    Transcript { mnemonic: String, error: TranscriptError },
    #[error("synthesis output malformed at line {line}")]
    Synthesis { line: usize },
}

pub struct Reasoner<'t> {
    taxonomy: &'t Taxonomy,
    retriever: HybridRetriever<'t>,
    grammars: HashMap<String, CompiledGrammar>,
    client: LlmClient,
    prompts: Prompts,
    decoding: Decoding,
    synthesis: SynthesisMode,
}

impl<'t> Reasoner<'t> {
    pub fn new(taxonomy: &'t Taxonomy, config: &Config, client: LlmClient) -> Result<Self, ReasonerError> {
        let retriever = HybridRetriever::new(taxonomy, config.retrieval.clone())?;
        Self::with_retriever(taxonomy, retriever, config, client)
    }

    pub fn with_retriever(
        taxonomy: &'t Taxonomy,
        retriever: HybridRetriever<'t>,
        config: &Config,
        client: LlmClient,
    ) -> Result<Self, ReasonerError> {
        let grammars = taxonomy
            .topics
            .iter()
            .map(|t| compile_tree(t).map(|g| (t.mnemonic.clone(), g)))
            .collect::<Result<_, _>>()?;
        Ok(Reasoner {
            taxonomy,
            retriever,
            grammars,
            client,
            prompts: config.prompts.clone(),
            decoding: config.decoding,
            synthesis: config.synthesis,
        })
    }

    pub fn backend_id(&self) -> String {
        self.client.backend_id()
    }

    fn request(&self, prompt: String, grammar_text: String) -> CompletionRequest {
        CompletionRequest {
            seed: request_seed(self.decoding.seed, &prompt),
            prompt,
            grammar_text,
            max_tokens: self.decoding.max_tokens,
            temperature: self.decoding.temperature,
        }
    }

    pub fn walk_prompt(&self, topic: &Topic, paragraph: &str) -> String {
        render(
            &self.prompts.walk,
            &[
                ("paragraph", paragraph),
                ("mnemonic", &topic.mnemonic),
                ("topic_name", &topic.name),
                ("topic_surface", &topic.surface),
            ],
        )
    }

    /// Walk one topic's tree with a single constrained completion. A tree
    /// that is only a terminal needs no completion at all.
    pub fn walk_tree(&self, topic: &Topic, paragraph: &str) -> Result<TopicTrace, StepError> {
        if let TreeNode::Terminal { terminal } = &topic.tree {
            let path = TreePath { steps: Vec::new(), terminal: terminal.clone() };
            return Ok(TopicTrace { mnemonic: topic.mnemonic.clone(), assessment: terminal.clone(), path });
        }
        let grammar = match self.grammars.get(&topic.mnemonic) {
            Some(g) => g.grammar_text.clone(),
            None => {
                compile_tree(topic).map_err(|e| StepError::Llm(LlmError::InvalidRequest(e.to_string())))?.grammar_text
            }
        };
        let out = self.client.complete(&self.request(self.walk_prompt(topic, paragraph), grammar))?;
        let path = parse_transcript(topic, &out.text)
            .map_err(|error| StepError::Transcript { mnemonic: topic.mnemonic.clone(), error })?;
        Ok(TopicTrace { mnemonic: topic.mnemonic.clone(), assessment: path.terminal.clone(), path })
    }

    pub fn synthesis_prompt(&self, paragraph: &str, sentences: &[String], traces: &[TopicTrace]) -> String {
        let numbered: Vec<String> = sentences.iter().enumerate().map(|(i, s)| format!("S{}: {s}", i + 1)).collect();
        let assessments: Vec<String> = if traces.is_empty() {
            vec!["(no topic assessments)".to_string()]
        } else {
            traces
                .iter()
                .map(|t| format!("{}: {} ({})", t.mnemonic, t.assessment.stance, t.assessment.rationale))
                .collect()
        };
        render(
            &self.prompts.synthesis,
            &[("paragraph", paragraph), ("sentences", &numbered.join("\n")), ("assessments", &assessments.join("\n"))],
        )
    }

    pub fn synthesize(
        &self,
        paragraph: &str,
        sentences: &[String],
        traces: &[TopicTrace],
    ) -> Result<(StanceClass, Vec<StanceClass>), StepError> {
        let prompt = self.synthesis_prompt(paragraph, sentences, traces);
        let out = self.client.complete(&self.request(prompt, synthesis_grammar(sentences.len())))?;
        parse_synthesis(&out.text, sentences.len())
    }

    pub fn classify_paragraph(&self, paragraph_index: usize, text: &str) -> ParagraphResult {
        let retrieval = self.retriever.retrieve(text);
        let mut warnings = retrieval.warnings;
        let mut degraded = false;
        let mut traces = Vec::new();
        for m in &retrieval.selected {
            let Some(topic) = self.taxonomy.topic(m) else { continue };
            match self.walk_tree(topic, text) {
                Ok(t) => traces.push(t),
                Err(e) => {
                    degraded = true;
                    warnings.push(format!("walk {m}: {e}"));
                }
            }
        }
        let sentences = split_sentences(text);
        let (paragraph_class, classes) = if degraded || self.synthesis == SynthesisMode::Deterministic {
            fallback_synthesis(&traces, sentences.len())
        } else {
            self.synthesize(text, &sentences, &traces).unwrap_or_else(|e| {
                degraded = true;
                warnings.push(format!("synthesis: {e}"));
                fallback_synthesis(&traces, sentences.len())
            })
        };
        if degraded {
            warnings.push("used deterministic fallback synthesis".into());
        }
        ParagraphResult {
            paragraph_index,
            text: text.to_string(),
            topics: retrieval.fused,
            traces,
            paragraph_class,
            sentence_classes: sentences
                .into_iter()
                .zip(classes)
                .map(|(text, stance)| SentenceClass { text, stance })
                .collect(),
            degraded,
            warnings,
        }
    }

    /// Classify every paragraph of `doc` on up to `jobs` threads. Results
    /// come back in paragraph order whatever the thread count.
    pub fn classify_document(&self, doc: &Document, jobs: usize) -> Result<DocumentResult, ReasonerError> {
        let paragraphs = split_paragraphs(&doc.text);
        let results: Vec<ParagraphResult> = if jobs <= 1 || paragraphs.len() <= 1 {
            paragraphs.iter().enumerate().map(|(i, p)| self.classify_paragraph(i, p)).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| ReasonerError::Pool(e.to_string()))?;
            pool.install(|| paragraphs.par_iter().enumerate().map(|(i, p)| self.classify_paragraph(i, p)).collect())
        };
        let warnings = results
            .iter()
            .flat_map(|p| p.warnings.iter().map(move |w| format!("paragraph {}: {w}", p.paragraph_index)))
            .collect();
        Ok(DocumentResult {
            doc_id: doc.doc_id.clone(),
            date: doc.date,
            doc_type: doc.doc_type.clone(),
            paragraphs: results,
            warnings,
        })
    }
}

/// Grammar for `PARAGRAPH: <class>\n` then `S<i>: <class>\n` for
/// `i = 1..=n_sentences`.
pub fn synthesis_grammar(n_sentences: usize) -> String {
    let mut root = vec![quote_terminal("PARAGRAPH: "), "stance".to_string(), quote_terminal("\n")];
    for i in 1..=n_sentences {
        root.push(quote_terminal(&format!("S{i}: ")));
        root.push("stance".into());
        root.push(quote_terminal("\n"));
    }
    let classes: Vec<String> = StanceClass::ALL.iter().map(|c| quote_terminal(c.as_str())).collect();
    format!("root ::= {}\nstance ::= ({})\n", root.join(" "), classes.join(" | "))
}

pub fn parse_synthesis(text: &str, n_sentences: usize) -> Result<(StanceClass, Vec<StanceClass>), StepError> {
    let mut lines = text.split_terminator('\n');
    let mut class_after = |line: usize, prefix: &str| {
        lines
            .next()
            .and_then(|l| l.strip_prefix(prefix))
            .and_then(|c| c.parse::<StanceClass>().ok())
            .ok_or(StepError::Synthesis { line })
    };
    let paragraph = class_after(1, "PARAGRAPH: ")?;
    let sentences = (1..=n_sentences).map(|i| class_after(i + 1, &format!("S{i}: "))).collect::<Result<Vec<_>, _>>()?;
    if lines.next().is_some() || !text.ends_with('\n') {
        return Err(StepError::Synthesis { line: n_sentences + 2 });
    }
    Ok((paragraph, sentences))
}

/// Majority vote over trace assessments; every sentence inherits the
/// paragraph class. Ties and an empty trace list give neutral.
pub fn fallback_synthesis(traces: &[TopicTrace], n_sentences: usize) -> (StanceClass, Vec<StanceClass>) {
    let mut counts = [0usize; 5];
    for t in traces {
        counts[t.assessment.stance.ordinal() as usize - 1] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    let winners: Vec<usize> = (0..5).filter(|&i| counts[i] == top).collect();
    let class = match winners[..] {
        [i] if top > 0 => StanceClass::ALL[i],
        _ => StanceClass::Neutral,
    };
    (class, vec![class; n_sentences])
}
