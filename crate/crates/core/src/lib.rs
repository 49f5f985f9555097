//! Hawkish/dovish stance classification of central-bank text.
//!
//! A taxonomy of economic topics, each with a small decision tree, guides a
//! language model through constrained decoding: every tree compiles to a
//! grammar whose language is exactly its root-to-leaf transcripts. The
//! resulting sentence classes feed document scores, diffs, HTML reports and
//! econometric checks.
//!
//! The guide in `book/` walks through each stage; its code samples are
//! compiled as doctests of this crate.

// `!(x > 0.0)` style checks are there to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod diff;
pub mod econval;
pub mod grammar;
pub mod llm;
pub mod reasoner;
pub mod report;
pub mod retrieval;
pub mod scoring;
pub mod similarity;
pub mod stance;
pub mod taxonomy;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/taxonomy.md")]
    pub mod taxonomy {}
    #[doc = include_str!("../../../book/src/grammar.md")]
    pub mod grammar {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    pub mod retrieval {}
    #[doc = include_str!("../../../book/src/reasoning.md")]
    pub mod reasoning {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    pub mod scoring {}
    #[doc = include_str!("../../../book/src/diffing.md")]
    pub mod diffing {}
    #[doc = include_str!("../../../book/src/reports.md")]
    pub mod reports {}
    #[doc = include_str!("../../../book/src/econometrics.md")]
    pub mod econometrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    pub mod configuration {}
}
