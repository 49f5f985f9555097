//! A small reader for GBNF-style grammar text.
//!
//! Supported notation is the subset emitted by [`compile_tree`](super::compile_tree)
//! and the synthesis step: one rule per line (`name ::= rhs`), double-quoted
//! terminals with `\"`, `\\`, `\n` (plus `\r`, `\t`) escapes, rule references,
//! and `|` alternatives, optionally grouped in parentheses. Blank lines and
//! `#` comments are ignored. The first rule must be `root`.
//!
//! The languages produced here are finite, so recognition is a memoised
//! walk over end positions and enumeration is plain expansion. Recursive
//! grammars can still be recognised (non-left-recursive ones exactly) but
//! not enumerated.

use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Literal(String),
    Ref(String),
    Group(Vec<Vec<Item>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub alternatives: Vec<Vec<Item>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    rules: Vec<Rule>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarTextError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("grammar has no rules")]
    Empty,
    #[error("first rule must be `root`, found `{0}`")]
    RootNotFirst(String),
    #[error("rule `{0}` is defined more than once")]
    DuplicateRule(String),
    #[error("rule `{rule}` references undefined `{missing}`")]
    Undefined { rule: String, missing: String },
    #[error("grammar is recursive through `{0}`; its language cannot be enumerated")]
    Recursive(String),
    #[error("language has more than {0} strings")]
    TooLarge(usize),
}

/// A point during guided generation where the grammar offers several
/// alternatives.
#[derive(Debug)]
pub struct Choice<'a> {
    /// Text generated so far.
    pub prefix: &'a str,
    /// For each alternative, the literal text it would emit first (empty if
    /// the alternative does not start with a fixed literal).
    pub options: Vec<String>,
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Grammar, GrammarTextError> {
        let mut rules = Vec::new();
        let mut index = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| GrammarTextError::Syntax { line: lineno + 1, message };
            let (lhs, rhs) = line.split_once("::=").ok_or_else(|| syntax("expected `name ::= ...`".into()))?;
            let name = lhs.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(syntax(format!("invalid rule name {name:?}")));
            }
            let mut p = RhsParser { chars: rhs.chars().collect(), pos: 0 };
            let alternatives = p.alternatives().map_err(&syntax)?;
            p.skip_ws();
            if p.pos != p.chars.len() {
                return Err(syntax(format!("unexpected `{}`", p.chars[p.pos])));
            }
            if index.insert(name.to_string(), rules.len()).is_some() {
                return Err(GrammarTextError::DuplicateRule(name.to_string()));
            }
            rules.push(Rule { name: name.to_string(), alternatives });
        }
        let first = rules.first().ok_or(GrammarTextError::Empty)?;
        if first.name != "root" {
            return Err(GrammarTextError::RootNotFirst(first.name.clone()));
        }
        let g = Grammar { rules, index };
        g.check_references()?;
        Ok(g)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.index.get(name).map(|&i| &self.rules[i])
    }

    fn check_references(&self) -> Result<(), GrammarTextError> {
        fn walk(g: &Grammar, rule: &str, seq: &[Item]) -> Result<(), GrammarTextError> {
            for item in seq {
                match item {
                    Item::Literal(_) => {}
                    Item::Ref(r) if !g.index.contains_key(r) => {
                        return Err(GrammarTextError::Undefined { rule: rule.to_string(), missing: r.clone() })
                    }
                    Item::Ref(_) => {}
                    Item::Group(alts) => {
                        for a in alts {
                            walk(g, rule, a)?;
                        }
                    }
                }
            }
            Ok(())
        }
        for r in &self.rules {
            for alt in &r.alternatives {
                walk(self, &r.name, alt)?;
            }
        }
        Ok(())
    }

    /// Whether `text` is in the language of `root`.
    pub fn accepts(&self, text: &str) -> bool {
        let mut m = Matcher { g: self, input: text.as_bytes(), memo: HashMap::new(), active: HashSet::new() };
        m.rule_ends(0, 0).contains(&text.len())
    }

    /// Every string of the language, in derivation order (first alternative
    /// first). Fails if the grammar is recursive or the language exceeds
    /// `cap` strings.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<String>, GrammarTextError> {
        let mut stack = Vec::new();
        self.expand_rule(0, cap, &mut stack)
    }

    fn expand_rule(&self, idx: usize, cap: usize, stack: &mut Vec<usize>) -> Result<Vec<String>, GrammarTextError> {
        if stack.contains(&idx) {
            return Err(GrammarTextError::Recursive(self.rules[idx].name.clone()));
        }
        stack.push(idx);
        let out = self.expand_alts(&self.rules[idx].alternatives, cap, stack);
        stack.pop();
        out
    }

    fn expand_alts(
        &self,
        alts: &[Vec<Item>],
        cap: usize,
        stack: &mut Vec<usize>,
    ) -> Result<Vec<String>, GrammarTextError> {
        let mut out = Vec::new();
        for seq in alts {
            out.extend(self.expand_seq(seq, cap, stack)?);
            if out.len() > cap {
                return Err(GrammarTextError::TooLarge(cap));
            }
        }
        Ok(out)
    }

    fn expand_seq(&self, seq: &[Item], cap: usize, stack: &mut Vec<usize>) -> Result<Vec<String>, GrammarTextError> {
        let mut acc = vec![String::new()];
        for item in seq {
            let parts = match item {
                Item::Literal(s) => vec![s.clone()],
                Item::Ref(r) => self.expand_rule(self.index[r], cap, stack)?,
                Item::Group(alts) => self.expand_alts(alts, cap, stack)?,
            };
            if acc.len().saturating_mul(parts.len()) > cap {
                return Err(GrammarTextError::TooLarge(cap));
            }
            acc = acc.iter().flat_map(|head| parts.iter().map(move |tail| format!("{head}{tail}"))).collect();
        }
        Ok(acc)
    }

    /// Generate one string, asking `choose` to pick an alternative wherever
    /// the grammar branches. Out-of-range picks are clamped to the last
    /// alternative. Generation stops expanding after `max_len` bytes.
    pub fn generate(&self, max_len: usize, choose: &mut dyn FnMut(&Choice<'_>) -> usize) -> String {
        let mut out = String::new();
        self.gen_alts(&self.rules[0].alternatives, max_len, 0, &mut out, choose);
        out
    }

    fn gen_alts(
        &self,
        alts: &[Vec<Item>],
        max_len: usize,
        depth: usize,
        out: &mut String,
        choose: &mut dyn FnMut(&Choice<'_>) -> usize,
    ) {
        if alts.is_empty() || out.len() >= max_len || depth > 256 {
            return;
        }
        let pick = if alts.len() == 1 {
            0
        } else {
            let options = alts.iter().map(|s| self.leading_literal(s, 0)).collect();
            choose(&Choice { prefix: out, options }).min(alts.len() - 1)
        };
        for item in &alts[pick] {
            match item {
                Item::Literal(s) => out.push_str(s),
                Item::Ref(r) => self.gen_alts(&self.rules[self.index[r]].alternatives, max_len, depth + 1, out, choose),
                Item::Group(g) => self.gen_alts(g, max_len, depth + 1, out, choose),
            }
        }
    }

    /// The fixed text an alternative starts with, looking through
    /// single-alternative rule references.
    fn leading_literal(&self, seq: &[Item], depth: usize) -> String {
        let mut s = String::new();
        for item in seq {
            match item {
                Item::Literal(l) => s.push_str(l),
                Item::Ref(r) if depth < 16 => {
                    let rule = &self.rules[self.index[r]];
                    if rule.alternatives.len() != 1 {
                        break;
                    }
                    let inner = self.leading_literal(&rule.alternatives[0], depth + 1);
                    s.push_str(&inner);
                    break;
                }
                _ => break,
            }
            if !s.is_empty() {
                break;
            }
        }
        s
    }
}

struct Matcher<'g, 'i> {
    g: &'g Grammar,
    input: &'i [u8],
    memo: HashMap<(usize, usize), Vec<usize>>,
    active: HashSet<(usize, usize)>,
}

impl Matcher<'_, '_> {
    fn rule_ends(&mut self, rule: usize, pos: usize) -> Vec<usize> {
        if let Some(hit) = self.memo.get(&(rule, pos)) {
            return hit.clone();
        }
        // Left recursion: no progress possible through this call.
        if !self.active.insert((rule, pos)) {
            return Vec::new();
        }
        let alts = &self.g.rules[rule].alternatives;
        let ends = self.alts_ends(alts, pos);
        self.active.remove(&(rule, pos));
        self.memo.insert((rule, pos), ends.clone());
        ends
    }

    fn alts_ends(&mut self, alts: &[Vec<Item>], pos: usize) -> Vec<usize> {
        let mut ends = Vec::new();
        for seq in alts {
            for e in self.seq_ends(seq, pos) {
                if !ends.contains(&e) {
                    ends.push(e);
                }
            }
        }
        ends
    }

    fn seq_ends(&mut self, seq: &[Item], pos: usize) -> Vec<usize> {
        let mut frontier = vec![pos];
        for item in seq {
            let mut next = Vec::new();
            for p in frontier {
                let ends = match item {
                    Item::Literal(s) => {
                        if self.input[p..].starts_with(s.as_bytes()) {
                            vec![p + s.len()]
                        } else {
                            vec![]
                        }
                    }
                    Item::Ref(r) => {
                        let idx = self.g.index[r];
                        self.rule_ends(idx, p)
                    }
                    Item::Group(alts) => self.alts_ends(alts, p),
                };
                for e in ends {
                    if !next.contains(&e) {
                        next.push(e);
                    }
                }
            }
            if next.is_empty() {
                return next;
            }
            frontier = next;
        }
        frontier
    }
}

struct RhsParser {
    chars: Vec<char>,
    pos: usize,
}

impl RhsParser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn alternatives(&mut self) -> Result<Vec<Vec<Item>>, String> {
        let mut alts = vec![self.sequence()?];
        loop {
            self.skip_ws();
            if self.peek() == Some('|') {
                self.pos += 1;
                alts.push(self.sequence()?);
            } else {
                return Ok(alts);
            }
        }
    }

    fn sequence(&mut self) -> Result<Vec<Item>, String> {
        let mut seq = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None | Some('|') | Some(')') => break,
                Some('"') => seq.push(Item::Literal(self.literal()?)),
                Some('(') => {
                    self.pos += 1;
                    let alts = self.alternatives()?;
                    self.skip_ws();
                    if self.peek() != Some(')') {
                        return Err("unclosed `(`".into());
                    }
                    self.pos += 1;
                    seq.push(Item::Group(alts));
                }
                Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '-' => {
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                        self.pos += 1;
                    }
                    seq.push(Item::Ref(self.chars[start..self.pos].iter().collect()));
                }
                Some(c) => return Err(format!("unsupported syntax at `{c}`")),
            }
        }
        if seq.is_empty() {
            return Err("empty alternative".into());
        }
        Ok(seq)
    }

    fn literal(&mut self) -> Result<String, String> {
        self.pos += 1;
        let mut s = String::new();
        loop {
            match self.peek() {
                None => return Err("unterminated string literal".into()),
                Some('"') => {
                    self.pos += 1;
                    return Ok(s);
                }
                Some('\\') => {
                    self.pos += 1;
                    let c = match self.peek() {
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('t') => '\t',
                        Some('"') => '"',
                        Some('\\') => '\\',
                        other => return Err(format!("unsupported escape {other:?}")),
                    };
                    s.push(c);
                    self.pos += 1;
                }
                Some(c) => {
                    s.push(c);
                    self.pos += 1;
                }
            }
        }
    }
}

/// Quote `s` as a grammar terminal.
pub fn quote_terminal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
