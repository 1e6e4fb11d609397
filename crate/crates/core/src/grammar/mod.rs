//! Grammar and lexicon: phrase-structure rules, LP order, constituent
//! frames, projections, lexical entries and FCRs.
//!
//! Categories are interned; a [`CatId`] indexes [`Grammar::categories`].

mod fcr;
mod loader;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use fcr::{Fcr, FcrExpr};
pub use loader::load_grammar;

use crate::fs::Avm;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CatId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Level {
    Lexical,
    Phrasal,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PsRule {
    pub lhs: CatId,
    pub rhs: Vec<CatId>,
    /// Cleared by `{no-unicity}`, e.g. for coordination.
    pub unicity: bool,
    pub line: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LpPair {
    pub before: CatId,
    pub after: CatId,
}

/// Constituent frame of a phrasal category: `M = C ∪ O`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Frame {
    pub phrase: CatId,
    pub m: BTreeSet<CatId>,
    pub c: BTreeSet<CatId>,
    pub o: BTreeSet<CatId>,
    pub head: CatId,
    pub schemata: Vec<BTreeSet<CatId>>,
    pub line: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LexEntry {
    pub form: String,
    pub category: CatId,
    pub avm: Avm,
    pub subj: Vec<CatId>,
    pub comps: Vec<CatId>,
    /// Index into the schemata of the frame this entry heads.
    pub schema: Option<usize>,
    pub line: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FcrDecl {
    pub fcr: Fcr,
    pub line: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct LoadError {
    pub line: usize,
    pub msg: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("unknown category {0}")]
    UnknownCategory(String),
    #[error("{0} is not a phrasal category")]
    NotPhrasal(String),
    #[error("unknown word {0}")]
    UnknownWord(String),
}

#[derive(Clone, Debug, Default)]
pub struct Grammar {
    names: Vec<String>,
    ids: HashMap<String, CatId>,
    pub rules: Vec<PsRule>,
    pub lp: Vec<LpPair>,
    pub frames: BTreeMap<CatId, Frame>,
    pub proj: BTreeMap<CatId, CatId>,
    pub lexicon: Vec<LexEntry>,
    pub fcrs: Vec<FcrDecl>,
    pub features: BTreeSet<String>,
    pub start: Option<CatId>,
    by_rhs: HashMap<Vec<CatId>, Vec<usize>>,
    lp_set: BTreeSet<(CatId, CatId)>,
    max_rhs: usize,
}

impl Grammar {
    pub fn categories(&self) -> impl Iterator<Item = (CatId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (CatId(i as u32), n.as_str()))
    }

    pub fn num_categories(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, c: CatId) -> &str {
        &self.names[c.0 as usize]
    }

    pub fn cat(&self, name: &str) -> Option<CatId> {
        self.ids.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<CatId, GrammarError> {
        self.cat(name)
            .ok_or_else(|| GrammarError::UnknownCategory(name.to_string()))
    }

    pub(crate) fn intern(&mut self, name: &str) -> CatId {
        if let Some(c) = self.ids.get(name) {
            return *c;
        }
        let c = CatId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), c);
        c
    }

    /// Start symbol; `S` unless the file says otherwise.
    pub fn start(&self) -> Option<CatId> {
        self.start.or_else(|| self.cat("S"))
    }

    pub fn level(&self, c: CatId) -> Level {
        if self.frames.contains_key(&c) || self.rules.iter().any(|r| r.lhs == c) {
            Level::Phrasal
        } else {
            Level::Lexical
        }
    }

    pub(crate) fn index(&mut self) {
        self.by_rhs.clear();
        for (i, r) in self.rules.iter().enumerate() {
            self.by_rhs.entry(r.rhs.clone()).or_default().push(i);
        }
        self.lp_set = self.lp.iter().map(|p| (p.before, p.after)).collect();
        self.max_rhs = self.rules.iter().map(|r| r.rhs.len()).max().unwrap_or(0);
    }

    pub fn max_rhs_len(&self) -> usize {
        self.max_rhs
    }

    /// Rules whose right-hand side is exactly `window`, in file order.
    pub fn rules_matching(&self, window: &[CatId]) -> &[usize] {
        self.by_rhs.get(window).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Rhs members of the rules for `r` together with its frame's `M`.
    pub fn legal_daughters(&self, r: CatId) -> Result<BTreeSet<CatId>, GrammarError> {
        let mut out: BTreeSet<CatId> = self
            .rules
            .iter()
            .filter(|rule| rule.lhs == r)
            .flat_map(|rule| rule.rhs.iter().copied())
            .collect();
        let framed = self.frames.get(&r);
        if let Some(f) = framed {
            out.extend(f.m.iter().copied());
        }
        if out.is_empty() && framed.is_none() {
            return Err(GrammarError::NotPhrasal(self.name(r).to_string()));
        }
        Ok(out)
    }

    /// False only when a declared pair puts `y` before `x`.
    pub fn lp_ok(&self, x: CatId, y: CatId) -> bool {
        !self.lp_set.contains(&(y, x))
    }

    pub fn frame(&self, phrase: CatId) -> Option<&Frame> {
        self.frames.get(&phrase)
    }

    pub fn projection(&self, c: CatId) -> Option<CatId> {
        self.proj.get(&c).copied()
    }

    pub fn entries<'a>(&'a self, form: &'a str) -> impl Iterator<Item = &'a LexEntry> + 'a {
        self.lexicon.iter().filter(move |e| e.form == form)
    }

    pub fn entries_for_category(&self, c: CatId) -> impl Iterator<Item = &LexEntry> {
        self.lexicon.iter().filter(move |e| e.category == c)
    }

    /// The frame headed by lexical category `c`, if any.
    pub fn frame_headed_by(&self, c: CatId) -> Option<&Frame> {
        match self.projection(c).and_then(|p| self.frames.get(&p)) {
            Some(f) if f.head == c => Some(f),
            _ => self.frames.values().find(|f| f.head == c),
        }
    }

    pub fn show_seq(&self, cats: &[CatId]) -> String {
        let names: Vec<&str> = cats.iter().map(|c| self.name(*c)).collect();
        format!("<{}>", names.join(","))
    }

    /// Parses a whitespace-separated category string.
    pub fn categories_of(&self, text: &str) -> Result<Vec<CatId>, GrammarError> {
        text.split_whitespace().map(|t| self.require(t)).collect()
    }
}

impl fmt::Display for PsRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} -> {:?}", self.lhs, self.rhs)
    }
}
