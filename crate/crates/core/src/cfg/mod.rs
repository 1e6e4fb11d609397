//! Bottom-up window parser over category sequences.
//!
//! The working sequence is split as `a.b.c` with `|a|` enumerated upwards
//! from 0 and `|b|` upwards from 1; when `b` is the right-hand side of a
//! rule it is replaced by the rule's lhs and the search recurses. Every
//! path reaching the start symbol yields one [`Derivation`].

mod oracle;
mod search;
#[cfg(test)]
mod tests;

use std::fmt;

use thiserror::Error;

use crate::grammar::{CatId, Grammar};
use crate::solver::Counters;

pub use oracle::{oracle_parse, OracleResult, ORACLE_MAX_LEN};
pub use search::{parse, parse_with, NoopReducer, Reducer};

/// One reduction: `rhs` found at `pos` of the working sequence and replaced
/// by `lhs`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Step {
    pub pos: usize,
    pub lhs: CatId,
    pub rhs: Vec<CatId>,
}

/// Reductions in the order they were applied.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Derivation {
    pub steps: Vec<Step>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Strategy {
    /// Window sizes live in the store and are pruned before any rule lookup.
    #[default]
    Active,
    /// Every window is generated and then tested against the rules.
    Gentest,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "active" => Ok(Strategy::Active),
            "gentest" => Ok(Strategy::Gentest),
            _ => Err(format!("unknown strategy {s}")),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    pub strategy: Strategy,
    /// Stop after this many derivations.
    pub limit: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ParseStats {
    pub windows_tried: u64,
    pub reductions_applied: u64,
    pub backtracks: u64,
    pub node_expansions: u64,
    pub counters: Counters,
}

#[derive(Clone, Debug, Default)]
pub struct ParseResult {
    pub derivations: Vec<Derivation>,
    pub stats: ParseStats,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CfgError {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown category id {0}")]
    UnknownCategory(u32),
    #[error("input of length {0} exceeds the oracle limit of {ORACLE_MAX_LEN}")]
    TooLong(usize),
    #[error("step {step} does not replay: {msg}")]
    BadDerivation { step: usize, msg: String },
}

/// Constituent tree rebuilt from a derivation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Tree {
    pub cat: CatId,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(cat: CatId) -> Tree {
        Tree {
            cat,
            children: Vec::new(),
        }
    }

    pub fn leaves(&self) -> Vec<CatId> {
        if self.children.is_empty() {
            return vec![self.cat];
        }
        self.children.iter().flat_map(Tree::leaves).collect()
    }

    pub fn show(&self, g: &Grammar) -> String {
        if self.children.is_empty() {
            return g.name(self.cat).to_string();
        }
        let kids: Vec<String> = self.children.iter().map(|c| c.show(g)).collect();
        format!("[{} {}]", g.name(self.cat), kids.join(" "))
    }
}

impl Derivation {
    /// Applies the steps to `input`, checking each against the sequence.
    pub fn replay(&self, input: &[CatId]) -> Result<Vec<CatId>, CfgError> {
        let mut cur = input.to_vec();
        for (i, s) in self.steps.iter().enumerate() {
            let end = s.pos + s.rhs.len();
            if end > cur.len() || cur[s.pos..end] != s.rhs[..] {
                return Err(CfgError::BadDerivation {
                    step: i,
                    msg: format!("rhs not found at position {}", s.pos),
                });
            }
            cur.splice(s.pos..end, [s.lhs]);
        }
        Ok(cur)
    }

    /// `<<NP>, <Det,Nm>, ..., <S>, <NP,VP>>`
    pub fn show(&self, g: &Grammar) -> String {
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|s| format!("{}, {}", g.show_seq(&[s.lhs]), g.show_seq(&s.rhs)))
            .collect();
        format!("<{}>", parts.join(", "))
    }
}

pub fn derivations_to_tree(d: &Derivation, input: &[CatId]) -> Result<Tree, CfgError> {
    let mut nodes: Vec<Tree> = input.iter().map(|c| Tree::leaf(*c)).collect();
    for (i, s) in d.steps.iter().enumerate() {
        let end = s.pos + s.rhs.len();
        let ok = end <= nodes.len() && nodes[s.pos..end].iter().map(|t| t.cat).eq(s.rhs.iter().copied());
        if !ok {
            return Err(CfgError::BadDerivation {
                step: i,
                msg: format!("rhs not found at position {}", s.pos),
            });
        }
        let children: Vec<Tree> = nodes.drain(s.pos..end).collect();
        nodes.insert(s.pos, Tree { cat: s.lhs, children });
    }
    if nodes.len() != 1 {
        return Err(CfgError::BadDerivation {
            step: d.steps.len(),
            msg: format!("{} constituents left", nodes.len()),
        });
    }
    Ok(nodes.pop().unwrap())
}

/// Keeps the first derivation of every distinct tree.
pub fn dedupe_trees(ds: Vec<Derivation>, input: &[CatId]) -> Vec<Derivation> {
    let mut seen = std::collections::HashSet::new();
    ds.into_iter()
        .filter(|d| derivations_to_tree(d, input).is_ok_and(|t| seen.insert(t)))
        .collect()
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}<-{:?}", self.lhs.0, self.pos, self.rhs)
    }
}

fn check_input(input: &[CatId], g: &Grammar) -> Result<(), CfgError> {
    if input.is_empty() {
        return Err(CfgError::EmptyInput);
    }
    match input.iter().find(|c| c.0 as usize >= g.num_categories()) {
        Some(c) => Err(CfgError::UnknownCategory(c.0)),
        None => Ok(()),
    }
}
