//! Principle layer over signs: local-tree well-formedness, the DTRS
//! schema with unicity, boolean subcategorization, FCRs, the Head Feature
//! Principle and the Valency Principle.
//!
//! A sign is an [`IndexedFS`] laid out as
//! `[label:C, synsem:[loc:[cat:[head:H, subj:<..>, comps:<..>]]], dtrs:[..]]`.
//! Valency list members are nodes `[label:C]`. The lexicon's AVM for an
//! entry becomes the HEAD value `H`, which is also the scope of its FCRs.

mod pipeline;
mod principles;
#[cfg(test)]
mod tests;

use thiserror::Error;

use crate::cfg::CfgError;
use crate::fs::{FsError, IndexedFS};
use crate::grammar::{CatId, GrammarError};
use crate::solver::{StoreError, VarId};

pub use pipeline::{combine, lexical_choices, lexical_sign, parse_hpsg, parse_hpsg_with, Analysis, HpsgResult};
pub use principles::{
    apply_hfp, apply_valency, check_local_tree, compile_fcr, head_daughter, hfp_pattern, post_subcat, post_unicity,
    roles, status_handle, DtrsSchema, Hfp, HfpPending, LocalTree, Roles, TreeDaughter, Violation, WfVars,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HpsgError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Fs(#[from] FsError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("{0} list over-saturated")]
    OverSaturated(String),
    #[error("inconsistent: {0}")]
    Inconsistent(String),
    #[error("local tree rejected: {0:?}")]
    Rejected(Vec<Violation>),
}

/// One constituent occurrence during parsing.
#[derive(Clone, Debug)]
pub struct Sign {
    pub id: u32,
    pub cat: CatId,
    pub fs: IndexedFS,
    pub wf: VarId,
    pub subj: Vec<CatId>,
    pub comps: Vec<CatId>,
    /// Schema selected by a lexical head, as an index into its frame.
    pub schema: Option<usize>,
    pub lexical: bool,
    /// Well-formedness variables of this constituent and everything below
    /// it, in pre-order.
    pub wf_log: Vec<(CatId, VarId)>,
}

impl Sign {
    pub fn is_saturated(&self) -> bool {
        self.subj.is_empty() && self.comps.is_empty()
    }

    pub fn as_daughter(&self) -> TreeDaughter {
        TreeDaughter {
            cat: self.cat,
            sign: self.id,
            subj: self.subj.clone(),
            comps: self.comps.clone(),
        }
    }
}
