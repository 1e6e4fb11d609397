//! Indexed feature structures.
//!
//! An [`IndexedFS`] is a flat list of groups; group `k` (1-based) holds the
//! cells owned by node `k`. A cell is a 4-tuple of feature name, owner,
//! value and status, where a complex value is the index of another group
//! and the status is a boolean variable of the owning [`Store`].
//!
//! [`Store`]: crate::solver::Store

mod avm;
mod indexed;
mod ops;

use thiserror::Error;

pub use avm::{is_list_feature, normalize_feature, Avm, AvmValue, Feature, LIST_FEATURES};
pub use indexed::{Cell, CellValue, IndexedFS, NodeIndex, Path};
pub use ops::{Bindings, NewCell, PTerm, PatternCell};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FsError {
    #[error("avm syntax error at column {col}: {msg}")]
    Syntax { col: usize, msg: String },
    #[error("cyclic feature structure")]
    Cyclic,
    #[error("feature {0} appears twice in one node")]
    DuplicateFeature(String),
    #[error("tag #{0} declared twice with different contents")]
    DuplicateTag(u32),
    #[error("feature {0} cannot hold a list")]
    NotListValued(String),
    #[error("list elements must be nodes")]
    AtomInList,
    #[error("unification clash on {0}")]
    Clash(String),
    #[error("status clash on {0}")]
    StatusClash(String),
    #[error("path {0} does not exist")]
    MissingPath(String),
    #[error("node {0} does not exist")]
    MissingNode(usize),
    #[error(transparent)]
    Store(#[from] crate::solver::StoreError),
}
