//! Finite-domain and boolean constraint store.
//!
//! Variables carry a [`Domain`] with a completeness mark; a constraint is only
//! propagated once every domain it mentions is complete. Structural relations
//! such as `daughter(Y, x)` additionally wait for the support sets of every
//! parent value, following
//!
//! ```text
//! complete(dom(u)) <-> complete(dom(v)) & forall x in dom(v). complete(c(x))
//! ```
//!
//! Each evaluation of one `complete(..)` predicate is counted in
//! [`Counters::completeness_tests`].

mod domain;
mod store;

pub use domain::{BoolStatus, Domain};
pub use store::{
    kleene, AskId, Consistency, Counters, Entailment, Resolvability, SeqId, Snapshot, Store, StoreError, VarId,
};
