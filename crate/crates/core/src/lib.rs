//! Constraint-based parsing toolkit.
//!
//! * [`solver`]: finite-domain/boolean store with Ask & Tell.
//! * [`constraints`]: the constraint vocabulary and its text syntax.
//! * [`fs`]: indexed feature structures.
//! * [`grammar`]: grammar and lexicon model plus the file loader.
//! * [`cfg`]: the bottom-up window parser.
//! * [`hpsg`]: principle layer over signs.

pub mod cfg;
pub mod cli;
pub mod constraints;
pub mod fs;
pub mod grammar;
pub mod hpsg;
pub mod solver;
pub mod value;

pub use value::Value;
