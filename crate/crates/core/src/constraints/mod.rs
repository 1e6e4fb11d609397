//! The constraint vocabulary posted into a [`Store`](crate::solver::Store).
//!
//! Every constraint is an immutable value. Propagation strength per kind:
//!
//! * `Eq`/`Neq`: domain intersection and singleton removal.
//! * `AllDistinct`: pairwise disequality with singleton elimination, plus a
//!   pigeonhole check on the union of the domains.
//! * `Element`: intersection with the allowed constants.
//! * `Bool`: a leaf is forced whenever one of its truth values makes the
//!   formula Kleene-false.
//! * `Concat3`: support-based filtering of the three sizes; ground sizes
//!   slice the whole sequence into the three parts.
//! * `Structural`: relations over the model description (the daughter
//!   relation) gated by resolvability; see [`crate::solver`].

mod formula;
pub(crate) mod propagate;
pub mod syntax;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use formula::{BoolFormula, Leaf};

use crate::solver::{SeqId, VarId};
use crate::value::Value;

/// A variable or a constant argument.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Term {
    Var(VarId),
    Const(Value),
}

impl Term {
    pub fn var(&self) -> Option<VarId> {
        match self {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        }
    }
}

impl From<VarId> for Term {
    fn from(v: VarId) -> Self {
        Term::Var(v)
    }
}

impl From<Value> for Term {
    fn from(v: Value) -> Self {
        Term::Const(v)
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Self {
        Term::Const(Value::Int(v))
    }
}

impl From<&str> for Term {
    fn from(v: &str) -> Self {
        Term::Const(Value::sym(v))
    }
}

/// `whole = parts[0] . parts[1] . parts[2]` with `|parts[i]| = sizes[i]`.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Concat3 {
    pub parts: [SeqId; 3],
    pub whole: Vec<Value>,
    pub sizes: [VarId; 3],
}

/// Per-tuple support sets used by [`Relation::Table`]: the set of target
/// values related to each tuple of parent values.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SupportTable {
    pub name: String,
    pub supports: BTreeMap<Vec<Value>, VarId>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Relation {
    /// `target` is an attached daughter of `parent`; the support set of a
    /// node is its daughter set in the store's tree model.
    Daughter,
    Table(Arc<SupportTable>),
}

/// A relation whose resolvability depends on the model description.
///
/// The target's complete partial domain is the union of the support sets
/// of all parent tuples, and it only exists once the parent domains and
/// every one of those support sets are complete.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Structural {
    pub relation: Relation,
    pub target: VarId,
    pub parents: Vec<Term>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Constraint {
    Eq(Term, Term),
    Neq(Term, Term),
    AllDistinct(Vec<Term>),
    Element(VarId, Vec<Value>),
    Bool(BoolFormula),
    Concat3(Concat3),
    Size(SeqId, VarId),
    Structural(Structural),
}

impl Constraint {
    pub fn eq(a: impl Into<Term>, b: impl Into<Term>) -> Constraint {
        Constraint::Eq(a.into(), b.into())
    }

    pub fn neq(a: impl Into<Term>, b: impl Into<Term>) -> Constraint {
        Constraint::Neq(a.into(), b.into())
    }

    pub fn equals(v: VarId, value: impl Into<Value>) -> Constraint {
        Constraint::Eq(Term::Var(v), Term::Const(value.into()))
    }

    pub fn fix_bool(v: VarId, b: bool) -> Constraint {
        if b {
            Constraint::Bool(BoolFormula::Var(v))
        } else {
            Constraint::Bool(BoolFormula::not(BoolFormula::Var(v)))
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        let mut push = |v: VarId| {
            if !out.contains(&v) {
                out.push(v)
            }
        };
        match self {
            Constraint::Eq(a, b) | Constraint::Neq(a, b) => a.var().into_iter().chain(b.var()).for_each(&mut push),
            Constraint::AllDistinct(ts) => ts.iter().filter_map(Term::var).for_each(&mut push),
            Constraint::Element(v, _) => push(*v),
            Constraint::Bool(f) => f.vars().into_iter().for_each(&mut push),
            Constraint::Concat3(c) => c.sizes.iter().copied().for_each(&mut push),
            Constraint::Size(_, n) => push(*n),
            Constraint::Structural(s) => {
                push(s.target);
                s.parents.iter().filter_map(Term::var).for_each(&mut push);
            }
        }
        out
    }

    pub fn seqs(&self) -> Vec<SeqId> {
        match self {
            Constraint::Concat3(c) => c.parts.to_vec(),
            Constraint::Size(s, _) => vec![*s],
            _ => Vec::new(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Constraint::Eq(..) => "eq",
            Constraint::Neq(..) => "neq",
            Constraint::AllDistinct(_) => "all_distinct",
            Constraint::Element(..) => "element",
            Constraint::Bool(_) => "bool_formula",
            Constraint::Concat3(_) => "concat3",
            Constraint::Size(..) => "size",
            Constraint::Structural(_) => "daughter",
        }
    }
}

/// Pairwise distinctness of the given terms.
pub fn all_distinct(vs: impl IntoIterator<Item = impl Into<Term>>) -> Constraint {
    Constraint::AllDistinct(vs.into_iter().map(Into::into).collect())
}

/// `v` takes one of the `allowed` constants.
pub fn element(v: VarId, allowed: impl IntoIterator<Item = impl Into<Value>>) -> Constraint {
    Constraint::Element(v, allowed.into_iter().map(Into::into).collect())
}

pub fn concat3(parts: [SeqId; 3], whole: Vec<Value>, sizes: [VarId; 3]) -> Constraint {
    Constraint::Concat3(Concat3 { parts, whole, sizes })
}

pub fn size(seq: SeqId, n: VarId) -> Constraint {
    Constraint::Size(seq, n)
}

/// Posts a boolean description, normalizing `f = true` forms first.
pub fn bool_post(f: BoolFormula) -> Constraint {
    Constraint::Bool(f.normalized())
}

/// `y` is a daughter of the node `x` in the store's tree model.
pub fn daughter(y: VarId, x: impl Into<Term>) -> Constraint {
    Constraint::Structural(Structural {
        relation: Relation::Daughter,
        target: y,
        parents: vec![x.into()],
    })
}

/// A structural relation with caller-provided support sets.
pub fn structural(table: Arc<SupportTable>, target: VarId, parents: Vec<Term>) -> Constraint {
    Constraint::Structural(Structural {
        relation: Relation::Table(table),
        target,
        parents,
    })
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
        match self {
            Constraint::Eq(a, b) => write!(f, "{a} = {b}"),
            Constraint::Neq(a, b) => write!(f, "{a} != {b}"),
            Constraint::AllDistinct(ts) => {
                f.write_str("alldistinct(")?;
                list(f, ts)?;
                f.write_str(")")
            }
            Constraint::Element(v, xs) => {
                write!(f, "element({v},[")?;
                list(f, xs)?;
                f.write_str("])")
            }
            Constraint::Bool(b) => write!(f, "{b}"),
            Constraint::Concat3(c) => {
                write!(f, "{}.{}.{}::<", c.parts[0], c.parts[1], c.parts[2])?;
                list(f, &c.whole)?;
                write!(f, ">, sizes({},{},{})", c.sizes[0], c.sizes[1], c.sizes[2])
            }
            Constraint::Size(s, n) => write!(f, "{s}::{n}"),
            Constraint::Structural(s) => {
                let name = match &s.relation {
                    Relation::Daughter => "daughter",
                    Relation::Table(t) => t.name.as_str(),
                };
                write!(f, "{name}({}", s.target)?;
                for p in &s.parents {
                    write!(f, ",{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}
