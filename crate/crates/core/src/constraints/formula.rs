use std::fmt;

use crate::solver::{BoolStatus, VarId};
use crate::value::Value;

/// Boolean description over store variables.
///
/// `Is(v, a)` is the literal "finite-domain variable `v` takes value `a`"; it
/// is how value-conditioned feature literals such as `MAJ[V]` reach the
/// boolean layer.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum BoolFormula {
    Const(bool),
    Var(VarId),
    Is(VarId, Value),
    Not(Box<BoolFormula>),
    And(Vec<BoolFormula>),
    Or(Vec<BoolFormula>),
    Implies(Box<BoolFormula>, Box<BoolFormula>),
    Equiv(Box<BoolFormula>, Box<BoolFormula>),
}

/// A leaf whose truth can be forced by propagation.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Leaf {
    Var(VarId),
    Is(VarId, Value),
}

impl BoolFormula {
    pub fn var(v: VarId) -> BoolFormula {
        BoolFormula::Var(v)
    }

    pub fn is(v: VarId, value: impl Into<Value>) -> BoolFormula {
        BoolFormula::Is(v, value.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: BoolFormula) -> BoolFormula {
        BoolFormula::Not(Box::new(f))
    }

    pub fn and(fs: impl IntoIterator<Item = BoolFormula>) -> BoolFormula {
        BoolFormula::And(fs.into_iter().collect())
    }

    pub fn or(fs: impl IntoIterator<Item = BoolFormula>) -> BoolFormula {
        BoolFormula::Or(fs.into_iter().collect())
    }

    pub fn implies(a: BoolFormula, b: BoolFormula) -> BoolFormula {
        BoolFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn equiv(a: BoolFormula, b: BoolFormula) -> BoolFormula {
        BoolFormula::Equiv(Box::new(a), Box::new(b))
    }

    /// Rewrites `f = true` to `f` and `f = false` to `not f`, recursively
    /// flattening nested conjunctions so `Det & Adj = true` becomes a plain
    /// conjunction of literals.
    pub fn normalized(self) -> BoolFormula {
        match self {
            BoolFormula::Equiv(a, b) => match (*a, *b) {
                (f, BoolFormula::Const(true)) | (BoolFormula::Const(true), f) => f.normalized(),
                (f, BoolFormula::Const(false)) | (BoolFormula::Const(false), f) => BoolFormula::not(f.normalized()),
                (a, b) => BoolFormula::equiv(a.normalized(), b.normalized()),
            },
            BoolFormula::And(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for f in fs {
                    match f.normalized() {
                        BoolFormula::And(inner) => out.extend(inner),
                        g => out.push(g),
                    }
                }
                BoolFormula::And(out)
            }
            BoolFormula::Or(fs) => BoolFormula::Or(fs.into_iter().map(Self::normalized).collect()),
            BoolFormula::Not(f) => BoolFormula::not(f.normalized()),
            BoolFormula::Implies(a, b) => BoolFormula::implies(a.normalized(), b.normalized()),
            f => f,
        }
    }

    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Leaf>) {
        match self {
            BoolFormula::Const(_) => {}
            BoolFormula::Var(v) => push_unique(out, Leaf::Var(*v)),
            BoolFormula::Is(v, a) => push_unique(out, Leaf::Is(*v, a.clone())),
            BoolFormula::Not(f) => f.collect_leaves(out),
            BoolFormula::And(fs) | BoolFormula::Or(fs) => {
                for f in fs {
                    f.collect_leaves(out);
                }
            }
            BoolFormula::Implies(a, b) | BoolFormula::Equiv(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out: Vec<VarId> = Vec::new();
        for leaf in self.leaves() {
            let v = match leaf {
                Leaf::Var(v) | Leaf::Is(v, _) => v,
            };
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Kleene evaluation; `leaf` gives the current status of each leaf.
    pub fn eval(&self, leaf: &dyn Fn(&Leaf) -> BoolStatus) -> BoolStatus {
        match self {
            BoolFormula::Const(b) => BoolStatus::from_bool(*b),
            BoolFormula::Var(v) => leaf(&Leaf::Var(*v)),
            BoolFormula::Is(v, a) => leaf(&Leaf::Is(*v, a.clone())),
            BoolFormula::Not(f) => !f.eval(leaf),
            BoolFormula::And(fs) => fs.iter().fold(BoolStatus::True, |acc, f| acc.and(f.eval(leaf))),
            BoolFormula::Or(fs) => fs.iter().fold(BoolStatus::False, |acc, f| acc.or(f.eval(leaf))),
            BoolFormula::Implies(a, b) => a.eval(leaf).implies(b.eval(leaf)),
            BoolFormula::Equiv(a, b) => a.eval(leaf).equiv(b.eval(leaf)),
        }
    }
}

fn push_unique(out: &mut Vec<Leaf>, leaf: Leaf) {
    if !out.contains(&leaf) {
        out.push(leaf);
    }
}

impl fmt::Display for BoolFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolFormula::Const(b) => write!(f, "{b}"),
            BoolFormula::Var(v) => write!(f, "{v}"),
            BoolFormula::Is(v, a) => write!(f, "{v}[{a}]"),
            BoolFormula::Not(g) => write!(f, "~{}", Paren(g)),
            BoolFormula::And(fs) => join(f, fs, " & "),
            BoolFormula::Or(fs) => join(f, fs, " | "),
            BoolFormula::Implies(a, b) => write!(f, "{} -> {}", Paren(a), Paren(b)),
            BoolFormula::Equiv(a, b) => write!(f, "{} <-> {}", Paren(a), Paren(b)),
        }
    }
}

struct Paren<'a>(&'a BoolFormula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            BoolFormula::Const(_) | BoolFormula::Var(_) | BoolFormula::Is(..) | BoolFormula::Not(_) => {
                write!(f, "{}", self.0)
            }
            other => write!(f, "({other})"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, fs: &[BoolFormula], sep: &str) -> fmt::Result {
    if fs.is_empty() {
        return f.write_str(if sep.contains('&') { "true" } else { "false" });
    }
    for (i, g) in fs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{}", Paren(g))?;
    }
    Ok(())
}
