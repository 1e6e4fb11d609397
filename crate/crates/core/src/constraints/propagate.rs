use std::collections::BTreeSet;

use super::{BoolFormula, Concat3, Constraint, Leaf, Term};
use crate::solver::{BoolStatus, Domain, Entailment, SeqId, VarId};
use crate::value::Value;

/// Raised by a propagator that wiped out a domain or falsified a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Failure;

pub(crate) type Prop = Result<(), Failure>;

/// The view of the store a propagator works against. Every mutation is
/// trailed and schedules the watchers of the touched variable.
pub(crate) trait PropagationContext {
    fn domain(&self, v: VarId) -> &Domain;
    fn status(&self, v: VarId) -> BoolStatus;
    fn seq(&self, s: SeqId) -> Option<&[Value]>;
    fn retain(&mut self, v: VarId, keep: &dyn Fn(&Value) -> bool) -> Result<bool, Failure>;
    fn fix_bool(&mut self, v: VarId, b: bool) -> Result<bool, Failure>;
    fn fix_seq(&mut self, s: SeqId, values: Vec<Value>) -> Result<bool, Failure>;
}

fn term_values(ctx: &dyn PropagationContext, t: &Term) -> BTreeSet<Value> {
    match t {
        Term::Var(v) => ctx.domain(*v).values().clone(),
        Term::Const(c) => BTreeSet::from([c.clone()]),
    }
}

fn term_single(ctx: &dyn PropagationContext, t: &Term) -> Option<Value> {
    match t {
        Term::Var(v) => ctx.domain(*v).single().cloned(),
        Term::Const(c) => Some(c.clone()),
    }
}

/// Runs the propagator of a non-structural constraint once.
pub(crate) fn run(c: &Constraint, ctx: &mut dyn PropagationContext) -> Prop {
    match c {
        Constraint::Eq(a, b) => eq(ctx, a, b),
        Constraint::Neq(a, b) => neq(ctx, a, b),
        Constraint::AllDistinct(ts) => all_distinct(ctx, ts),
        Constraint::Element(v, allowed) => {
            ctx.retain(*v, &|x| allowed.contains(x))?;
            Ok(())
        }
        Constraint::Bool(f) => boolean(ctx, f),
        Constraint::Concat3(c) => concat3(ctx, c),
        Constraint::Size(s, n) => {
            if let Some(len) = ctx.seq(*s).map(|xs| xs.len() as i64) {
                ctx.retain(*n, &|x| x.as_int() == Some(len))?;
            }
            Ok(())
        }
        Constraint::Structural(_) => unreachable!("structural constraints are propagated by the store"),
    }
}

fn eq(ctx: &mut dyn PropagationContext, a: &Term, b: &Term) -> Prop {
    match (a, b) {
        (Term::Const(x), Term::Const(y)) => {
            if x == y {
                Ok(())
            } else {
                Err(Failure)
            }
        }
        (Term::Var(v), Term::Const(c)) | (Term::Const(c), Term::Var(v)) => {
            ctx.retain(*v, &|x| x == c)?;
            Ok(())
        }
        (Term::Var(u), Term::Var(v)) => {
            let common: BTreeSet<Value> = ctx
                .domain(*u)
                .values()
                .intersection(ctx.domain(*v).values())
                .cloned()
                .collect();
            ctx.retain(*u, &|x| common.contains(x))?;
            ctx.retain(*v, &|x| common.contains(x))?;
            Ok(())
        }
    }
}

fn neq(ctx: &mut dyn PropagationContext, a: &Term, b: &Term) -> Prop {
    if let (Term::Var(u), Term::Var(v)) = (a, b) {
        if u == v {
            return Err(Failure);
        }
    }
    if let Some(x) = term_single(ctx, a) {
        if let Term::Var(v) = b {
            ctx.retain(*v, &|y| *y != x)?;
        } else if term_single(ctx, b).as_ref() == Some(&x) {
            return Err(Failure);
        }
    }
    if let (Some(y), Term::Var(u)) = (term_single(ctx, b), a) {
        ctx.retain(*u, &|x| *x != y)?;
    }
    Ok(())
}

fn all_distinct(ctx: &mut dyn PropagationContext, ts: &[Term]) -> Prop {
    for (i, t) in ts.iter().enumerate() {
        if let Term::Var(v) = t {
            if ts[i + 1..].iter().any(|u| u.var() == Some(*v)) {
                return Err(Failure);
            }
        }
    }
    loop {
        let mut changed = false;
        let singles: Vec<Option<Value>> = ts.iter().map(|t| term_single(ctx, t)).collect();
        for (i, si) in singles.iter().enumerate() {
            let Some(x) = si else { continue };
            for (j, t) in ts.iter().enumerate() {
                if i == j {
                    continue;
                }
                match t {
                    Term::Var(v) => changed |= ctx.retain(*v, &|y| y != x)?,
                    Term::Const(c) if c == x => return Err(Failure),
                    Term::Const(_) => {}
                }
            }
        }
        if !changed {
            break;
        }
    }
    let union: BTreeSet<Value> = ts.iter().flat_map(|t| term_values(ctx, t)).collect();
    if union.len() < ts.len() {
        return Err(Failure);
    }
    Ok(())
}

pub(crate) fn leaf_status(ctx: &dyn PropagationContext, leaf: &Leaf) -> BoolStatus {
    match leaf {
        Leaf::Var(v) => ctx.status(*v),
        Leaf::Is(v, a) => {
            let d = ctx.domain(*v);
            if !d.contains(a) {
                BoolStatus::False
            } else if d.len() == 1 {
                BoolStatus::True
            } else {
                BoolStatus::Unknown
            }
        }
    }
}

fn force_leaf(ctx: &mut dyn PropagationContext, leaf: &Leaf, b: bool) -> Result<bool, Failure> {
    match leaf {
        Leaf::Var(v) => ctx.fix_bool(*v, b),
        Leaf::Is(v, a) => {
            if b {
                ctx.retain(*v, &|x| x == a)
            } else {
                ctx.retain(*v, &|x| x != a)
            }
        }
    }
}

fn boolean(ctx: &mut dyn PropagationContext, f: &BoolFormula) -> Prop {
    let leaves = f.leaves();
    loop {
        let current = |l: &Leaf| leaf_status(ctx, l);
        match f.eval(&current) {
            BoolStatus::False => return Err(Failure),
            BoolStatus::True => return Ok(()),
            BoolStatus::Unknown => {}
        }
        let mut forced: Option<(Leaf, bool)> = None;
        for leaf in &leaves {
            if leaf_status(ctx, leaf) != BoolStatus::Unknown {
                continue;
            }
            let with = |b: bool| {
                let probe = |l: &Leaf| {
                    if l == leaf {
                        BoolStatus::from_bool(b)
                    } else {
                        leaf_status(ctx, l)
                    }
                };
                f.eval(&probe)
            };
            let if_true = with(true);
            let if_false = with(false);
            match (if_true, if_false) {
                (BoolStatus::False, BoolStatus::False) => return Err(Failure),
                (BoolStatus::False, _) => forced = Some((leaf.clone(), false)),
                (_, BoolStatus::False) => forced = Some((leaf.clone(), true)),
                _ => continue,
            }
            break;
        }
        match forced {
            Some((leaf, b)) => {
                force_leaf(ctx, &leaf, b)?;
            }
            None => return Ok(()),
        }
    }
}

/// Size triples `(a1, b1, c1)` admitted by the current domains and by any
/// parts that are already ground.
fn concat_supports(ctx: &dyn PropagationContext, c: &Concat3) -> Vec<[i64; 3]> {
    let n = c.whole.len() as i64;
    let sizes: Vec<Vec<i64>> = c
        .sizes
        .iter()
        .map(|v| ctx.domain(*v).values().iter().filter_map(Value::as_int).collect())
        .collect();
    let parts: Vec<Option<&[Value]>> = c.parts.iter().map(|s| ctx.seq(*s)).collect();
    let mut out = Vec::new();
    for &a1 in &sizes[0] {
        if a1 < 0 || a1 > n {
            continue;
        }
        for &b1 in &sizes[1] {
            if b1 < 0 || a1 + b1 > n {
                continue;
            }
            let c1 = n - a1 - b1;
            if !sizes[2].contains(&c1) {
                continue;
            }
            let (a1u, b1u) = (a1 as usize, b1 as usize);
            let slices = [&c.whole[..a1u], &c.whole[a1u..a1u + b1u], &c.whole[a1u + b1u..]];
            if parts.iter().zip(slices.iter()).all(|(p, s)| p.is_none_or(|p| p == *s)) {
                out.push([a1, b1, c1]);
            }
        }
    }
    out
}

fn concat3(ctx: &mut dyn PropagationContext, c: &Concat3) -> Prop {
    let supports = concat_supports(ctx, c);
    if supports.is_empty() {
        return Err(Failure);
    }
    for (k, size) in c.sizes.iter().enumerate() {
        let keep: BTreeSet<i64> = supports.iter().map(|t| t[k]).collect();
        ctx.retain(*size, &|x| x.as_int().is_some_and(|n| keep.contains(&n)))?;
    }
    if supports.len() == 1 {
        let [a1, b1, _] = supports[0];
        let (a1, b1) = (a1 as usize, b1 as usize);
        ctx.fix_seq(c.parts[0], c.whole[..a1].to_vec())?;
        ctx.fix_seq(c.parts[1], c.whole[a1..a1 + b1].to_vec())?;
        ctx.fix_seq(c.parts[2], c.whole[a1 + b1..].to_vec())?;
    }
    Ok(())
}

/// Local entailment of a non-structural constraint against the current
/// domains: every (respectively no) combination of values satisfies it.
pub(crate) fn entailment(c: &Constraint, ctx: &dyn PropagationContext) -> Entailment {
    match c {
        Constraint::Eq(a, b) => {
            let (x, y) = (term_values(ctx, a), term_values(ctx, b));
            if x.is_disjoint(&y) {
                Entailment::Disentailed
            } else if x.len() == 1 && x == y {
                Entailment::Entailed
            } else {
                Entailment::Unknown
            }
        }
        Constraint::Neq(a, b) => {
            if a.var().is_some() && a.var() == b.var() {
                return Entailment::Disentailed;
            }
            let (x, y) = (term_values(ctx, a), term_values(ctx, b));
            if x.is_disjoint(&y) {
                Entailment::Entailed
            } else if x.len() == 1 && x == y {
                Entailment::Disentailed
            } else {
                Entailment::Unknown
            }
        }
        Constraint::AllDistinct(ts) => {
            let mut all = true;
            for i in 0..ts.len() {
                for j in i + 1..ts.len() {
                    match entailment(&Constraint::Neq(ts[i].clone(), ts[j].clone()), ctx) {
                        Entailment::Disentailed => return Entailment::Disentailed,
                        Entailment::Unknown => all = false,
                        Entailment::Entailed => {}
                    }
                }
            }
            let union: BTreeSet<Value> = ts.iter().flat_map(|t| term_values(ctx, t)).collect();
            if union.len() < ts.len() {
                Entailment::Disentailed
            } else if all {
                Entailment::Entailed
            } else {
                Entailment::Unknown
            }
        }
        Constraint::Element(v, allowed) => {
            let d = ctx.domain(*v).values();
            if d.iter().all(|x| allowed.contains(x)) {
                Entailment::Entailed
            } else if d.iter().all(|x| !allowed.contains(x)) {
                Entailment::Disentailed
            } else {
                Entailment::Unknown
            }
        }
        Constraint::Bool(f) => {
            let status = |l: &Leaf| leaf_status(ctx, l);
            match f.eval(&status) {
                BoolStatus::True => Entailment::Entailed,
                BoolStatus::False => Entailment::Disentailed,
                BoolStatus::Unknown => Entailment::Unknown,
            }
        }
        Constraint::Concat3(k) => {
            let supports = concat_supports(ctx, k);
            let ground = k.parts.iter().all(|s| ctx.seq(*s).is_some());
            let sized = k.sizes.iter().all(|v| ctx.domain(*v).len() == 1);
            if supports.is_empty() {
                Entailment::Disentailed
            } else if ground && sized {
                Entailment::Entailed
            } else {
                Entailment::Unknown
            }
        }
        Constraint::Size(s, n) => match ctx.seq(*s) {
            Some(xs) => {
                let len = Value::from(xs.len());
                let d = ctx.domain(*n);
                if !d.contains(&len) {
                    Entailment::Disentailed
                } else if d.len() == 1 {
                    Entailment::Entailed
                } else {
                    Entailment::Unknown
                }
            }
            None => Entailment::Unknown,
        },
        Constraint::Structural(_) => Entailment::Unknown,
    }
}
