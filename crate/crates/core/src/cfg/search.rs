use std::collections::{BTreeMap, BTreeSet};

use super::{check_input, CfgError, Derivation, ParseOptions, ParseResult, ParseStats, Step, Strategy};
use crate::constraints::{concat3, element, Constraint};
use crate::grammar::{CatId, Grammar};
use crate::solver::Store;
use crate::Value;

/// Hooks run by the search around each reduction.
///
/// `reduce` may veto a reduction; when it accepts, `undo` is called once the
/// branch below it has been explored. Snapshots taken inside `reduce` must be
/// restored in `undo`, keeping the store LIFO.
pub trait Reducer {
    fn reduce(&mut self, _store: &mut Store, _step: &Step, _rule: usize) -> bool {
        true
    }
    fn undo(&mut self, _store: &mut Store) {}
    /// Called when the sequence reaches the start symbol.
    fn accept(&mut self, _store: &mut Store, _d: &Derivation) -> bool {
        true
    }
}

pub struct NoopReducer;

impl Reducer for NoopReducer {}

pub fn parse(input: &[CatId], g: &Grammar, opts: &ParseOptions) -> Result<ParseResult, CfgError> {
    let mut store = Store::new();
    parse_with(input, g, opts, &mut store, &mut NoopReducer)
}

pub fn parse_with(
    input: &[CatId],
    g: &Grammar,
    opts: &ParseOptions,
    store: &mut Store,
    reducer: &mut dyn Reducer,
) -> Result<ParseResult, CfgError> {
    check_input(input, g)?;
    let mut first_lens: BTreeMap<CatId, BTreeSet<usize>> = BTreeMap::new();
    for r in &g.rules {
        first_lens.entry(r.rhs[0]).or_default().insert(r.rhs.len());
    }
    let mut s = Search {
        g,
        opts,
        first_lens,
        store,
        reducer,
        steps: Vec::new(),
        path: Vec::new(),
        out: Vec::new(),
        stats: ParseStats::default(),
    };
    if let Some(start) = g.start() {
        s.node(input.to_vec(), start);
    }
    s.stats.counters = s.store.counters();
    Ok(ParseResult {
        derivations: s.out,
        stats: s.stats,
    })
}

struct Search<'a> {
    g: &'a Grammar,
    opts: &'a ParseOptions,
    first_lens: BTreeMap<CatId, BTreeSet<usize>>,
    store: &'a mut Store,
    reducer: &'a mut dyn Reducer,
    steps: Vec<Step>,
    /// Sequences visited on the current branch.
    path: Vec<Vec<CatId>>,
    out: Vec<Derivation>,
    stats: ParseStats,
}

fn cat_value(c: CatId) -> Value {
    Value::Int(c.0 as i64)
}

impl Search<'_> {
    fn full(&self) -> bool {
        self.opts.limit.is_some_and(|n| self.out.len() >= n)
    }

    /// Returns whether at least one derivation was found below.
    fn node(&mut self, cur: Vec<CatId>, start: CatId) -> bool {
        self.stats.node_expansions += 1;
        if cur.len() == 1 && cur[0] == start {
            let d = Derivation {
                steps: self.steps.clone(),
            };
            if self.reducer.accept(self.store, &d) {
                self.out.push(d);
                return true;
            }
            return false;
        }
        let windows = match self.opts.strategy {
            Strategy::Active => self.active_windows(&cur),
            Strategy::Gentest => (0..cur.len())
                .flat_map(|a| (1..=cur.len() - a).map(move |b| (a, b)))
                .collect(),
        };
        let mut found = false;
        for (a, b) in windows {
            if self.full() {
                break;
            }
            self.stats.windows_tried += 1;
            for &ri in self.g.rules_matching(&cur[a..a + b]) {
                if self.full() {
                    break;
                }
                found |= self.apply(&cur, a, b, ri, start);
            }
        }
        found
    }

    fn apply(&mut self, cur: &[CatId], a: usize, b: usize, ri: usize, start: CatId) -> bool {
        let rule = &self.g.rules[ri];
        let mut next = Vec::with_capacity(cur.len() + 1 - b);
        next.extend_from_slice(&cur[..a]);
        next.push(rule.lhs);
        next.extend_from_slice(&cur[a + b..]);
        // Lengths never grow along a branch, so only the tail of the path
        // can repeat after a unary step.
        if b == 1
            && (next == cur
                || self
                    .path
                    .iter()
                    .rev()
                    .take_while(|s| s.len() == next.len())
                    .any(|s| *s == next))
        {
            return false;
        }
        let step = Step {
            pos: a,
            lhs: rule.lhs,
            rhs: rule.rhs.clone(),
        };
        if !self.reducer.reduce(self.store, &step, ri) {
            return false;
        }
        self.stats.reductions_applied += 1;
        self.steps.push(step);
        self.path.push(cur.to_vec());
        let found = self.node(next, start);
        self.path.pop();
        self.steps.pop();
        self.reducer.undo(self.store);
        if !found {
            self.stats.backtracks += 1;
        }
        found
    }

    /// Windows left once the size block and the handle-start constraints
    /// have been propagated.
    fn active_windows(&mut self, cur: &[CatId]) -> Vec<(usize, usize)> {
        let l = cur.len() as i64;
        let st = &mut *self.store;
        let snap = st.snapshot();
        let lens: BTreeSet<i64> = self
            .first_lens
            .values()
            .flatten()
            .map(|n| *n as i64)
            .filter(|n| *n <= l)
            .collect();
        let starts: Vec<i64> = (0..cur.len())
            .filter(|i| self.first_lens.contains_key(&cur[*i]))
            .map(|i| i as i64)
            .collect();
        let a1 = st.new_closed_var(0..l);
        let b1 = st.new_closed_var(lens);
        let c1 = st.new_closed_var(0..l);
        let parts = [st.new_seq(), st.new_seq(), st.new_seq()];
        let whole = cur.iter().map(|c| cat_value(*c)).collect();
        let mut out = Vec::new();
        let ok = st
            .tell_all([concat3(parts, whole, [a1, b1, c1]), element(a1, starts)])
            .unwrap_or(false);
        if ok {
            let origins: Vec<i64> = st.domain(a1).values().iter().filter_map(Value::as_int).collect();
            for a in origins {
                let inner = st.snapshot();
                let here = &self.first_lens[&cur[a as usize]];
                let ok = st
                    .tell_all([Constraint::equals(a1, a), element(b1, here.iter().map(|n| *n as i64))])
                    .unwrap_or(false);
                if ok {
                    for b in st.domain(b1).values().iter().filter_map(Value::as_int) {
                        out.push((a as usize, b as usize));
                    }
                }
                st.restore(inner).expect("live snapshot");
            }
        }
        st.restore(snap).expect("live snapshot");
        out
    }
}
