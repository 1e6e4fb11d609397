use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use thiserror::Error;

use super::domain::{BoolStatus, Domain};
use crate::constraints::propagate::{self, Failure, PropagationContext};
use crate::constraints::{BoolFormula, Constraint, Leaf, Relation, Structural, Term};
use crate::value::Value;

static NEXT_STORE: AtomicU32 = AtomicU32::new(1);

/// Handle to a variable of one store. Handles are never reused: a variable
/// dropped by `restore` leaves its handle dangling and unusable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId {
    store: u32,
    index: u32,
    serial: u32,
}

impl VarId {
    pub fn index(self) -> usize {
        self.index as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{}", self.index)
    }
}

/// Handle to a sequence slot (only used inside `concat3`/`size`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SeqId {
    store: u32,
    index: u32,
    serial: u32,
}

impl fmt::Display for SeqId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_s{}", self.index)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct AskId(u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Snapshot {
    store: u32,
    id: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Entailment {
    Entailed,
    Disentailed,
    Unknown,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Consistency {
    Consistent,
    Inconsistent,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Resolvability {
    Resolvable,
    NotYet,
}

/// Cumulative instrumentation. Never rolled back.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Counters {
    pub completeness_tests: u64,
    pub propagation_steps: u64,
    pub ask_evaluations: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("variable {0} does not belong to this store")]
    UnknownVariable(String),
    #[error("variable {var} is not a {expected} variable")]
    KindMismatch { var: String, expected: &'static str },
    #[error("domain of {0} is complete and cannot be extended")]
    DomainClosed(String),
    #[error("snapshot is not live")]
    DeadSnapshot,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub(crate) enum VarState {
    Finite(Domain),
    Bool(BoolStatus),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Watcher {
    Constraint(u32),
    Ask(u32),
}

struct VarSlot {
    serial: u32,
    name: Option<Arc<str>>,
    state: VarState,
    watchers: Vec<Watcher>,
}

struct SeqSlot {
    serial: u32,
    value: Option<Vec<Value>>,
    watchers: Vec<u32>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum PostState {
    /// Ordinary constraint waiting for all its domains to become complete.
    Pending,
    /// Structural constraint waiting for its parent domains.
    Parked,
    /// Structural constraint waiting for its support sets.
    Monitoring,
    Active,
}

struct Posted {
    constraint: Arc<Constraint>,
    state: PostState,
}

struct AskEntry {
    constraint: Arc<Constraint>,
    status: Entailment,
}

enum TrailEntry {
    Var { index: u32, old: VarState },
    Seq { index: u32, old: Option<Vec<Value>> },
    Post { id: u32, old: PostState },
    Ask { id: u32, old: Entailment },
    Watch { var: u32 },
    SeqWatch { seq: u32 },
    DaughterSet(Value),
    Failed(bool),
}

#[derive(Clone, Copy)]
struct Mark {
    trail: usize,
    vars: usize,
    seqs: usize,
    posted: usize,
    asks: usize,
}

struct Frame {
    id: u64,
    mark: Mark,
    fired: Vec<(AskId, Entailment)>,
}

/// Constraint store with finite-domain, boolean and sequence variables.
///
/// `tell` extends the model description and propagates to a fixpoint; an
/// inconsistent tell leaves the store exactly as it was before the call.
/// `ask` answers entailment questions and never modifies domains. Pending
/// asks registered with [`Store::watch`] are re-examined only when a tell or
/// a `close_domain` touches one of their variables.
pub struct Store {
    id: u32,
    next_serial: u32,
    vars: Vec<VarSlot>,
    seqs: Vec<SeqSlot>,
    posted: Vec<Posted>,
    asks: Vec<AskEntry>,
    fired: Vec<(AskId, Entailment)>,
    daughter_sets: BTreeMap<Value, VarId>,
    trail: Vec<TrailEntry>,
    frames: Vec<Frame>,
    next_snapshot: u64,
    failed: bool,
    counters: Counters,
    queue: VecDeque<u32>,
    queued: Vec<bool>,
    closed: VecDeque<u32>,
    touched: BTreeSet<u32>,
    trace: Option<Vec<String>>,
}

impl Default for Store {
    fn default() -> Self {
        Store::new()
    }
}

impl Store {
    pub fn new() -> Store {
        Store {
            id: NEXT_STORE.fetch_add(1, Ordering::Relaxed),
            next_serial: 0,
            vars: Vec::new(),
            seqs: Vec::new(),
            posted: Vec::new(),
            asks: Vec::new(),
            fired: Vec::new(),
            daughter_sets: BTreeMap::new(),
            trail: Vec::new(),
            frames: Vec::new(),
            next_snapshot: 0,
            failed: false,
            counters: Counters::default(),
            queue: VecDeque::new(),
            queued: Vec::new(),
            closed: VecDeque::new(),
            touched: BTreeSet::new(),
            trace: None,
        }
    }

    // ---- registration -------------------------------------------------

    fn push_var(&mut self, state: VarState) -> VarId {
        let serial = self.next_serial;
        self.next_serial += 1;
        let index = self.vars.len() as u32;
        self.vars.push(VarSlot {
            serial,
            name: None,
            state,
            watchers: Vec::new(),
        });
        VarId {
            store: self.id,
            index,
            serial,
        }
    }

    fn register(&mut self, values: impl IntoIterator<Item = impl Into<Value>>, complete: bool) -> VarId {
        let domain = Domain::new(values, complete);
        if domain.is_empty() {
            self.set_failed();
        }
        self.push_var(VarState::Finite(domain))
    }

    /// A finite-domain variable whose domain is a partial description that
    /// is not yet known to be complete. An empty domain makes the store
    /// inconsistent.
    pub fn new_var(&mut self, values: impl IntoIterator<Item = impl Into<Value>>) -> VarId {
        self.register(values, false)
    }

    /// A finite-domain variable whose domain is already complete.
    pub fn new_closed_var(&mut self, values: impl IntoIterator<Item = impl Into<Value>>) -> VarId {
        self.register(values, true)
    }

    /// An open set described by the model, allowed to start empty.
    pub fn new_open_set(&mut self) -> VarId {
        self.push_var(VarState::Finite(Domain::new(Vec::<Value>::new(), false)))
    }

    pub fn new_bool(&mut self) -> VarId {
        self.push_var(VarState::Bool(BoolStatus::Unknown))
    }

    pub fn new_seq(&mut self) -> SeqId {
        let serial = self.next_serial;
        self.next_serial += 1;
        let index = self.seqs.len() as u32;
        self.seqs.push(SeqSlot {
            serial,
            value: None,
            watchers: Vec::new(),
        });
        SeqId {
            store: self.id,
            index,
            serial,
        }
    }

    pub fn set_name(&mut self, v: VarId, name: &str) -> Result<(), StoreError> {
        self.check_var(v)?;
        self.vars[v.index()].name = Some(Arc::from(name));
        Ok(())
    }

    pub fn name_of(&self, v: VarId) -> String {
        match self.vars.get(v.index()).and_then(|s| s.name.as_ref()) {
            Some(n) => n.to_string(),
            None => v.to_string(),
        }
    }

    fn set_failed(&mut self) {
        if !self.failed {
            self.trail.push(TrailEntry::Failed(false));
            self.failed = true;
        }
    }

    // ---- queries ------------------------------------------------------

    pub fn contains(&self, v: VarId) -> bool {
        self.check_var(v).is_ok()
    }

    fn check_var(&self, v: VarId) -> Result<(), StoreError> {
        match self.vars.get(v.index()) {
            Some(slot) if v.store == self.id && slot.serial == v.serial => Ok(()),
            _ => Err(StoreError::UnknownVariable(v.to_string())),
        }
    }

    fn check_seq(&self, s: SeqId) -> Result<(), StoreError> {
        match self.seqs.get(s.index as usize) {
            Some(slot) if s.store == self.id && slot.serial == s.serial => Ok(()),
            _ => Err(StoreError::UnknownVariable(s.to_string())),
        }
    }

    fn check_finite(&self, v: VarId) -> Result<(), StoreError> {
        self.check_var(v)?;
        match self.vars[v.index()].state {
            VarState::Finite(_) => Ok(()),
            VarState::Bool(_) => Err(StoreError::KindMismatch {
                var: self.name_of(v),
                expected: "finite-domain",
            }),
        }
    }

    fn check_bool(&self, v: VarId) -> Result<(), StoreError> {
        self.check_var(v)?;
        match self.vars[v.index()].state {
            VarState::Bool(_) => Ok(()),
            VarState::Finite(_) => Err(StoreError::KindMismatch {
                var: self.name_of(v),
                expected: "boolean",
            }),
        }
    }

    /// Domain of a finite-domain variable.
    ///
    /// Panics on a foreign handle or a boolean variable.
    pub fn domain(&self, v: VarId) -> &Domain {
        self.check_var(v).expect("foreign variable handle");
        match &self.vars[v.index()].state {
            VarState::Finite(d) => d,
            VarState::Bool(_) => panic!("{} is a boolean variable", self.name_of(v)),
        }
    }

    pub fn status(&self, v: VarId) -> BoolStatus {
        self.check_var(v).expect("foreign variable handle");
        match &self.vars[v.index()].state {
            VarState::Bool(b) => *b,
            VarState::Finite(_) => panic!("{} is a finite-domain variable", self.name_of(v)),
        }
    }

    pub fn value(&self, v: VarId) -> Option<&Value> {
        self.domain(v).single()
    }

    pub fn seq_value(&self, s: SeqId) -> Option<&[Value]> {
        self.seqs.get(s.index as usize).and_then(|slot| slot.value.as_deref())
    }

    pub fn is_complete(&self, v: VarId) -> bool {
        match &self.vars[v.index()].state {
            VarState::Finite(d) => d.is_complete(),
            VarState::Bool(_) => true,
        }
    }

    pub fn is_bool(&self, v: VarId) -> bool {
        matches!(self.vars.get(v.index()).map(|s| &s.state), Some(VarState::Bool(_)))
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    // ---- tracing ------------------------------------------------------

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    /// Drains the recorded `EVENT kind var before after` lines.
    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn trace_event(&mut self, kind: &str, v: VarId, before: &VarState, after: &VarState) {
        if self.trace.is_some() {
            let line = format!(
                "EVENT {kind} {} {} {}",
                self.name_of(v),
                show_state(before),
                show_state(after)
            );
            if let Some(t) = self.trace.as_mut() {
                t.push(line);
            }
        }
    }

    // ---- model description -------------------------------------------

    /// The open set of daughters of `node` in the tree model.
    pub fn daughter_set(&mut self, node: impl Into<Value>) -> VarId {
        let node = node.into();
        if let Some(v) = self.daughter_sets.get(&node) {
            return *v;
        }
        let v = self.new_open_set();
        self.vars[v.index()].name = Some(Arc::from(format!("daughters({node})")));
        self.daughter_sets.insert(node.clone(), v);
        self.trail.push(TrailEntry::DaughterSet(node));
        v
    }

    /// Records that `child` is attached under `parent`.
    pub fn attach(&mut self, parent: impl Into<Value>, child: impl Into<Value>) -> Result<(), StoreError> {
        let set = self.daughter_set(parent);
        self.extend_domain(set, [child.into()])
    }

    /// Grows the partial description of an open domain.
    pub fn extend_domain(
        &mut self,
        v: VarId,
        values: impl IntoIterator<Item = impl Into<Value>>,
    ) -> Result<(), StoreError> {
        self.check_finite(v)?;
        let before = self.vars[v.index()].state.clone();
        let VarState::Finite(d) = &before else { unreachable!() };
        if d.is_complete() {
            return Err(StoreError::DomainClosed(self.name_of(v)));
        }
        let mut next = d.clone();
        let mut grew = false;
        for x in values {
            grew |= next.values_mut().insert(x.into());
        }
        if grew {
            self.trail.push(TrailEntry::Var {
                index: v.index,
                old: before.clone(),
            });
            let after = VarState::Finite(next);
            self.trace_event("extend", v, &before, &after);
            self.vars[v.index()].state = after;
        }
        Ok(())
    }

    /// Marks the domain of `v` complete and re-examines whatever was waiting
    /// on it. Returns the consistency of the store afterwards.
    pub fn close_domain(&mut self, v: VarId) -> Result<bool, StoreError> {
        self.check_finite(v)?;
        if self.failed {
            return Ok(false);
        }
        if self.is_complete(v) {
            return Ok(true);
        }
        let mark = self.mark();
        self.mark_complete(v);
        match self.settle() {
            Ok(()) => {
                self.wake_asks();
                Ok(true)
            }
            Err(Failure) => {
                self.undo_to(mark);
                Ok(false)
            }
        }
    }

    fn mark_complete(&mut self, v: VarId) {
        let before = self.vars[v.index()].state.clone();
        let VarState::Finite(mut d) = before.clone() else {
            unreachable!()
        };
        d.mark_complete();
        let after = VarState::Finite(d);
        self.trail.push(TrailEntry::Var {
            index: v.index,
            old: before.clone(),
        });
        self.trace_event("close", v, &before, &after);
        self.vars[v.index()].state = after;
        self.closed.push_back(v.index);
        self.touched.insert(v.index);
    }

    // ---- tell / ask ---------------------------------------------------

    fn validate(&self, c: &Constraint) -> Result<(), StoreError> {
        match c {
            Constraint::Bool(f) => {
                for leaf in f.leaves() {
                    match leaf {
                        Leaf::Var(v) => self.check_bool(v)?,
                        Leaf::Is(v, _) => self.check_finite(v)?,
                    }
                }
            }
            other => {
                for v in other.vars() {
                    self.check_finite(v)?;
                }
            }
        }
        for s in c.seqs() {
            self.check_seq(s)?;
        }
        if let Constraint::Structural(Structural {
            relation: Relation::Table(t),
            ..
        }) = c
        {
            for v in t.supports.values() {
                self.check_finite(*v)?;
            }
        }
        Ok(())
    }

    /// Posts `c` and propagates. `Ok(false)` means the tell was inconsistent
    /// and has been undone; `Err` is a usage error.
    pub fn tell(&mut self, c: Constraint) -> Result<bool, StoreError> {
        self.validate(&c)?;
        if self.failed {
            return Ok(false);
        }
        let mark = self.mark();
        match self.post(c).and_then(|()| self.settle()) {
            Ok(()) => {
                self.wake_asks();
                Ok(true)
            }
            Err(Failure) => {
                self.undo_to(mark);
                Ok(false)
            }
        }
    }

    /// Tells every constraint in order, stopping at the first inconsistency.
    pub fn tell_all(&mut self, cs: impl IntoIterator<Item = Constraint>) -> Result<bool, StoreError> {
        for c in cs {
            if !self.tell(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn post(&mut self, c: Constraint) -> Result<(), Failure> {
        let id = self.posted.len() as u32;
        let c = Arc::new(c);
        self.queued.resize(self.posted.len() + 1, false);
        match &*c {
            Constraint::Structural(s) => {
                let s = s.clone();
                self.posted.push(Posted {
                    constraint: c.clone(),
                    state: PostState::Parked,
                });
                for p in s.parents.iter().filter_map(Term::var) {
                    self.add_watcher(p, Watcher::Constraint(id));
                }
                if self.parents_complete(&s) {
                    self.set_post_state(id, PostState::Monitoring);
                    self.watch_supports(&s, id);
                    if self.eval_structural(&s, true) {
                        self.resolve(id, &s)?;
                    }
                }
            }
            other => {
                let vars = other.vars();
                let seqs = other.seqs();
                let ready = vars.iter().all(|v| self.is_complete(*v));
                self.posted.push(Posted {
                    constraint: c.clone(),
                    state: if ready { PostState::Active } else { PostState::Pending },
                });
                for v in vars {
                    self.add_watcher(v, Watcher::Constraint(id));
                }
                for s in seqs {
                    self.seqs[s.index as usize].watchers.push(id);
                    self.trail.push(TrailEntry::SeqWatch { seq: s.index });
                }
                if ready {
                    self.enqueue(id);
                }
            }
        }
        Ok(())
    }

    /// Answers whether `c` holds in every solution (entailed), in none
    /// (disentailed), or cannot be decided yet. Any incomplete domain makes
    /// the answer unknown.
    pub fn ask(&mut self, c: &Constraint) -> Result<Entailment, StoreError> {
        self.validate(c)?;
        Ok(self.evaluate_ask(c))
    }

    fn evaluate_ask(&mut self, c: &Constraint) -> Entailment {
        self.counters.ask_evaluations += 1;
        if let Constraint::Structural(s) = c {
            return self.structural_entailment(s);
        }
        if c.vars().iter().any(|v| !self.is_complete(*v)) {
            return Entailment::Unknown;
        }
        propagate::entailment(c, self)
    }

    /// Registers a pending ask. Its answer is re-examined after each tell or
    /// close that touches one of its variables; decided answers are queued
    /// for [`Store::take_fired`].
    pub fn watch(&mut self, c: Constraint) -> Result<AskId, StoreError> {
        self.validate(&c)?;
        let id = AskId(self.asks.len() as u32);
        let c = Arc::new(c);
        let status = self.evaluate_ask(&c);
        self.asks.push(AskEntry {
            constraint: c.clone(),
            status,
        });
        for v in c.vars() {
            self.add_watcher(v, Watcher::Ask(id.0));
        }
        if let Constraint::Structural(s) = &*c {
            for sv in self.support_vars(s) {
                self.add_watcher(sv, Watcher::Ask(id.0));
            }
        }
        if status != Entailment::Unknown {
            self.fired.push((id, status));
        }
        Ok(id)
    }

    pub fn ask_status(&self, id: AskId) -> Entailment {
        self.asks[id.0 as usize].status
    }

    /// Drains the asks decided since the last call, in decision order.
    pub fn take_fired(&mut self) -> Vec<(AskId, Entailment)> {
        std::mem::take(&mut self.fired)
    }

    fn wake_asks(&mut self) {
        let touched = std::mem::take(&mut self.touched);
        let mut woken: Vec<u32> = Vec::new();
        for vi in touched {
            if let Some(slot) = self.vars.get(vi as usize) {
                for w in &slot.watchers {
                    if let Watcher::Ask(a) = w {
                        if !woken.contains(a) {
                            woken.push(*a);
                        }
                    }
                }
            }
        }
        woken.sort_unstable();
        for a in woken {
            if self.asks[a as usize].status != Entailment::Unknown {
                continue;
            }
            let c = self.asks[a as usize].constraint.clone();
            let status = self.evaluate_ask(&c);
            if let Constraint::Structural(s) = &*c {
                for sv in self.support_vars(s) {
                    if !self.vars[sv.index()].watchers.contains(&Watcher::Ask(a)) {
                        self.add_watcher(sv, Watcher::Ask(a));
                    }
                }
            }
            if status != Entailment::Unknown {
                self.trail.push(TrailEntry::Ask {
                    id: a,
                    old: Entailment::Unknown,
                });
                self.asks[a as usize].status = status;
                self.fired.push((AskId(a), status));
            }
        }
    }

    // ---- propagation --------------------------------------------------

    /// Re-runs every active propagator to a fixpoint.
    pub fn propagate(&mut self) -> Consistency {
        if self.failed {
            return Consistency::Inconsistent;
        }
        let mark = self.mark();
        for id in 0..self.posted.len() as u32 {
            if self.posted[id as usize].state == PostState::Active {
                self.enqueue(id);
            }
        }
        match self.settle() {
            Ok(()) => {
                self.wake_asks();
                Consistency::Consistent
            }
            Err(Failure) => {
                self.undo_to(mark);
                Consistency::Inconsistent
            }
        }
    }

    fn enqueue(&mut self, id: u32) {
        if !self.queued[id as usize] {
            self.queued[id as usize] = true;
            self.queue.push_back(id);
        }
    }

    fn settle(&mut self) -> Result<(), Failure> {
        loop {
            if let Some(id) = self.queue.pop_front() {
                self.queued[id as usize] = false;
                self.counters.propagation_steps += 1;
                self.run_propagator(id)?;
                continue;
            }
            if let Some(vi) = self.closed.pop_front() {
                self.dispatch_close(vi)?;
                continue;
            }
            return Ok(());
        }
    }

    fn run_propagator(&mut self, id: u32) -> Result<(), Failure> {
        let c = self.posted[id as usize].constraint.clone();
        for v in c.vars() {
            if let VarState::Finite(d) = &self.vars[v.index()].state {
                if d.is_empty() {
                    return Err(Failure);
                }
            }
        }
        match &*c {
            Constraint::Structural(s) => self.propagate_structural(s),
            other => propagate::run(other, self),
        }
    }

    fn dispatch_close(&mut self, vi: u32) -> Result<(), Failure> {
        let watchers = self.vars[vi as usize].watchers.clone();
        for w in watchers {
            let Watcher::Constraint(id) = w else { continue };
            let c = self.posted[id as usize].constraint.clone();
            match (self.posted[id as usize].state, &*c) {
                (PostState::Pending, other) => {
                    if other.vars().iter().all(|v| self.is_complete(*v)) {
                        self.set_post_state(id, PostState::Active);
                        self.enqueue(id);
                    }
                }
                (PostState::Parked, Constraint::Structural(s)) => {
                    // The close event itself reports the parent domain; only
                    // the support sets are tested.
                    if self.parents_complete(s) {
                        self.set_post_state(id, PostState::Monitoring);
                        self.watch_supports(s, id);
                        if self.eval_structural(s, false) {
                            self.resolve(id, s)?;
                        }
                    }
                }
                (PostState::Monitoring, Constraint::Structural(s)) => {
                    let is_support = self.support_vars(s).iter().any(|sv| sv.index == vi);
                    if is_support && self.eval_structural(s, true) {
                        self.resolve(id, s)?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn add_watcher(&mut self, v: VarId, w: Watcher) {
        self.vars[v.index()].watchers.push(w);
        self.trail.push(TrailEntry::Watch { var: v.index });
    }

    fn set_post_state(&mut self, id: u32, state: PostState) {
        let old = self.posted[id as usize].state;
        if old != state {
            self.trail.push(TrailEntry::Post { id, old });
            self.posted[id as usize].state = state;
        }
    }

    fn notify_change(&mut self, vi: u32) {
        self.touched.insert(vi);
        let n = self.vars[vi as usize].watchers.len();
        for k in 0..n {
            if let Watcher::Constraint(id) = self.vars[vi as usize].watchers[k] {
                if self.posted[id as usize].state == PostState::Active {
                    self.enqueue(id);
                }
            }
        }
    }

    fn write_state(&mut self, v: VarId, kind: &str, after: VarState) {
        let before = std::mem::replace(&mut self.vars[v.index()].state, after);
        {
            let after = self.vars[v.index()].state.clone();
            self.trace_event(kind, v, &before, &after);
        }
        self.trail.push(TrailEntry::Var {
            index: v.index,
            old: before,
        });
        self.notify_change(v.index);
    }

    // ---- structural constraints --------------------------------------

    fn parents_complete(&self, s: &Structural) -> bool {
        s.parents.iter().filter_map(Term::var).all(|v| self.is_complete(v))
    }

    fn parent_tuples(&self, s: &Structural) -> Vec<Vec<Value>> {
        let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
        for p in &s.parents {
            let values: Vec<Value> = match p {
                Term::Const(c) => vec![c.clone()],
                Term::Var(v) => self.domain(*v).values().iter().cloned().collect(),
            };
            let mut next = Vec::with_capacity(tuples.len() * values.len());
            for t in &tuples {
                for x in &values {
                    let mut t2 = t.clone();
                    t2.push(x.clone());
                    next.push(t2);
                }
            }
            tuples = next;
        }
        tuples
    }

    fn support(&mut self, s: &Structural, tuple: &[Value]) -> Option<VarId> {
        match &s.relation {
            Relation::Daughter => Some(self.daughter_set(tuple[0].clone())),
            Relation::Table(t) => t.supports.get(tuple).copied(),
        }
    }

    fn support_vars(&mut self, s: &Structural) -> Vec<VarId> {
        if !self.parents_complete(s) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for t in self.parent_tuples(s) {
            if let Some(v) = self.support(s, &t) {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    fn watch_supports(&mut self, s: &Structural, id: u32) {
        for v in self.support_vars(s) {
            self.add_watcher(v, Watcher::Constraint(id));
        }
    }

    /// One evaluation of the completeness rule
    /// `complete(dom(u)) <-> complete(parents) & all t. complete(c(t))`,
    /// short-circuiting left to right. Every predicate evaluated counts as a
    /// test; the parent product counts as a single predicate.
    fn eval_structural(&mut self, s: &Structural, include_parent: bool) -> bool {
        if include_parent {
            self.counters.completeness_tests += 1;
            if !self.parents_complete(s) {
                return false;
            }
        }
        for t in self.parent_tuples(s) {
            self.counters.completeness_tests += 1;
            if let Some(v) = self.support(s, &t) {
                if !self.is_complete(v) {
                    return false;
                }
            }
        }
        true
    }

    fn support_union(&mut self, s: &Structural, tuples: &[Vec<Value>]) -> BTreeSet<Value> {
        let mut union = BTreeSet::new();
        for t in tuples {
            if let Some(v) = self.support(s, t) {
                union.extend(self.domain(v).values().iter().cloned());
            }
        }
        union
    }

    fn resolve(&mut self, id: u32, s: &Structural) -> Result<(), Failure> {
        self.set_post_state(id, PostState::Active);
        let tuples = self.parent_tuples(s);
        let union = self.support_union(s, &tuples);
        if self.is_complete(s.target) {
            self.retain(s.target, &|x| union.contains(x))?;
        } else {
            let after = VarState::Finite(Domain::new(union, false));
            self.write_state(s.target, "resolve", after);
            self.mark_complete(s.target);
        }
        self.add_watcher(s.target, Watcher::Constraint(id));
        self.enqueue(id);
        Ok(())
    }

    fn propagate_structural(&mut self, s: &Structural) -> Result<(), Failure> {
        let tuples = self.parent_tuples(s);
        let target = self.domain(s.target).values().clone();
        let mut valid = Vec::new();
        let mut reach = BTreeSet::new();
        for t in tuples {
            let Some(sv) = self.support(s, &t) else { continue };
            let hits: Vec<Value> = self.domain(sv).values().intersection(&target).cloned().collect();
            if !hits.is_empty() {
                reach.extend(hits);
                valid.push(t);
            }
        }
        if valid.is_empty() {
            return Err(Failure);
        }
        self.retain(s.target, &|x| reach.contains(x))?;
        for (k, p) in s.parents.iter().enumerate() {
            if let Term::Var(v) = p {
                let keep: BTreeSet<Value> = valid.iter().map(|t| t[k].clone()).collect();
                self.retain(*v, &|x| keep.contains(x))?;
            }
        }
        Ok(())
    }

    fn structural_entailment(&mut self, s: &Structural) -> Entailment {
        if !self.eval_structural(s, true) {
            return Entailment::Unknown;
        }
        let tuples = self.parent_tuples(s);
        let union = self.support_union(s, &tuples);
        if union.is_empty() {
            return Entailment::Disentailed;
        }
        let target = self.domain(s.target);
        if !target.is_complete() {
            return Entailment::Unknown;
        }
        if target.values().is_subset(&union) {
            Entailment::Entailed
        } else if target.values().is_disjoint(&union) {
            Entailment::Disentailed
        } else {
            Entailment::Unknown
        }
    }

    /// Evaluates the resolvability precondition of `c` once and reports the
    /// number of completeness tests it took.
    pub fn resolvability_check(&mut self, c: &Constraint) -> Result<(Resolvability, u64), StoreError> {
        self.validate(c)?;
        let before = self.counters.completeness_tests;
        let ok = match c {
            Constraint::Structural(s) => self.eval_structural(s, true),
            other => {
                let mut ok = true;
                for v in other.vars() {
                    self.counters.completeness_tests += 1;
                    if !self.is_complete(v) {
                        ok = false;
                        break;
                    }
                }
                ok
            }
        };
        let tests = self.counters.completeness_tests - before;
        let r = if ok {
            Resolvability::Resolvable
        } else {
            Resolvability::NotYet
        };
        Ok((r, tests))
    }

    // ---- snapshots ----------------------------------------------------

    fn mark(&self) -> Mark {
        Mark {
            trail: self.trail.len(),
            vars: self.vars.len(),
            seqs: self.seqs.len(),
            posted: self.posted.len(),
            asks: self.asks.len(),
        }
    }

    fn undo_to(&mut self, mark: Mark) {
        while self.trail.len() > mark.trail {
            match self.trail.pop().expect("trail underflow") {
                TrailEntry::Var { index, old } => self.vars[index as usize].state = old,
                TrailEntry::Seq { index, old } => self.seqs[index as usize].value = old,
                TrailEntry::Post { id, old } => self.posted[id as usize].state = old,
                TrailEntry::Ask { id, old } => self.asks[id as usize].status = old,
                TrailEntry::Watch { var } => {
                    self.vars[var as usize].watchers.pop();
                }
                TrailEntry::SeqWatch { seq } => {
                    self.seqs[seq as usize].watchers.pop();
                }
                TrailEntry::DaughterSet(node) => {
                    self.daughter_sets.remove(&node);
                }
                TrailEntry::Failed(old) => self.failed = old,
            }
        }
        self.vars.truncate(mark.vars);
        self.seqs.truncate(mark.seqs);
        self.posted.truncate(mark.posted);
        self.asks.truncate(mark.asks);
        self.queued.truncate(mark.posted);
        self.queued.iter_mut().for_each(|q| *q = false);
        self.queue.clear();
        self.closed.clear();
        self.touched.clear();
    }

    pub fn snapshot(&mut self) -> Snapshot {
        let id = self.next_snapshot;
        self.next_snapshot += 1;
        self.frames.push(Frame {
            id,
            mark: self.mark(),
            fired: self.fired.clone(),
        });
        Snapshot { store: self.id, id }
    }

    /// Keeps the current state and forgets `snap` together with every
    /// snapshot taken after it.
    pub fn commit(&mut self, snap: Snapshot) -> Result<(), StoreError> {
        let pos = self
            .frames
            .iter()
            .position(|f| snap.store == self.id && f.id == snap.id)
            .ok_or(StoreError::DeadSnapshot)?;
        self.frames.truncate(pos);
        Ok(())
    }

    /// Returns the store to the state captured by `snap`. Snapshots taken
    /// after `snap`, and `snap` itself, die. Counters are not rolled back.
    pub fn restore(&mut self, snap: Snapshot) -> Result<(), StoreError> {
        if snap.store != self.id {
            return Err(StoreError::DeadSnapshot);
        }
        let pos = self
            .frames
            .iter()
            .position(|f| f.id == snap.id)
            .ok_or(StoreError::DeadSnapshot)?;
        let frame = self.frames.drain(pos..).next().expect("frame present");
        self.undo_to(frame.mark);
        self.fired = frame.fired;
        Ok(())
    }
}

impl PropagationContext for Store {
    fn domain(&self, v: VarId) -> &Domain {
        Store::domain(self, v)
    }

    fn status(&self, v: VarId) -> BoolStatus {
        Store::status(self, v)
    }

    fn seq(&self, s: SeqId) -> Option<&[Value]> {
        self.seq_value(s)
    }

    fn retain(&mut self, v: VarId, keep: &dyn Fn(&Value) -> bool) -> Result<bool, Failure> {
        let d = Store::domain(self, v);
        if d.values().iter().all(keep) {
            return Ok(false);
        }
        let mut next = d.clone();
        next.values_mut().retain(|x| keep(x));
        let empty = next.is_empty();
        self.write_state(v, "prune", VarState::Finite(next));
        if empty {
            Err(Failure)
        } else {
            Ok(true)
        }
    }

    fn fix_bool(&mut self, v: VarId, b: bool) -> Result<bool, Failure> {
        match Store::status(self, v).as_bool() {
            Some(x) if x == b => Ok(false),
            Some(_) => Err(Failure),
            None => {
                self.write_state(v, "bool", VarState::Bool(BoolStatus::from_bool(b)));
                Ok(true)
            }
        }
    }

    fn fix_seq(&mut self, s: SeqId, values: Vec<Value>) -> Result<bool, Failure> {
        let slot = &self.seqs[s.index as usize];
        match &slot.value {
            Some(x) if *x == values => Ok(false),
            Some(_) => Err(Failure),
            None => {
                let old = self.seqs[s.index as usize].value.replace(values);
                self.trail.push(TrailEntry::Seq { index: s.index, old });
                let watchers = self.seqs[s.index as usize].watchers.clone();
                for id in watchers {
                    if self.posted[id as usize].state == PostState::Active {
                        self.enqueue(id);
                    }
                }
                Ok(true)
            }
        }
    }
}

fn show_state(s: &VarState) -> String {
    match s {
        VarState::Finite(d) => {
            if d.is_complete() {
                format!("{d}!")
            } else {
                d.to_string()
            }
        }
        VarState::Bool(b) => b.to_string(),
    }
}

/// Convenience: evaluate a formula's Kleene value against the store.
pub fn kleene(store: &Store, f: &BoolFormula) -> BoolStatus {
    let status = |l: &Leaf| propagate::leaf_status(store, l);
    f.eval(&status)
}
