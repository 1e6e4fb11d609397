use std::collections::BTreeMap;
use std::sync::Arc;

use super::avm::normalize_feature;
use super::indexed::{Cell, CellValue, IndexedFS, NodeIndex, Path};
use super::FsError;
use crate::constraints::{bool_post, BoolFormula, Constraint};
use crate::solver::{BoolStatus, Store, VarId};
use crate::value::Value;

/// A cell to install with [`IndexedFS::add`]. A missing status gets a fresh
/// variable.
#[derive(Clone, Debug)]
pub struct NewCell {
    pub feature: String,
    pub owner: NodeIndex,
    pub value: CellValue,
    pub status: Option<VarId>,
}

/// Owner or value position of a pattern cell.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PTerm {
    Var(String),
    Index(NodeIndex),
    Atom(Value),
    Any,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PatternCell {
    pub feature: String,
    pub owner: PTerm,
    pub value: PTerm,
    pub status: Option<String>,
}

impl PatternCell {
    /// `<SYNSEM,a,a1,f1>`-style template: lowercase names are variables,
    /// numbers are fixed indices, `_` matches anything.
    pub fn new(feature: &str, owner: &str, value: &str, status: &str) -> PatternCell {
        fn term(s: &str) -> PTerm {
            if s == "_" {
                PTerm::Any
            } else if let Ok(k) = s.parse::<NodeIndex>() {
                PTerm::Index(k)
            } else {
                PTerm::Var(s.to_string())
            }
        }
        PatternCell {
            feature: normalize_feature(feature),
            owner: term(owner),
            value: term(value),
            status: (status != "_").then(|| status.to_string()),
        }
    }
}

/// Result of a successful [`IndexedFS::delta`].
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Bindings {
    pub values: BTreeMap<String, CellValue>,
    pub statuses: BTreeMap<String, VarId>,
}

impl Bindings {
    pub fn index(&self, var: &str) -> Option<NodeIndex> {
        match self.values.get(var) {
            Some(CellValue::Ref(k)) => Some(*k),
            _ => None,
        }
    }

    pub fn status(&self, var: &str) -> Option<VarId> {
        self.statuses.get(var).copied()
    }
}

impl IndexedFS {
    /// Runs `f` on a scratch copy against a store snapshot and keeps the
    /// result only if it succeeds with an acyclic structure.
    fn transact<T>(
        &mut self,
        store: &mut Store,
        f: impl FnOnce(&mut IndexedFS, &mut Store) -> Result<T, FsError>,
    ) -> Result<T, FsError> {
        let snap = store.snapshot();
        let mut work = self.clone();
        let out = f(&mut work, store).and_then(|t| if work.is_acyclic() { Ok(t) } else { Err(FsError::Cyclic) });
        match out {
            Ok(t) => {
                store.commit(snap)?;
                *self = work;
                Ok(t)
            }
            Err(e) => {
                store.restore(snap)?;
                Err(e)
            }
        }
    }

    /// Merges nodes `i` and `j` into one (the smaller index survives).
    pub fn unify_nodes(&mut self, store: &mut Store, i: NodeIndex, j: NodeIndex) -> Result<(), FsError> {
        for k in [i, j] {
            if !self.contains_node(k) {
                return Err(FsError::MissingNode(k));
            }
        }
        self.transact(store, |fs, store| fs.unify_raw(store, vec![(i, j)]))
    }

    fn unify_raw(&mut self, store: &mut Store, mut work: Vec<(NodeIndex, NodeIndex)>) -> Result<(), FsError> {
        while let Some((a, b)) = work.pop() {
            let (a, b) = (self.find(a), self.find(b));
            if a == b {
                continue;
            }
            let (keep, gone) = (a.min(b), a.max(b));
            let cells = std::mem::take(&mut self.groups[gone - 1]);
            self.alias[gone - 1] = Some(keep);
            for mut c in cells {
                match self.cell_mut(keep, &c.feature) {
                    Some(existing) => {
                        let (ev, es) = (existing.value.clone(), existing.status);
                        let merged = merge_values(&c.feature, &ev, &c.value, &mut work)?;
                        existing.value = merged;
                        unify_status(store, &c.feature, es, c.status)?;
                    }
                    None => {
                        c.owner = keep;
                        self.groups[keep - 1].push(c);
                    }
                }
            }
        }
        self.redirect();
        Ok(())
    }

    fn redirect(&mut self) {
        let fs = self.clone();
        for g in &mut self.groups {
            for c in g {
                c.value = fs.resolved(&c.value);
                c.owner = fs.find(c.owner);
            }
        }
    }

    /// Makes `p1` and `p2` end at the same node. A missing path is created
    /// from the existing one; two existing targets are unified.
    pub fn share(&mut self, store: &mut Store, p1: &Path, p2: &Path) -> Result<(), FsError> {
        let t1 = self.lookup_node(p1);
        let t2 = self.lookup_node(p2);
        match (t1, t2) {
            (Some(a), Some(b)) => self.unify_nodes(store, a, b),
            (Some(t), None) => self.transact(store, |fs, store| fs.attach_path(store, p2, t)),
            (None, Some(t)) => self.transact(store, |fs, store| fs.attach_path(store, p1, t)),
            (None, None) => Err(FsError::MissingPath(p1.to_string())),
        }
    }

    /// Creates the missing part of `path` so that it ends at `target`.
    fn attach_path(&mut self, store: &mut Store, path: &Path, target: NodeIndex) -> Result<(), FsError> {
        let (last, prefix) = path
            .0
            .split_last()
            .ok_or_else(|| FsError::MissingPath(path.to_string()))?;
        let owner = self.ensure_nodes(store, prefix)?;
        self.install(store, owner, last, CellValue::Ref(target), None)
    }

    /// Walks `prefix` from the root, creating fresh nodes for missing steps.
    fn ensure_nodes(&mut self, store: &mut Store, prefix: &[String]) -> Result<NodeIndex, FsError> {
        let mut node = self.find(1);
        for f in prefix {
            let next = match self.cell(node, f).map(|c| c.value.clone()) {
                Some(CellValue::Ref(k)) => self.find(k),
                Some(CellValue::None) => {
                    let k = self.fresh_node();
                    self.cell_mut(node, f).expect("cell exists").value = CellValue::Ref(k);
                    k
                }
                Some(_) => return Err(FsError::Clash(f.clone())),
                None => {
                    let k = self.fresh_node();
                    let status = store.new_bool();
                    self.groups[node - 1].push(Cell {
                        feature: Arc::from(f.as_str()),
                        owner: node,
                        value: CellValue::Ref(k),
                        status,
                    });
                    k
                }
            };
            node = next;
        }
        Ok(node)
    }

    /// Adds one cell to `owner`, unifying with an existing cell of the same
    /// feature.
    fn install(
        &mut self,
        store: &mut Store,
        owner: NodeIndex,
        feature: &str,
        value: CellValue,
        status: Option<VarId>,
    ) -> Result<(), FsError> {
        let owner = self.find(owner);
        let value = self.resolved(&value);
        match self.cell(owner, feature).cloned() {
            Some(existing) => {
                let mut work = Vec::new();
                let merged = merge_values(feature, &existing.value, &value, &mut work)?;
                self.cell_mut(owner, feature).expect("cell exists").value = merged;
                if let Some(s) = status {
                    unify_status(store, feature, existing.status, s)?;
                }
                self.unify_raw(store, work)
            }
            None => {
                let status = status.unwrap_or_else(|| store.new_bool());
                self.groups[owner - 1].push(Cell {
                    feature: Arc::from(feature),
                    owner,
                    value,
                    status,
                });
                Ok(())
            }
        }
    }

    /// Appends `cells`, unifying duplicates. Owners and referenced indices
    /// must exist or be the next fresh index.
    pub fn add(&mut self, store: &mut Store, cells: Vec<NewCell>) -> Result<(), FsError> {
        self.transact(store, |fs, store| {
            for c in cells {
                let mut refs = vec![c.owner];
                match &c.value {
                    CellValue::Ref(k) => refs.push(*k),
                    CellValue::List(ks) => refs.extend(ks.iter().copied()),
                    _ => {}
                }
                for k in refs {
                    if k == fs.len() + 1 {
                        fs.fresh_node();
                    } else if !fs.contains_node(k) {
                        return Err(FsError::MissingNode(k));
                    }
                }
                let feature = normalize_feature(&c.feature);
                fs.install(store, c.owner, &feature, c.value, c.status)?;
            }
            Ok(())
        })
    }

    /// Constrains the status of the cell at `path`, creating a value-less
    /// placeholder cell when the feature is absent.
    pub fn set_status(&mut self, store: &mut Store, path: &Path, status: BoolStatus) -> Result<VarId, FsError> {
        let (last, prefix) = path
            .0
            .split_last()
            .ok_or_else(|| FsError::MissingPath(path.to_string()))?;
        let owner = self
            .lookup_node(&Path(prefix.to_vec()))
            .ok_or_else(|| FsError::MissingPath(path.to_string()))?;
        let last = last.clone();
        self.transact(store, |fs, store| {
            if fs.cell(owner, &last).is_none() {
                fs.install(store, owner, &last, CellValue::None, None)?;
            }
            let var = fs.cell(owner, &last).expect("cell exists").status;
            if let Some(b) = status.as_bool() {
                if !store.tell(Constraint::fix_bool(var, b))? {
                    return Err(FsError::StatusClash(last.clone()));
                }
            }
            Ok(var)
        })
    }

    /// Replaces the atom at `path`.
    pub fn set_atom(&mut self, path: &Path, value: Value) -> Result<(), FsError> {
        let (last, prefix) = path
            .0
            .split_last()
            .ok_or_else(|| FsError::MissingPath(path.to_string()))?;
        let owner = self
            .lookup_node(&Path(prefix.to_vec()))
            .ok_or_else(|| FsError::MissingPath(path.to_string()))?;
        match self.cell_mut(owner, last) {
            Some(c) if matches!(c.value, CellValue::Atom(_) | CellValue::None) => {
                c.value = CellValue::Atom(value);
                Ok(())
            }
            Some(_) => Err(FsError::Clash(last.clone())),
            None => Err(FsError::MissingPath(path.to_string())),
        }
    }

    /// Matches `pattern` cell by cell, binding index and status variables.
    /// `seed` pre-binds variables to node indices. Unbound owners are tried
    /// in node order, so the first match is deterministic.
    pub fn delta(&self, pattern: &[PatternCell], seed: &[(&str, NodeIndex)]) -> Option<Bindings> {
        let mut b = Bindings::default();
        for (name, k) in seed {
            b.values.insert(name.to_string(), CellValue::Ref(self.find(*k)));
        }
        self.match_from(pattern, b)
    }

    fn match_from(&self, pattern: &[PatternCell], b: Bindings) -> Option<Bindings> {
        let Some((p, rest)) = pattern.split_first() else {
            return Some(b);
        };
        let owners: Vec<NodeIndex> = match &p.owner {
            PTerm::Index(k) => vec![self.find(*k)],
            PTerm::Var(v) => match b.values.get(v) {
                Some(CellValue::Ref(k)) => vec![*k],
                Some(_) => return None,
                None => (1..=self.len()).filter(|k| self.find(*k) == *k).collect(),
            },
            _ => (1..=self.len()).filter(|k| self.find(*k) == *k).collect(),
        };
        for owner in owners {
            let Some(cell) = self.cell(owner, &p.feature) else {
                continue;
            };
            let mut nb = b.clone();
            if let PTerm::Var(v) = &p.owner {
                nb.values.insert(v.clone(), CellValue::Ref(owner));
            }
            let value = self.resolved(&cell.value);
            let ok = match &p.value {
                PTerm::Any => true,
                PTerm::Index(k) => value == CellValue::Ref(self.find(*k)),
                PTerm::Atom(a) => value == CellValue::Atom(a.clone()),
                PTerm::Var(v) => match nb.values.get(v) {
                    Some(bound) => *bound == value,
                    None => {
                        nb.values.insert(v.clone(), value);
                        true
                    }
                },
            };
            if !ok {
                continue;
            }
            if let Some(sv) = &p.status {
                match nb.statuses.get(sv) {
                    Some(bound) if *bound != cell.status => continue,
                    Some(_) => {}
                    None => {
                        nb.statuses.insert(sv.clone(), cell.status);
                    }
                }
            }
            if let Some(done) = self.match_from(rest, nb) {
                return Some(done);
            }
        }
        None
    }
}

fn merge_values(
    feature: &str,
    a: &CellValue,
    b: &CellValue,
    work: &mut Vec<(NodeIndex, NodeIndex)>,
) -> Result<CellValue, FsError> {
    match (a, b) {
        (CellValue::None, v) | (v, CellValue::None) => Ok(v.clone()),
        (CellValue::Atom(x), CellValue::Atom(y)) if x == y => Ok(a.clone()),
        (CellValue::Ref(x), CellValue::Ref(y)) => {
            work.push((*x, *y));
            Ok(CellValue::Ref((*x).min(*y)))
        }
        (CellValue::List(xs), CellValue::List(ys)) if xs.len() == ys.len() => {
            work.extend(xs.iter().copied().zip(ys.iter().copied()));
            Ok(a.clone())
        }
        _ => Err(FsError::Clash(feature.to_string())),
    }
}

fn unify_status(store: &mut Store, feature: &str, a: VarId, b: VarId) -> Result<(), FsError> {
    if a == b {
        return Ok(());
    }
    let f = BoolFormula::equiv(BoolFormula::var(a), BoolFormula::var(b));
    if store.tell(bool_post(f))? {
        Ok(())
    } else {
        Err(FsError::StatusClash(feature.to_string()))
    }
}
