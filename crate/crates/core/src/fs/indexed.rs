use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::avm::{is_list_feature, normalize_feature, Avm, AvmValue, Feature};
use super::FsError;
use crate::constraints::Constraint;
use crate::solver::{BoolStatus, Store, VarId};
use crate::value::Value;

/// 1-based position of a group.
pub type NodeIndex = usize;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CellValue {
    Atom(Value),
    Ref(NodeIndex),
    List(Vec<NodeIndex>),
    None,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cell {
    pub feature: Arc<str>,
    pub owner: NodeIndex,
    pub value: CellValue,
    pub status: VarId,
}

/// Feature path from the root node, e.g. `synsem.loc.cat.head`.
#[derive(Clone, PartialEq, Eq, Debug, Default, Hash)]
pub struct Path(pub Vec<String>);

impl Path {
    pub fn parse(text: &str) -> Path {
        Path(
            text.split('.')
                .filter(|s| !s.is_empty())
                .map(normalize_feature)
                .collect(),
        )
    }

    pub fn join(&self, tail: &str) -> Path {
        let mut p = self.clone();
        p.0.extend(Path::parse(tail).0);
        p
    }
}

impl From<&str> for Path {
    fn from(s: &str) -> Path {
        Path::parse(s)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexedFS {
    pub(super) groups: Vec<Vec<Cell>>,
    /// Set when a node was merged into another one by unification.
    pub(super) alias: Vec<Option<NodeIndex>>,
}

impl Default for IndexedFS {
    fn default() -> Self {
        IndexedFS::new()
    }
}

impl IndexedFS {
    /// A structure with a single empty root group.
    pub fn new() -> IndexedFS {
        IndexedFS {
            groups: vec![Vec::new()],
            alias: vec![None],
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(Vec::is_empty)
    }

    pub fn groups(&self) -> &[Vec<Cell>] {
        &self.groups
    }

    pub fn group(&self, k: NodeIndex) -> &[Cell] {
        &self.groups[self.find(k) - 1]
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.groups.iter().flatten()
    }

    /// Canonical index of `k` after merges.
    pub fn find(&self, mut k: NodeIndex) -> NodeIndex {
        while let Some(Some(next)) = self.alias.get(k.wrapping_sub(1)) {
            k = *next;
        }
        k
    }

    pub fn contains_node(&self, k: NodeIndex) -> bool {
        k >= 1 && k <= self.groups.len()
    }

    pub(super) fn fresh_node(&mut self) -> NodeIndex {
        self.groups.push(Vec::new());
        self.alias.push(None);
        self.groups.len()
    }

    pub fn cell(&self, node: NodeIndex, feature: &str) -> Option<&Cell> {
        let feature = normalize_feature(feature);
        self.group(node).iter().find(|c| *c.feature == *feature)
    }

    pub(super) fn cell_mut(&mut self, node: NodeIndex, feature: &str) -> Option<&mut Cell> {
        let node = self.find(node);
        self.groups[node - 1].iter_mut().find(|c| *c.feature == *feature)
    }

    /// Node reached by following `path` from the root; the empty path is
    /// the root itself.
    pub fn lookup_node(&self, path: &Path) -> Option<NodeIndex> {
        self.lookup_node_from(1, path)
    }

    pub fn lookup_node_from(&self, start: NodeIndex, path: &Path) -> Option<NodeIndex> {
        let mut node = self.find(start);
        for f in &path.0 {
            match self.cell(node, f)?.value {
                CellValue::Ref(k) => node = self.find(k),
                _ => return None,
            }
        }
        Some(node)
    }

    /// Terminal cell of `path`, following index references.
    pub fn lookup(&self, path: &Path) -> Option<&Cell> {
        self.lookup_from(1, path)
    }

    pub fn lookup_from(&self, start: NodeIndex, path: &Path) -> Option<&Cell> {
        let (last, prefix) = path.0.split_last()?;
        let node = self.lookup_node_from(start, &Path(prefix.to_vec()))?;
        self.cell(node, last)
    }

    /// Value of a cell with references resolved to canonical indices.
    pub fn resolved(&self, v: &CellValue) -> CellValue {
        match v {
            CellValue::Ref(k) => CellValue::Ref(self.find(*k)),
            CellValue::List(ks) => CellValue::List(ks.iter().map(|k| self.find(*k)).collect()),
            other => other.clone(),
        }
    }

    fn children(&self, node: NodeIndex) -> Vec<NodeIndex> {
        let mut out = Vec::new();
        for c in self.group(node) {
            match &c.value {
                CellValue::Ref(k) => out.push(self.find(*k)),
                CellValue::List(ks) => out.extend(ks.iter().map(|k| self.find(*k))),
                _ => {}
            }
        }
        out
    }

    pub fn is_acyclic(&self) -> bool {
        // 0 unvisited, 1 on stack, 2 done
        let mut state = vec![0u8; self.groups.len() + 1];
        for start in 1..=self.groups.len() {
            if state[start] != 0 || self.find(start) != start {
                continue;
            }
            let mut stack = vec![(start, false)];
            while let Some((n, done)) = stack.pop() {
                if done {
                    state[n] = 2;
                    continue;
                }
                if state[n] == 2 {
                    continue;
                }
                state[n] = 1;
                stack.push((n, true));
                for c in self.children(n) {
                    match state[c] {
                        1 => return false,
                        0 => stack.push((c, false)),
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// Renumbers the nodes reachable from the root in depth-first
    /// declaration order, dropping merged and unreachable groups.
    pub fn compacted(&self) -> IndexedFS {
        let mut order = Vec::new();
        let mut number = BTreeMap::new();
        let mut stack = vec![self.find(1)];
        while let Some(n) = stack.pop() {
            if number.contains_key(&n) {
                continue;
            }
            order.push(n);
            number.insert(n, order.len());
            let mut kids = self.children(n);
            kids.reverse();
            stack.extend(kids.into_iter().filter(|k| !number.contains_key(k)));
        }
        let map = |k: &NodeIndex| number[&self.find(*k)];
        let groups = order
            .iter()
            .map(|n| {
                self.group(*n)
                    .iter()
                    .map(|c| Cell {
                        feature: c.feature.clone(),
                        owner: number[n],
                        value: match &c.value {
                            CellValue::Ref(k) => CellValue::Ref(map(k)),
                            CellValue::List(ks) => CellValue::List(ks.iter().map(map).collect()),
                            other => other.clone(),
                        },
                        status: c.status,
                    })
                    .collect()
            })
            .collect::<Vec<_>>();
        IndexedFS {
            alias: vec![None; groups.len()],
            groups,
        }
    }

    /// Copies `other` into fresh groups and returns the new index of its root.
    /// Status variables are shared, not copied.
    pub fn embed(&mut self, other: &IndexedFS) -> NodeIndex {
        let other = other.compacted();
        let offset = self.groups.len();
        for g in other.groups {
            let cells = g
                .into_iter()
                .map(|c| Cell {
                    owner: c.owner + offset,
                    value: match c.value {
                        CellValue::Ref(k) => CellValue::Ref(k + offset),
                        CellValue::List(ks) => CellValue::List(ks.into_iter().map(|k| k + offset).collect()),
                        v => v,
                    },
                    ..c
                })
                .collect();
            self.groups.push(cells);
            self.alias.push(None);
        }
        offset + 1
    }

    // ---- encoding -----------------------------------------------------

    /// Flattens `avm` by depth-first, declaration-order traversal; the root
    /// is node 1. Every cell gets a fresh status variable, fixed when the
    /// avm annotates it.
    pub fn encode(avm: &Avm, store: &mut Store) -> Result<IndexedFS, FsError> {
        let mut decls: BTreeMap<u32, &Avm> = BTreeMap::new();
        collect_decls(avm, &mut decls)?;
        let mut enc = Encoder {
            fs: IndexedFS {
                groups: Vec::new(),
                alias: Vec::new(),
            },
            store,
            decls,
            tags: BTreeMap::new(),
            open: BTreeSet::new(),
        };
        enc.node(avm, avm.tag)?;
        Ok(enc.fs)
    }

    /// Rebuilds a nested avm from the root. Nodes referenced from more than
    /// one place get tags numbered by first occurrence; `U` statuses are left
    /// implicit.
    pub fn decode(&self, store: &Store) -> Avm {
        let root = self.find(1);
        let mut refs: BTreeMap<NodeIndex, usize> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            for k in self.children(n) {
                *refs.entry(k).or_default() += 1;
                stack.push(k);
            }
        }
        let mut d = Decoder {
            fs: self,
            store,
            refs,
            tags: BTreeMap::new(),
        };
        d.node(root)
    }

    // ---- dumps --------------------------------------------------------

    /// One group per line: `[<cat, 1, 2>, <content, 1, 4>]`.
    pub fn dump(&self) -> String {
        self.render(None)
    }

    /// Same as [`IndexedFS::dump`] with the status as a fourth component.
    pub fn dump_with_status(&self, store: &Store) -> String {
        self.render(Some(store))
    }

    fn render(&self, store: Option<&Store>) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push('[');
            for (i, c) in g.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("<{}, {}, {}", c.feature, c.owner, show_value(&c.value)));
                if let Some(s) = store {
                    out.push_str(&format!(", {}", s.status(c.status)));
                }
                out.push('>');
            }
            out.push_str("]\n");
        }
        out
    }
}

fn show_value(v: &CellValue) -> String {
    match v {
        CellValue::Atom(a) => a.to_string(),
        CellValue::Ref(k) => k.to_string(),
        CellValue::None => "-".into(),
        CellValue::List(ks) => {
            let inner: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
            format!("<{}>", inner.join(", "))
        }
    }
}

fn collect_decls<'a>(avm: &'a Avm, decls: &mut BTreeMap<u32, &'a Avm>) -> Result<(), FsError> {
    if let Some(t) = avm.tag {
        match decls.get(&t) {
            Some(prev) if prev.features != avm.features => return Err(FsError::DuplicateTag(t)),
            Some(_) => {}
            None => {
                decls.insert(t, avm);
            }
        }
    }
    for f in &avm.features {
        collect_value_decls(&f.value, decls)?;
    }
    Ok(())
}

fn collect_value_decls<'a>(v: &'a AvmValue, decls: &mut BTreeMap<u32, &'a Avm>) -> Result<(), FsError> {
    match v {
        AvmValue::Node(a) => collect_decls(a, decls),
        AvmValue::List(xs) => xs.iter().try_for_each(|x| collect_value_decls(x, decls)),
        _ => Ok(()),
    }
}

struct Encoder<'a, 's> {
    fs: IndexedFS,
    store: &'s mut Store,
    decls: BTreeMap<u32, &'a Avm>,
    tags: BTreeMap<u32, NodeIndex>,
    open: BTreeSet<u32>,
}

impl<'a> Encoder<'a, '_> {
    fn node(&mut self, avm: &'a Avm, tag: Option<u32>) -> Result<NodeIndex, FsError> {
        let idx = self.fs.fresh_node();
        if let Some(t) = tag {
            self.tags.insert(t, idx);
            self.open.insert(t);
        }
        let mut names = BTreeSet::new();
        for f in &avm.features {
            if !names.insert(f.name.as_str()) {
                return Err(FsError::DuplicateFeature(f.name.clone()));
            }
            let value = self.value(f)?;
            let status = self.store.new_bool();
            if let Some(b) = f.status.and_then(BoolStatus::as_bool) {
                self.store.tell(Constraint::fix_bool(status, b))?;
            }
            self.fs.groups[idx - 1].push(Cell {
                feature: Arc::from(f.name.as_str()),
                owner: idx,
                value,
                status,
            });
        }
        if let Some(t) = tag {
            self.open.remove(&t);
        }
        Ok(idx)
    }

    fn tagged(&mut self, t: u32) -> Result<NodeIndex, FsError> {
        if self.open.contains(&t) {
            return Err(FsError::Cyclic);
        }
        if let Some(k) = self.tags.get(&t) {
            return Ok(*k);
        }
        match self.decls.get(&t).copied() {
            Some(body) => self.node(body, Some(t)),
            None => {
                static EMPTY: Avm = Avm {
                    tag: None,
                    features: Vec::new(),
                };
                self.node(&EMPTY, Some(t))
            }
        }
    }

    fn sub(&mut self, v: &'a AvmValue) -> Result<NodeIndex, FsError> {
        match v {
            AvmValue::Node(a) => match a.tag {
                Some(t) => self.tagged(t),
                None => self.node(a, None),
            },
            AvmValue::Ref(t) => self.tagged(*t),
            _ => Err(FsError::AtomInList),
        }
    }

    fn value(&mut self, f: &'a Feature) -> Result<CellValue, FsError> {
        Ok(match &f.value {
            AvmValue::Atom(a) => CellValue::Atom(Value::sym(a)),
            AvmValue::Empty => CellValue::None,
            AvmValue::List(xs) => {
                if !is_list_feature(&f.name) {
                    return Err(FsError::NotListValued(f.name.clone()));
                }
                let mut ks = Vec::with_capacity(xs.len());
                for x in xs {
                    ks.push(self.sub(x)?);
                }
                CellValue::List(ks)
            }
            v => CellValue::Ref(self.sub(v)?),
        })
    }
}

struct Decoder<'a> {
    fs: &'a IndexedFS,
    store: &'a Store,
    refs: BTreeMap<NodeIndex, usize>,
    tags: BTreeMap<NodeIndex, u32>,
}

impl Decoder<'_> {
    fn node(&mut self, n: NodeIndex) -> Avm {
        let mut avm = Avm::default();
        for c in self.fs.group(n) {
            let value = match &c.value {
                CellValue::Atom(a) => AvmValue::Atom(a.to_string()),
                CellValue::None => AvmValue::Empty,
                CellValue::Ref(k) => self.sub(self.fs.find(*k)),
                CellValue::List(ks) => AvmValue::List(ks.iter().map(|k| self.sub(self.fs.find(*k))).collect()),
            };
            let status = match self.store.status(c.status) {
                BoolStatus::Unknown => None,
                s => Some(s),
            };
            avm.features.push(Feature {
                name: c.feature.to_string(),
                value,
                status,
            });
        }
        avm
    }

    fn sub(&mut self, k: NodeIndex) -> AvmValue {
        if let Some(t) = self.tags.get(&k) {
            return AvmValue::Ref(*t);
        }
        let shared = self.refs.get(&k).copied().unwrap_or(0) > 1;
        let tag = if shared {
            let t = self.tags.len() as u32 + 1;
            self.tags.insert(k, t);
            Some(t)
        } else {
            None
        };
        let mut a = self.node(k);
        a.tag = tag;
        AvmValue::Node(a)
    }
}
