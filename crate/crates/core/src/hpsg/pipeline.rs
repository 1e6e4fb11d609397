use std::rc::Rc;

use super::principles::{
    apply_hfp, apply_valency, check_local_tree, compile_fcr, post_subcat, post_unicity, roles, DtrsSchema, LocalTree,
    WfVars,
};
use super::{HpsgError, Sign};
use crate::cfg::{parse_with, Derivation, ParseOptions, ParseStats, Reducer, Step, Strategy};
use crate::constraints::{bool_post, BoolFormula, Constraint};
use crate::fs::{CellValue, IndexedFS, NewCell, NodeIndex, Path};
use crate::grammar::{CatId, Grammar, GrammarError, LexEntry};
use crate::solver::{BoolStatus, Store, VarId};
use crate::Value;

#[derive(Clone, Debug)]
pub struct Analysis {
    pub derivation: Derivation,
    /// Categories of the lexical signs the derivation starts from.
    pub categories: Vec<CatId>,
    /// The root sign, compacted.
    pub sign: IndexedFS,
    pub dump: String,
    pub wf: Vec<(CatId, BoolStatus)>,
}

impl Analysis {
    pub fn wf_line(&self, g: &Grammar) -> String {
        let parts: Vec<String> = self
            .wf
            .iter()
            .map(|(c, s)| format!("{}:{}", g.name(*c), s.letter()))
            .collect();
        format!("WF {}", parts.join(" "))
    }

    /// Derivation line, sign dump, then the `WF` line.
    pub fn show(&self, g: &Grammar) -> String {
        format!("{}\n{}{}\n", self.derivation.show(g), self.dump, self.wf_line(g))
    }
}

#[derive(Clone, Debug, Default)]
pub struct HpsgResult {
    pub analyses: Vec<Analysis>,
    pub stats: ParseStats,
}

/// Lexicon entries for `word`; a category name with no entry of its own
/// stands for a bare sign of that category.
pub fn lexical_choices(word: &str, g: &Grammar) -> Result<Vec<LexEntry>, GrammarError> {
    let found: Vec<LexEntry> = g.entries(word).cloned().collect();
    if !found.is_empty() {
        return Ok(found);
    }
    match g.cat(word) {
        Some(category) => Ok(vec![LexEntry {
            form: word.to_string(),
            category,
            avm: Default::default(),
            subj: Vec::new(),
            comps: Vec::new(),
            schema: None,
            line: 0,
        }]),
        None => Err(GrammarError::UnknownWord(word.to_string())),
    }
}

fn true_var(store: &mut Store) -> Result<VarId, HpsgError> {
    let v = store.new_bool();
    store.tell(Constraint::fix_bool(v, true))?;
    Ok(v)
}

/// Collects cells for one [`IndexedFS::add`], allocating fresh indices in
/// the order `add` will create them.
struct Builder {
    cells: Vec<NewCell>,
    next: NodeIndex,
}

impl Builder {
    fn new(fs: &IndexedFS) -> Builder {
        Builder {
            cells: Vec::new(),
            next: fs.len() + 1,
        }
    }

    fn fresh(&mut self) -> NodeIndex {
        let k = self.next;
        self.next += 1;
        k
    }

    fn put(&mut self, store: &mut Store, owner: NodeIndex, feature: &str, value: CellValue) -> Result<(), HpsgError> {
        self.cells.push(NewCell {
            feature: feature.to_string(),
            owner,
            value,
            status: Some(true_var(store)?),
        });
        Ok(())
    }

    /// `synsem.loc.cat` below `owner`; returns the CAT node.
    fn spine(&mut self, store: &mut Store, owner: NodeIndex) -> Result<NodeIndex, HpsgError> {
        let mut node = owner;
        for f in ["synsem", "loc", "cat"] {
            let k = self.fresh();
            self.put(store, node, f, CellValue::Ref(k))?;
            node = k;
        }
        Ok(node)
    }

    fn requirements(&mut self, store: &mut Store, g: &Grammar, cats: &[CatId]) -> Result<Vec<NodeIndex>, HpsgError> {
        let mut out = Vec::new();
        for c in cats {
            let k = self.fresh();
            self.put(store, k, "label", CellValue::Atom(Value::sym(g.name(*c))))?;
            out.push(k);
        }
        Ok(out)
    }

    fn finish(self, fs: &mut IndexedFS, store: &mut Store) -> Result<(), HpsgError> {
        fs.add(store, self.cells)?;
        Ok(())
    }
}

fn labels(fs: &IndexedFS, g: &Grammar, path: &str) -> Vec<CatId> {
    let Some(CellValue::List(ks)) = fs.lookup(&Path::parse(path)).map(|c| fs.resolved(&c.value)) else {
        return Vec::new();
    };
    ks.iter()
        .filter_map(|k| match &fs.cell(*k, "label")?.value {
            CellValue::Atom(v) => g.cat(&v.to_string()),
            _ => None,
        })
        .collect()
}

/// Builds the leaf sign of `entry` and posts the grammar's FCRs on its HEAD.
/// An FCR violated by the entry itself is an error.
pub fn lexical_sign(entry: &LexEntry, g: &Grammar, store: &mut Store, id: u32) -> Result<Sign, HpsgError> {
    let head_fs = IndexedFS::encode(&entry.avm, store)?;
    let mut fs = IndexedFS::new();
    let head = fs.embed(&head_fs);
    let mut b = Builder::new(&fs);
    b.put(store, 1, "label", CellValue::Atom(Value::sym(g.name(entry.category))))?;
    let cat = b.spine(store, 1)?;
    b.put(store, cat, "head", CellValue::Ref(head))?;
    let subj = b.requirements(store, g, &entry.subj)?;
    let comps = b.requirements(store, g, &entry.comps)?;
    b.put(store, cat, "subj", CellValue::List(subj))?;
    b.put(store, cat, "comps", CellValue::List(comps))?;
    b.finish(&mut fs, store)?;
    for d in &g.fcrs {
        let f = compile_fcr(&d.fcr, &mut fs, store, head, &g.features)?;
        if !store.tell(bool_post(f))? {
            return Err(HpsgError::Inconsistent(format!("{} violates {}", entry.form, d.fcr)));
        }
    }
    let wf = true_var(store)?;
    Ok(Sign {
        id,
        cat: entry.category,
        fs,
        wf,
        subj: entry.subj.clone(),
        comps: entry.comps.clone(),
        schema: entry.schema,
        lexical: true,
        wf_log: vec![(entry.category, wf)],
    })
}

/// One reduction: gates the local tree, builds the mother with its DTRS,
/// then applies unicity, HFP, valency and the subcategorization booleans.
pub fn combine(
    g: &Grammar,
    store: &mut Store,
    lhs: CatId,
    daughters: &[&Sign],
    unicity: bool,
    id: u32,
) -> Result<Sign, HpsgError> {
    let tree = LocalTree {
        root: lhs,
        daughters: daughters.iter().map(|d| d.as_daughter()).collect(),
        unicity,
        mother_lists: None,
    };
    let violations = check_local_tree(&tree, g);
    if !violations.is_empty() {
        return Err(HpsgError::Rejected(violations));
    }
    let r = roles(&tree, g);

    let mut fs = IndexedFS::new();
    let roots: Vec<NodeIndex> = daughters.iter().map(|d| fs.embed(&d.fs)).collect();
    let mut b = Builder::new(&fs);
    b.put(store, 1, "label", CellValue::Atom(Value::sym(g.name(lhs))))?;
    let cat = b.spine(store, 1)?;
    // Valency fills these in from the head; a headless phrase selects nothing.
    let lists = if r.head.is_some() {
        CellValue::None
    } else {
        CellValue::List(Vec::new())
    };
    b.put(store, cat, "subj", lists.clone())?;
    b.put(store, cat, "comps", lists)?;
    let dtrs = b.fresh();
    b.put(store, 1, "dtrs", CellValue::Ref(dtrs))?;
    if let Some(h) = r.head {
        b.put(store, dtrs, "head-dtr", CellValue::Ref(roots[h]))?;
    }
    for (feature, ix) in [("subj-dtr", &r.subj), ("comp-dtrs", &r.comps), ("adj-dtrs", &r.adj)] {
        if !ix.is_empty() {
            b.put(
                store,
                dtrs,
                feature,
                CellValue::List(ix.iter().map(|i| roots[*i]).collect()),
            )?;
        }
    }
    b.finish(&mut fs, store)?;

    let ids = |ix: &[usize]| ix.iter().map(|i| daughters[*i].id).collect::<Vec<_>>();
    let schema = DtrsSchema {
        head: r.head.map(|h| daughters[h].id),
        subj: ids(&r.subj),
        comps: ids(&r.comps),
        adj: ids(&r.adj),
        ..DtrsSchema::default()
    };
    if unicity && !post_unicity(&schema, store)? {
        return Err(HpsgError::Inconsistent("unicity".into()));
    }

    apply_hfp(&mut fs, store, 1)?;
    apply_valency(&mut fs, store, 1)?;

    let wf = true_var(store)?;
    if let Some(frame) = g.frame(lhs) {
        let mut members = std::collections::BTreeMap::new();
        for m in &frame.m {
            let v = store.new_bool();
            let realized: Vec<BoolFormula> = daughters
                .iter()
                .filter(|d| d.cat == *m)
                .map(|d| BoolFormula::var(d.wf))
                .collect();
            let def = if realized.is_empty() {
                Constraint::fix_bool(v, false)
            } else {
                bool_post(BoolFormula::equiv(BoolFormula::var(v), BoolFormula::and(realized)))
            };
            store.tell(def)?;
            members.insert(*m, v);
        }
        let selected = r
            .head
            .map(|h| daughters[h])
            .filter(|h| h.lexical && g.frame_headed_by(h.cat).is_some_and(|f| f.phrase == lhs))
            .and_then(|h| h.schema);
        let all: Vec<i64> = (0..g.num_categories() as i64).collect();
        let mut complements = Vec::new();
        for (i, d) in daughters.iter().enumerate() {
            if Some(i) != r.head {
                let x = store.new_closed_var(all.iter().copied());
                complements.push((x, d.cat));
            }
        }
        let vars: Vec<VarId> = complements.iter().map(|(x, _)| *x).collect();
        let ok = post_subcat(frame, selected, &WfVars { phrase: wf, members }, &vars, store)?
            && store.tell_all(complements.iter().map(|(x, c)| Constraint::equals(*x, c.0 as i64)))?;
        if !ok {
            return Err(HpsgError::Inconsistent(format!("subcategorization of {}", g.name(lhs))));
        }
    }

    let mut wf_log = vec![(lhs, wf)];
    for d in daughters {
        wf_log.extend(d.wf_log.iter().copied());
    }
    Ok(Sign {
        id,
        cat: lhs,
        subj: labels(&fs, g, "synsem.loc.cat.subj"),
        comps: labels(&fs, g, "synsem.loc.cat.comps"),
        fs,
        wf,
        schema: None,
        lexical: false,
        wf_log,
    })
}

struct HpsgReducer<'g> {
    g: &'g Grammar,
    active: bool,
    leaves: Vec<Rc<Sign>>,
    stack: Vec<Rc<Sign>>,
    undo: Vec<(crate::solver::Snapshot, usize, Vec<Rc<Sign>>)>,
    next_id: u32,
    analyses: Vec<Analysis>,
}

impl<'g> HpsgReducer<'g> {
    fn new(g: &'g Grammar, active: bool, leaves: Vec<Rc<Sign>>, next_id: u32) -> Self {
        HpsgReducer {
            g,
            active,
            stack: leaves.clone(),
            leaves,
            undo: Vec::new(),
            next_id,
            analyses: Vec::new(),
        }
    }

    fn record(&mut self, store: &Store, d: &Derivation) -> bool {
        let root = &self.stack[0];
        if !root.is_saturated() {
            return false;
        }
        let sign = root.fs.compacted();
        self.analyses.push(Analysis {
            derivation: d.clone(),
            categories: self.leaves.iter().map(|s| s.cat).collect(),
            dump: sign.dump_with_status(store),
            sign,
            wf: root.wf_log.iter().map(|(c, v)| (*c, store.status(*v))).collect(),
        });
        true
    }
}

impl Reducer for HpsgReducer<'_> {
    fn reduce(&mut self, store: &mut Store, step: &Step, rule: usize) -> bool {
        if !self.active {
            return true;
        }
        let snap = store.snapshot();
        let end = step.pos + step.rhs.len();
        let daughters: Vec<&Sign> = self.stack[step.pos..end].iter().map(|s| s.as_ref()).collect();
        self.next_id += 1;
        match combine(
            self.g,
            store,
            step.lhs,
            &daughters,
            self.g.rules[rule].unicity,
            self.next_id,
        ) {
            Ok(mother) => {
                let removed = self.stack.splice(step.pos..end, [Rc::new(mother)]).collect();
                self.undo.push((snap, step.pos, removed));
                true
            }
            Err(_) => {
                store.restore(snap).expect("live snapshot");
                false
            }
        }
    }

    fn undo(&mut self, store: &mut Store) {
        if !self.active {
            return;
        }
        let (snap, pos, removed) = self.undo.pop().expect("matching reduce");
        self.stack.splice(pos..pos + 1, removed);
        store.restore(snap).expect("live snapshot");
    }

    fn accept(&mut self, store: &mut Store, d: &Derivation) -> bool {
        if self.active {
            return self.record(store, d);
        }
        // Generate and test: replay the finished derivation with every check.
        let mut replay = HpsgReducer::new(self.g, true, self.leaves.clone(), self.next_id);
        let mut applied = 0;
        let mut ok = true;
        for step in &d.steps {
            let rule = self
                .g
                .rules
                .iter()
                .position(|r| r.lhs == step.lhs && r.rhs == step.rhs)
                .expect("derivation uses grammar rules");
            if !replay.reduce(store, step, rule) {
                ok = false;
                break;
            }
            applied += 1;
        }
        ok = ok && replay.record(store, d);
        for _ in 0..applied {
            replay.undo(store);
        }
        self.next_id = replay.next_id;
        self.analyses.append(&mut replay.analyses);
        ok
    }
}

pub fn parse_hpsg(words: &[&str], g: &Grammar, opts: &ParseOptions) -> Result<HpsgResult, HpsgError> {
    parse_hpsg_with(words, g, opts, &mut Store::new())
}

/// Lexical insertion followed by the window parser with principles applied
/// at every reduction (or, with [`Strategy::Gentest`], on finished trees).
pub fn parse_hpsg_with(
    words: &[&str],
    g: &Grammar,
    opts: &ParseOptions,
    store: &mut Store,
) -> Result<HpsgResult, HpsgError> {
    let choices = words
        .iter()
        .map(|w| lexical_choices(w, g))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = HpsgResult::default();
    let mut pick = vec![0usize; choices.len()];
    loop {
        let remaining = opts.limit.map(|n| n.saturating_sub(out.analyses.len()));
        if remaining == Some(0) {
            break;
        }
        let snap = store.snapshot();
        let mut leaves = Vec::new();
        let mut id = 0;
        for (i, c) in pick.iter().enumerate() {
            id += 1;
            match lexical_sign(&choices[i][*c], g, store, id) {
                Ok(s) => leaves.push(Rc::new(s)),
                Err(HpsgError::Inconsistent(_)) => break,
                Err(e) => return Err(e),
            }
        }
        if leaves.len() == words.len() {
            let cats: Vec<CatId> = leaves.iter().map(|s| s.cat).collect();
            let mut r = HpsgReducer::new(g, opts.strategy == Strategy::Active, leaves, id);
            let sub = ParseOptions {
                strategy: opts.strategy,
                limit: remaining,
            };
            let res = parse_with(&cats, g, &sub, store, &mut r)?;
            add_stats(&mut out.stats, &res.stats);
            out.analyses.append(&mut r.analyses);
        }
        store.restore(snap)?;
        if !advance(&mut pick, &choices) {
            break;
        }
    }
    out.stats.counters = store.counters();
    Ok(out)
}

fn add_stats(total: &mut ParseStats, s: &ParseStats) {
    total.windows_tried += s.windows_tried;
    total.reductions_applied += s.reductions_applied;
    total.backtracks += s.backtracks;
    total.node_expansions += s.node_expansions;
}

/// Next combination of lexical choices, last word fastest.
fn advance(pick: &mut [usize], choices: &[Vec<LexEntry>]) -> bool {
    for i in (0..pick.len()).rev() {
        pick[i] += 1;
        if pick[i] < choices[i].len() {
            return true;
        }
        pick[i] = 0;
    }
    false
}
