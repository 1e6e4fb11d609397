use std::collections::{BTreeMap, BTreeSet};

use super::HpsgError;
use crate::constraints::{all_distinct, bool_post, element, BoolFormula, Constraint};
use crate::fs::{CellValue, IndexedFS, NewCell, NodeIndex, Path, PatternCell};
use crate::grammar::{CatId, Fcr, FcrExpr, Frame, Grammar};
use crate::solver::{AskId, Entailment, Store, StoreError, VarId};
use crate::Value;

// ---- local trees ------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDaughter {
    pub cat: CatId,
    /// Sign reference; two daughters with the same one are the same sign.
    pub sign: u32,
    pub subj: Vec<CatId>,
    pub comps: Vec<CatId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalTree {
    pub root: CatId,
    pub daughters: Vec<TreeDaughter>,
    /// False when the rule opts out of constituent unicity.
    pub unicity: bool,
    /// Mother SUBJ and COMPS when already known.
    pub mother_lists: Option<(Vec<CatId>, Vec<CatId>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// 5 unicity, 6 LP, 7 dominance, 8 valency, 9 projection.
    pub constraint: u8,
    pub msg: String,
}

/// How the sisters of the head are realized.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Roles {
    pub head: Option<usize>,
    pub subj: Vec<usize>,
    pub comps: Vec<usize>,
    pub adj: Vec<usize>,
}

/// The frame head if it is among the daughters, else the first daughter
/// projecting to the root.
pub fn head_daughter(root: CatId, cats: &[CatId], g: &Grammar) -> Option<usize> {
    if let Some(f) = g.frame(root) {
        if let Some(i) = cats.iter().position(|c| *c == f.head) {
            return Some(i);
        }
    }
    cats.iter().position(|c| g.projection(*c) == Some(root))
}

/// Sisters whose category is wanted on the head's COMPS are complements,
/// otherwise on its SUBJ subjects; the rest are adjuncts.
pub fn roles(t: &LocalTree, g: &Grammar) -> Roles {
    let cats: Vec<CatId> = t.daughters.iter().map(|d| d.cat).collect();
    let head = head_daughter(t.root, &cats, g);
    let mut r = Roles {
        head,
        ..Roles::default()
    };
    for (i, d) in t.daughters.iter().enumerate() {
        if Some(i) == head {
            continue;
        }
        match head.map(|h| &t.daughters[h]) {
            Some(h) if h.comps.contains(&d.cat) => r.comps.push(i),
            Some(h) if h.subj.contains(&d.cat) => r.subj.push(i),
            _ => r.adj.push(i),
        }
    }
    r
}

/// Removes one occurrence of each of `realized` from `list`.
fn multiset_minus(list: &[CatId], realized: &[CatId]) -> Option<Vec<CatId>> {
    let mut rest = list.to_vec();
    for c in realized {
        let i = rest.iter().position(|x| x == c)?;
        rest.remove(i);
    }
    Some(rest)
}

fn sorted(mut v: Vec<CatId>) -> Vec<CatId> {
    v.sort();
    v
}

pub fn check_local_tree(t: &LocalTree, g: &Grammar) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |constraint: u8, msg: String| out.push(Violation { constraint, msg });
    let ds = &t.daughters;
    let name = |c: CatId| g.name(c).to_string();

    if t.unicity {
        for i in 0..ds.len() {
            for j in i + 1..ds.len() {
                if ds[i].cat == ds[j].cat && ds[i].sign == ds[j].sign {
                    fail(5, format!("daughters {i} and {j} are the same {}", name(ds[i].cat)));
                }
            }
        }
    }

    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            if !g.lp_ok(ds[i].cat, ds[j].cat) {
                fail(6, format!("{} may not precede {}", name(ds[i].cat), name(ds[j].cat)));
            }
        }
    }

    match g.legal_daughters(t.root) {
        Ok(legal) => {
            for d in ds.iter().filter(|d| !legal.contains(&d.cat)) {
                fail(
                    7,
                    format!("{} is not a legal daughter of {}", name(d.cat), name(t.root)),
                );
            }
        }
        Err(e) => fail(7, e.to_string()),
    }

    let r = roles(t, g);
    if let Some(h) = r.head {
        let cats = |ix: &[usize]| ix.iter().map(|i| ds[*i].cat).collect::<Vec<_>>();
        let subj = multiset_minus(&ds[h].subj, &cats(&r.subj));
        let comps = multiset_minus(&ds[h].comps, &cats(&r.comps));
        match (subj, comps) {
            (Some(s), Some(c)) => {
                if let Some((ms, mc)) = &t.mother_lists {
                    if sorted(ms.clone()) != sorted(s) || sorted(mc.clone()) != sorted(c) {
                        fail(
                            8,
                            format!(
                                "mother valency of {} does not cancel the realized sisters",
                                name(t.root)
                            ),
                        );
                    }
                }
            }
            _ => fail(8, format!("head {} is over-saturated", name(ds[h].cat))),
        }
    }

    let projections: BTreeSet<CatId> = ds.iter().filter_map(|d| g.projection(d.cat)).collect();
    // Nothing to check when the grammar says nothing about projection here.
    let declared = !projections.is_empty() || g.frame(t.root).is_some();
    if declared && !projections.contains(&t.root) {
        fail(9, format!("{} projects from none of its daughters", name(t.root)));
    }
    out
}

// ---- unicity ----------------------------------------------------------

/// The canonical daughters record; list slots hold sign references in
/// surface order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DtrsSchema {
    pub head: Option<u32>,
    pub filler: Option<u32>,
    pub marker: Option<u32>,
    pub subj: Vec<u32>,
    pub comps: Vec<u32>,
    pub conj: Vec<u32>,
    pub adj: Vec<u32>,
}

impl DtrsSchema {
    pub fn occupied(&self) -> Vec<u32> {
        let mut out: Vec<u32> = [self.head, self.filler, self.marker].into_iter().flatten().collect();
        for l in [&self.subj, &self.comps, &self.conj, &self.adj] {
            out.extend(l.iter().copied());
        }
        out
    }
}

/// Posts pairwise distinctness over one variable per occupied slot, then
/// binds the slots. Returns whether the store is still consistent.
pub fn post_unicity(s: &DtrsSchema, store: &mut Store) -> Result<bool, StoreError> {
    let refs = s.occupied();
    let universe: BTreeSet<i64> = refs.iter().map(|r| *r as i64).collect();
    let slots: Vec<VarId> = refs
        .iter()
        .map(|_| store.new_closed_var(universe.iter().copied()))
        .collect();
    if !store.tell(all_distinct(slots.iter().copied()))? {
        return Ok(false);
    }
    for (v, r) in slots.iter().zip(&refs) {
        if !store.tell(Constraint::equals(*v, *r as i64))? {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---- subcategorization ------------------------------------------------

/// Well-formedness variables of one local tree: the phrase and each member
/// of the frame's `M`.
#[derive(Clone, Debug)]
pub struct WfVars {
    pub phrase: VarId,
    pub members: BTreeMap<CatId, VarId>,
}

/// Posts `phrase => c` for every compulsory `c`, the conjunction of the
/// selected schema, and restricts each complement variable to `M - {head}`.
pub fn post_subcat(
    frame: &Frame,
    schema: Option<usize>,
    wf: &WfVars,
    complements: &[VarId],
    store: &mut Store,
) -> Result<bool, StoreError> {
    let member = |c: &CatId| BoolFormula::var(wf.members[c]);
    let mut cs = Vec::new();
    for c in &frame.c {
        cs.push(bool_post(BoolFormula::implies(BoolFormula::var(wf.phrase), member(c))));
    }
    if let Some(s) = schema.and_then(|i| frame.schemata.get(i)) {
        if !s.is_empty() {
            cs.push(bool_post(BoolFormula::and(s.iter().map(member))));
        }
    }
    let allowed: Vec<i64> = frame
        .m
        .iter()
        .filter(|c| **c != frame.head)
        .map(|c| c.0 as i64)
        .collect();
    for x in complements {
        cs.push(element(*x, allowed.iter().copied()));
    }
    store.tell_all(cs)
}

// ---- FCRs -------------------------------------------------------------

/// Status variable of `feature` on `node`, adding a value-less placeholder
/// cell when the feature is absent.
pub fn status_handle(
    fs: &mut IndexedFS,
    store: &mut Store,
    node: NodeIndex,
    feature: &str,
) -> Result<VarId, HpsgError> {
    if fs.cell(node, feature).is_none() {
        fs.add(
            store,
            vec![NewCell {
                feature: feature.to_string(),
                owner: node,
                value: CellValue::None,
                status: None,
            }],
        )?;
    }
    Ok(fs.cell(node, feature).expect("cell installed").status)
}

/// Compiles `f` over the cells of `node`: a bare literal is the cell's
/// status, `F[v]` is the status conjoined with the value test.
pub fn compile_fcr(
    f: &Fcr,
    fs: &mut IndexedFS,
    store: &mut Store,
    node: NodeIndex,
    alphabet: &BTreeSet<String>,
) -> Result<BoolFormula, HpsgError> {
    for feat in f.features() {
        if !alphabet.is_empty() && !alphabet.contains(&feat) {
            return Err(HpsgError::UnknownFeature(feat.to_ascii_uppercase()));
        }
    }
    let a = compile_expr(&f.antecedent, fs, store, node)?;
    let c = compile_expr(&f.consequent, fs, store, node)?;
    Ok(BoolFormula::implies(a, c))
}

fn compile_expr(e: &FcrExpr, fs: &mut IndexedFS, store: &mut Store, node: NodeIndex) -> Result<BoolFormula, HpsgError> {
    Ok(match e {
        FcrExpr::Lit { feature, value } => {
            let status = BoolFormula::var(status_handle(fs, store, node, feature)?);
            match value {
                None => status,
                Some(v) => {
                    let test = match &fs.cell(node, feature).expect("cell installed").value {
                        CellValue::Atom(a) => BoolFormula::Const(a.to_string().eq_ignore_ascii_case(v)),
                        CellValue::None => BoolFormula::var(store.new_bool()),
                        _ => BoolFormula::Const(false),
                    };
                    BoolFormula::and([status, test])
                }
            }
        }
        FcrExpr::Not(x) => BoolFormula::not(compile_expr(x, fs, store, node)?),
        FcrExpr::And(xs) => BoolFormula::and(
            xs.iter()
                .map(|x| compile_expr(x, fs, store, node))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        FcrExpr::Or(xs) => BoolFormula::or(
            xs.iter()
                .map(|x| compile_expr(x, fs, store, node))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    })
}

// ---- head feature principle -------------------------------------------

/// Source pattern of the HFP: the mother's CAT with its valency cells and
/// the head daughter's path down to HEAD. The mother's HEAD is the target.
pub fn hfp_pattern() -> Vec<PatternCell> {
    [
        ("SYNSEM", "a", "a1", "f1"),
        ("LOC", "a1", "a2", "f2"),
        ("CAT", "a2", "a3", "f3"),
        ("SUBJ", "a3", "a5", "f5"),
        ("COMPS", "a3", "a6", "f6"),
        ("DTRS", "a", "a8", "f8"),
        ("HEAD_DTR", "a8", "a9", "f9"),
        ("SYNSEM", "a9", "a10", "f10"),
        ("LOC", "a10", "a11", "f11"),
        ("CAT", "a11", "a12", "f12"),
        ("HEAD", "a12", "a4", "f4"),
    ]
    .into_iter()
    .map(|(f, o, v, s)| PatternCell::new(f, o, v, s))
    .collect()
}

#[derive(Debug)]
pub enum Hfp {
    /// No headed structure at the root.
    Vacuous,
    Applied,
    /// Guard not yet entailed; see [`HfpPending::try_complete`].
    Pending(HfpPending),
}

#[derive(Clone, Copy, Debug)]
pub struct HfpPending {
    pub ask: AskId,
    pub mother_cat: NodeIndex,
    pub head: NodeIndex,
    pub status: VarId,
}

impl HfpPending {
    /// Installs the mother's HEAD once the guard is entailed.
    pub fn try_complete(&self, fs: &mut IndexedFS, store: &mut Store) -> Result<bool, HpsgError> {
        if store.ask_status(self.ask) != Entailment::Entailed {
            return Ok(false);
        }
        fs.add(
            store,
            vec![NewCell {
                feature: "head".into(),
                owner: self.mother_cat,
                value: CellValue::Ref(self.head),
                status: Some(self.status),
            }],
        )?;
        Ok(true)
    }
}

/// Matches the HFP pattern at `root`, posts the status implication and
/// watches its guard; the shared HEAD is added as soon as the guard holds.
pub fn apply_hfp(fs: &mut IndexedFS, store: &mut Store, root: NodeIndex) -> Result<Hfp, HpsgError> {
    let Some(b) = fs.delta(&hfp_pattern(), &[("a", root)]) else {
        return Ok(Hfp::Vacuous);
    };
    let f = |n: &str| BoolFormula::var(b.status(n).expect("bound status"));
    let guard = BoolFormula::and(["f1", "f2", "f3", "f4", "f5", "f6", "f8", "f9"].map(f));
    if !store.tell(bool_post(BoolFormula::implies(guard.clone(), f("f10"))))? {
        return Err(HpsgError::Inconsistent("head feature principle".into()));
    }
    let pending = HfpPending {
        ask: store.watch(Constraint::Bool(guard))?,
        mother_cat: b.index("a3").expect("bound index"),
        head: b.index("a4").expect("bound index"),
        status: b.status("f4").expect("bound status"),
    };
    if pending.try_complete(fs, store)? {
        Ok(Hfp::Applied)
    } else {
        Ok(Hfp::Pending(pending))
    }
}

// ---- valency ----------------------------------------------------------

fn refs_at(fs: &IndexedFS, node: NodeIndex, path: &str) -> Vec<NodeIndex> {
    match fs.lookup_from(node, &Path::parse(path)).map(|c| fs.resolved(&c.value)) {
        Some(CellValue::List(ks)) => ks,
        _ => Vec::new(),
    }
}

fn label(fs: &IndexedFS, node: NodeIndex) -> Option<Value> {
    match &fs.cell(node, "label")?.value {
        CellValue::Atom(v) => Some(v.clone()),
        _ => None,
    }
}

/// Sets the mother's SUBJ and COMPS to the head daughter's lists with the
/// realized daughters cancelled off their end.
pub fn apply_valency(fs: &mut IndexedFS, store: &mut Store, root: NodeIndex) -> Result<(), HpsgError> {
    let Some(head) = fs.lookup_node_from(root, &Path::parse("dtrs.head-dtr")) else {
        return Ok(());
    };
    let cat = fs
        .lookup_node_from(root, &Path::parse("synsem.loc.cat"))
        .ok_or_else(|| HpsgError::Inconsistent("mother has no synsem.loc.cat".into()))?;
    let mut cells = Vec::new();
    for (list, dtrs) in [("subj", "dtrs.subj-dtr"), ("comps", "dtrs.comp-dtrs")] {
        let wanted = refs_at(fs, head, &format!("synsem.loc.cat.{list}"));
        let realized = refs_at(fs, root, dtrs);
        if realized.len() > wanted.len() {
            return Err(HpsgError::OverSaturated(list.to_ascii_uppercase()));
        }
        let keep = wanted.len() - realized.len();
        for (w, r) in wanted[keep..].iter().zip(&realized) {
            if label(fs, *w) != label(fs, *r) {
                return Err(HpsgError::Inconsistent(format!(
                    "{list}: realized daughter does not match"
                )));
            }
        }
        cells.push(NewCell {
            feature: list.into(),
            owner: cat,
            value: CellValue::List(wanted[..keep].to_vec()),
            status: None,
        });
    }
    fs.add(store, cells)?;
    Ok(())
}
