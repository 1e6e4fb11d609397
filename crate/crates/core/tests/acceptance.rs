//! Acceptance criteria A1-A8. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clpnlp::cfg::{self, derivations_to_tree, oracle_parse, ParseOptions, Strategy as Search};
use clpnlp::constraints::{all_distinct, bool_post, element, structural, BoolFormula, Constraint, SupportTable, Term};
use clpnlp::fs::{Avm, AvmValue, CellValue, Feature, IndexedFS, NodeIndex, Path};
use clpnlp::grammar::{load_grammar, CatId, Fcr, Grammar, Level};
use clpnlp::hpsg::{self, apply_hfp, Hfp, HpsgError};
use clpnlp::solver::{BoolStatus, Store, VarId};
use clpnlp::Value;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

const TOY: &str = include_str!("../grammars/toy.grm");
const HPSG_TOY: &str = include_str!("../grammars/hpsg_toy.grm");
const A7_GRAMMARS: [(&str, &str); 3] = [
    ("anbn", include_str!("../grammars/anbn.grm")),
    ("expr", include_str!("../grammars/expr.grm")),
    ("clause", include_str!("../grammars/clause.grm")),
];

/// Wall-clock budget for A1.
const A1_BUDGET: Duration = Duration::from_secs(1);
/// Allowed spread of the per-constraint cost across n for A2.
const A2_RATIO_TOLERANCE: f64 = 0.10;
const A3_CASES: u32 = 200;
const A7_MAX_LEN: usize = 8;
const A8_CASES: u32 = 1000;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn main() {
    let checks: [(&str, Check); 8] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let r = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match r {
            Ok(detail) => println!("{name} PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{name} FAIL {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

// ---- A1 ---------------------------------------------------------------

fn a1() -> Outcome {
    let start = Instant::now();
    let g = load_grammar(TOY).map_err(|e| e.to_string())?;
    let input = g.categories_of("Det Nm Vb Det Nm Prep Nm").map_err(|e| e.to_string())?;
    let r = cfg::parse(&input, &g, &ParseOptions::default()).map_err(|e| e.to_string())?;
    let lines: BTreeSet<String> = r.derivations.iter().map(|d| d.show(&g)).collect();
    let tail = "<VP>, <Vb,NP,PP>, <S>, <NP,VP>>";
    let printed = [
        format!("<<NP>, <Det,Nm>, <NP>, <Det,Nm>, <NP>, <Nm>, <PP>, <Prep,NP>, {tail}"),
        format!("<<NP>, <Det,Nm>, <NP>, <Nm>, <NP>, <Det,Nm>, <PP>, <Prep,NP>, {tail}"),
        format!("<<NP>, <Det,Nm>, <NP>, <Nm>, <PP>, <Prep,NP>, <NP>, <Det,Nm>, {tail}"),
    ];
    for p in &printed {
        ensure(lines.contains(p), || format!("missing derivation {p}"))?;
    }
    ensure(lines.iter().all(|l| l.ends_with("<S>, <NP,VP>>")), || {
        "a derivation does not end in <S>, <NP,VP>".into()
    })?;
    let mut trees = BTreeSet::new();
    for d in &r.derivations {
        trees.insert(derivations_to_tree(d, &input).map_err(|e| e.to_string())?.show(&g));
    }
    ensure(trees.len() == 1, || format!("{} distinct trees", trees.len()))?;
    let elapsed = start.elapsed();
    ensure(elapsed < A1_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} derivations, 1 tree {}, {:.1} ms",
        r.derivations.len(),
        trees.iter().next().unwrap(),
        elapsed.as_secs_f64() * 1e3
    ))
}

// ---- A2 ---------------------------------------------------------------

/// Posts a structural constraint over `parents`, whose domains are
/// `0..sizes[i]`, with one open support set per parent tuple. Returns the
/// parents and the support sets.
fn chain(s: &mut Store, sizes: &[usize]) -> (Vec<VarId>, Vec<VarId>) {
    let parents: Vec<VarId> = sizes
        .iter()
        .map(|&m| {
            let v = s.new_open_set();
            s.extend_domain(v, 0..m as i64).unwrap();
            v
        })
        .collect();
    let mut tuples: Vec<Vec<Value>> = vec![vec![]];
    for &m in sizes {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                (0..m as i64).map(move |i| {
                    let mut t = t.clone();
                    t.push(Value::Int(i));
                    t
                })
            })
            .collect();
    }
    let mut supports = BTreeMap::new();
    let mut sets = Vec::new();
    for (k, t) in tuples.into_iter().enumerate() {
        let c = s.new_var([format!("n{k}")]);
        supports.insert(t, c);
        sets.push(c);
    }
    let target = s.new_open_set();
    let table = Arc::new(SupportTable {
        name: "r".into(),
        supports,
    });
    let terms = parents.iter().map(|v| Term::Var(*v)).collect();
    assert!(s.tell(structural(table, target, terms)).unwrap());
    (parents, sets)
}

/// Worst-case schedule: the parent domains complete, then every support
/// set completes one at a time, each event re-checking the constraint.
fn schedule(s: &mut Store, parents: &[VarId], sets: &[VarId]) {
    for v in parents.iter().chain(sets) {
        assert!(s.close_domain(*v).unwrap());
    }
}

fn law(m: u64) -> u64 {
    m * (m + 5) / 2
}

fn a2() -> Outcome {
    for m in 1..=8usize {
        let mut s = Store::new();
        let (p, sets) = chain(&mut s, &[m]);
        schedule(&mut s, &p, &sets);
        let got = s.counters().completeness_tests;
        ensure(got == law(m as u64), || {
            format!("binary m={m}: {got} tests, want {}", law(m as u64))
        })?;
    }
    for mv in 1..=3usize {
        for mw in 1..=3usize {
            let mut s = Store::new();
            let (p, sets) = chain(&mut s, &[mv, mw]);
            schedule(&mut s, &p, &sets);
            let got = s.counters().completeness_tests;
            let want = law((mv * mw) as u64);
            ensure(got == want, || format!("ternary ({mv},{mw}): {got} tests, want {want}"))?;
        }
    }
    let mut spreads = Vec::new();
    for m in [4usize, 8, 16] {
        let mut ratios = Vec::new();
        for n in [1usize, 2, 4, 8] {
            let mut s = Store::new();
            let chains: Vec<_> = (0..n).map(|_| chain(&mut s, &[m])).collect();
            for (p, sets) in &chains {
                schedule(&mut s, p, sets);
            }
            let total = s.counters().completeness_tests as f64;
            ratios.push(total / (n * m * m) as f64);
        }
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        ensure(hi / lo <= 1.0 + A2_RATIO_TOLERANCE, || {
            format!("m={m}: ratios {ratios:?}")
        })?;
        spreads.push(format!("m={m}:{:.3}", ratios[0]));
    }
    Ok(format!(
        "binary m=1..8 and ternary 3x3 exact; tests/(n m^2) flat in n ({})",
        spreads.join(" ")
    ))
}

// ---- A3 ---------------------------------------------------------------

const MATRIX: &str = "[cat:[head:[maj:n, case:nom]], content:[index:[gen:masc, num:sing]]]";
const MATRIX_GROUPS: &str = "[<cat, 1, 2>, <content, 1, 4>]\n\
                             [<head, 2, 3>]\n\
                             [<maj, 3, n>, <case, 3, nom>]\n\
                             [<index, 4, 5>]\n\
                             [<gen, 5, masc>, <num, 5, sing>]\n";

/// Value slot in a generated avm before sharing is resolved.
#[derive(Clone, Debug)]
enum Gen {
    Atom(String, Option<BoolStatus>),
    Node(Vec<(usize, Gen)>, Option<BoolStatus>),
    List(Vec<Gen>),
    Empty(BoolStatus),
    Shared(usize),
}

const FEATURES: [&str; 6] = ["cat", "head", "maj", "index", "num", "vform"];
const LISTS: [&str; 2] = ["subj", "comps"];
const ATOMS: [&str; 5] = ["n", "v", "sing", "plur", "fin"];

fn status() -> impl Strategy<Value = Option<BoolStatus>> {
    prop_oneof![Just(None), Just(Some(BoolStatus::True)), Just(Some(BoolStatus::False))]
}

fn gen_node() -> impl Strategy<Value = Gen> {
    let leaf = prop_oneof![
        4 => (0..ATOMS.len(), status()).prop_map(|(a, s)| Gen::Atom(ATOMS[a].into(), s)),
        1 => prop_oneof![Just(BoolStatus::True), Just(BoolStatus::False)].prop_map(Gen::Empty),
        2 => (0..3usize).prop_map(Gen::Shared),
    ];
    leaf.prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            3 => (proptest::collection::vec((0..FEATURES.len() + LISTS.len(), inner.clone()), 0..4), status())
                .prop_map(|(fs, s)| Gen::Node(fs, s)),
            1 => proptest::collection::vec(inner, 0..3).prop_map(Gen::List),
        ]
    })
}

/// Bodies of the shared nodes: flat atom-valued.
fn shared_body(i: usize) -> Vec<Feature> {
    vec![Feature {
        name: FEATURES[2 + i].into(),
        value: AvmValue::Atom(ATOMS[i].into()),
        status: None,
    }]
}

struct Realize {
    declared: BTreeSet<usize>,
    flip: Vec<bool>,
    k: usize,
}

impl Realize {
    fn coin(&mut self) -> bool {
        self.k += 1;
        self.flip[self.k % self.flip.len()]
    }

    fn node(&mut self, feats: &[(usize, Gen)]) -> Avm {
        let mut out = Avm::new();
        let mut seen = BTreeSet::new();
        for (fi, g) in feats {
            if !seen.insert(*fi) {
                continue;
            }
            let is_list = *fi >= FEATURES.len();
            let name = if is_list {
                LISTS[fi - FEATURES.len()]
            } else {
                FEATURES[*fi]
            };
            let (value, status) = if is_list {
                let items = match g {
                    Gen::List(xs) => xs.clone(),
                    other => vec![other.clone()],
                };
                let items = items
                    .iter()
                    .map(|x| match x {
                        Gen::Node(fs, _) => AvmValue::Node(self.node(fs)),
                        Gen::Shared(i) => self.shared(*i),
                        _ => AvmValue::Node(Avm::new()),
                    })
                    .collect();
                (AvmValue::List(items), None)
            } else {
                match g {
                    Gen::Atom(a, s) => (AvmValue::Atom(a.clone()), *s),
                    Gen::Node(fs, s) => (AvmValue::Node(self.node(fs)), *s),
                    Gen::List(_) => (AvmValue::Node(Avm::new()), None),
                    Gen::Empty(s) => (AvmValue::Empty, Some(*s)),
                    Gen::Shared(i) => (self.shared(*i), None),
                }
            };
            out.features.push(Feature {
                name: name.into(),
                value,
                status,
            });
        }
        out
    }

    /// First mention declares the tag; later ones either refer to it or
    /// repeat the declaration.
    fn shared(&mut self, i: usize) -> AvmValue {
        let tag = i as u32 + 1;
        if self.declared.insert(i) || self.coin() {
            AvmValue::Node(Avm {
                tag: Some(tag),
                features: shared_body(i),
            })
        } else {
            AvmValue::Ref(tag)
        }
    }
}

fn a3() -> Outcome {
    let mut s = Store::new();
    let fs = IndexedFS::encode(&Avm::parse(MATRIX).unwrap(), &mut s).map_err(|e| e.to_string())?;
    ensure(fs.dump() == MATRIX_GROUPS, || format!("matrix dump:\n{}", fs.dump()))?;

    let strategy = (
        proptest::collection::vec((0..FEATURES.len() + LISTS.len(), gen_node()), 0..5),
        proptest::collection::vec(any::<bool>(), 1..8),
    );
    let result = runner(A3_CASES).run(&strategy, |(feats, flip)| {
        let mut r = Realize {
            declared: BTreeSet::new(),
            flip,
            k: 0,
        };
        let avm = r.node(&feats);
        let mut s = Store::new();
        let fs = IndexedFS::encode(&avm, &mut s).map_err(|e| TestCaseError::fail(format!("{avm}: {e}")))?;
        let back = fs.decode(&s);
        prop_assert_eq!(&back, &avm.canonical(), "{}", avm);
        let again = IndexedFS::encode(&back, &mut s).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(again.dump(), fs.dump());
        Ok(())
    });
    result.map_err(|e| format!("round trip: {e}"))?;
    Ok(format!(
        "matrix groups exact; decode(encode(a)) = a on {A3_CASES} random avms"
    ))
}

// ---- A4 ---------------------------------------------------------------

fn a4() -> Outcome {
    let g = load_grammar(
        "features pform index maj.\nrule S -> P.\nlex \"to\" P [pform:to!T, maj:p].\nfcr PFORM -> ~INDEX.",
    )
    .map_err(|e| e.to_string())?;
    let entry = g.entries("to").next().unwrap().clone();
    let mut s = Store::new();
    let sign = hpsg::lexical_sign(&entry, &g, &mut s, 0).map_err(|e| e.to_string())?;
    let head = Path::parse("synsem.loc.cat.head");
    let node = sign.fs.lookup_node(&head).ok_or("no HEAD node")?;
    let index = sign.fs.cell(node, "index").ok_or("no INDEX cell")?.status;
    ensure(s.status(index) == BoolStatus::False, || {
        format!("INDEX status {:?}", s.status(index))
    })?;
    let told = s.tell(Constraint::fix_bool(index, true)).map_err(|e| e.to_string())?;
    ensure(!told, || "INDEX T was accepted".into())?;

    let bad = load_grammar("rule S -> P.\nlex \"to\" P [pform:to!T, index:i!T].\nfcr PFORM -> ~INDEX.").unwrap();
    let entry = bad.entries("to").next().unwrap().clone();
    let r = hpsg::lexical_sign(&entry, &bad, &mut Store::new(), 0);
    ensure(matches!(r, Err(HpsgError::Inconsistent(_))), || {
        format!("entry with INDEX T: {r:?}")
    })?;

    let texts = ["PFORM -> ~INDEX", "VFORM -> MAJ[V]", "+PRD | VFORM -> PAS | PRP"];
    let alphabet: BTreeSet<String> = ["pform", "index", "vform", "maj", "prd", "pas", "prp"]
        .map(String::from)
        .into();
    for t in texts {
        let f = Fcr::parse(t).map_err(|e| format!("{t}: {e}"))?;
        ensure(f.to_string() == t, || format!("{t} printed as {f}"))?;
        ensure(Fcr::parse(&f.to_string()).as_ref() == Ok(&f), || {
            format!("{t} reparses differently")
        })?;
        let mut s = Store::new();
        let mut fs = IndexedFS::encode(&Avm::parse("[maj:v]").unwrap(), &mut s).unwrap();
        let c = hpsg::compile_fcr(&f, &mut fs, &mut s, 1, &alphabet).map_err(|e| format!("{t}: {e}"))?;
        ensure(s.tell(bool_post(c)).unwrap(), || format!("{t} inconsistent on [maj:v]"))?;
    }
    Ok("PFORM T forces INDEX F; INDEX T then fails; 3 FCRs compile and round-trip".into())
}

// ---- A5 ---------------------------------------------------------------

const HEADED: &str = "[synsem:[loc:[cat:[subj:<>!T, comps:<>!T]!T]!T]!T, \
    dtrs:[head-dtr:[synsem:[loc:[cat:[head:[maj:v, vform:fin]!T]!T]!T]!T]!T]!T]";

fn a5() -> Outcome {
    let mut s = Store::new();
    let mut fs = IndexedFS::encode(&Avm::parse(HEADED).unwrap(), &mut s).unwrap();
    let applied = apply_hfp(&mut fs, &mut s, 1).map_err(|e| e.to_string())?;
    ensure(matches!(applied, Hfp::Applied), || format!("{applied:?}"))?;
    let mother = Path::parse("synsem.loc.cat.head");
    let daughter = Path::parse("dtrs.head-dtr.synsem.loc.cat.head");
    let (m, d) = (fs.lookup_node(&mother), fs.lookup_node(&daughter));
    ensure(m.is_some() && m == d, || format!("mother {m:?} daughter {d:?}"))?;
    fs.set_atom(&mother.join("vform"), Value::sym("bse"))
        .map_err(|e| e.to_string())?;
    let seen = fs.lookup(&daughter.join("vform")).map(|c| c.value.clone());
    ensure(seen == Some(CellValue::Atom(Value::sym("bse"))), || {
        format!("daughter sees {seen:?}")
    })?;
    fs.set_atom(&daughter.join("maj"), Value::sym("n"))
        .map_err(|e| e.to_string())?;
    let seen = fs.lookup(&mother.join("maj")).map(|c| c.value.clone());
    ensure(seen == Some(CellValue::Atom(Value::sym("n"))), || {
        format!("mother sees {seen:?}")
    })?;
    Ok(format!(
        "HEAD is node {} from both paths; writes visible both ways",
        m.unwrap()
    ))
}

// ---- A6 ---------------------------------------------------------------

fn labels(fs: &IndexedFS, node: NodeIndex, path: &str) -> Result<Vec<String>, String> {
    let cell = fs
        .lookup_from(node, &Path::parse(path))
        .ok_or_else(|| format!("no {path} at {node}"))?;
    match fs.resolved(&cell.value) {
        CellValue::List(ks) => ks
            .iter()
            .map(|k| match fs.cell(*k, "label").map(|c| fs.resolved(&c.value)) {
                Some(CellValue::Atom(v)) => Ok(v.to_string()),
                other => Err(format!("member {k} of {path} has label {other:?}")),
            })
            .collect(),
        other => Err(format!("{path} at {node} is {other:?}")),
    }
}

fn members(fs: &IndexedFS, node: NodeIndex, path: &str) -> Vec<NodeIndex> {
    match fs.lookup_from(node, &Path::parse(path)).map(|c| fs.resolved(&c.value)) {
        Some(CellValue::List(ks)) => ks,
        _ => vec![],
    }
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

/// Checks every phrase below `node`; returns how many were checked.
fn conserve(fs: &IndexedFS, node: NodeIndex) -> Result<usize, String> {
    let Some(head) = fs.lookup_node_from(node, &Path::parse("dtrs.head-dtr")) else {
        return Ok(0);
    };
    for (list, realized) in [("subj", "subj-dtr"), ("comps", "comp-dtrs")] {
        let mother = labels(fs, node, &format!("synsem.loc.cat.{list}"))?;
        let mut sum = mother.clone();
        let path = format!("dtrs.{realized}");
        if fs.lookup_from(node, &Path::parse(&path)).is_some() {
            sum.extend(labels(fs, node, &path)?);
        }
        let want = labels(fs, head, &format!("synsem.loc.cat.{list}"))?;
        ensure(sorted(sum.clone()) == sorted(want.clone()), || {
            format!("node {node} {list}: mother {mother:?} with realized gives {sum:?}, head has {want:?}")
        })?;
    }
    let mut n = 1 + conserve(fs, head)?;
    for list in ["dtrs.subj-dtr", "dtrs.comp-dtrs", "dtrs.adj-dtrs"] {
        for k in members(fs, node, list) {
            n += conserve(fs, k)?;
        }
    }
    Ok(n)
}

fn a6() -> Outcome {
    let g = load_grammar(HPSG_TOY).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for sentence in ["the cat sleeps", "mary sees the dog"] {
        let ws: Vec<&str> = sentence.split_whitespace().collect();
        let r = hpsg::parse_hpsg(&ws, &g, &ParseOptions::default()).map_err(|e| e.to_string())?;
        ensure(!r.analyses.is_empty(), || format!("no analysis for {sentence}"))?;
        for a in &r.analyses {
            let fs = &a.sign;
            let n = conserve(fs, 1)?;
            let steps = a.derivation.steps.len();
            ensure(n == steps, || {
                format!("{sentence}: checked {n} phrases, derivation has {steps} steps")
            })?;
            for list in ["subj", "comps"] {
                let l = labels(fs, 1, &format!("synsem.loc.cat.{list}"))?;
                ensure(l.is_empty(), || format!("{sentence}: root {list} {l:?}"))?;
            }
            detail.push(format!("'{sentence}' {n} reductions"));
        }
    }
    detail.dedup();
    Ok(format!("{}; roots saturated", detail.join(", ")))
}

// ---- A7 ---------------------------------------------------------------

fn terminals(g: &Grammar) -> Vec<CatId> {
    g.categories()
        .map(|(c, _)| c)
        .filter(|c| g.level(*c) == Level::Lexical)
        .collect()
}

fn a7() -> Outcome {
    let mut report = Vec::new();
    let mut strictly = 0usize;
    for (name, text) in A7_GRAMMARS {
        let g = load_grammar(text).map_err(|e| format!("{name}: {e}"))?;
        let alphabet = terminals(&g);
        let mut inputs = 0usize;
        let mut parsed = 0usize;
        let mut layer: Vec<Vec<CatId>> = vec![vec![]];
        for _ in 1..=A7_MAX_LEN {
            layer = layer
                .iter()
                .flat_map(|p| {
                    alphabet.iter().map(move |c| {
                        let mut q = p.clone();
                        q.push(*c);
                        q
                    })
                })
                .collect();
            for input in &layer {
                inputs += 1;
                let show = || g.show_seq(input);
                let active =
                    cfg::parse(input, &g, &ParseOptions::default()).map_err(|e| format!("{name} {}: {e}", show()))?;
                let gentest = cfg::parse(
                    input,
                    &g,
                    &ParseOptions {
                        strategy: Search::Gentest,
                        limit: None,
                    },
                )
                .map_err(|e| e.to_string())?;
                let oracle = oracle_parse(input, &g).map_err(|e| e.to_string())?;
                let a: BTreeSet<_> = active.derivations.iter().cloned().collect();
                let t: BTreeSet<_> = gentest.derivations.iter().cloned().collect();
                ensure(a.len() == active.derivations.len(), || {
                    format!("{name} {}: duplicate derivations", show())
                })?;
                ensure(a == oracle.derivations, || {
                    format!(
                        "{name} {}: {} derivations, oracle {}",
                        show(),
                        a.len(),
                        oracle.derivations.len()
                    )
                })?;
                ensure(t == oracle.derivations, || {
                    format!("{name} {}: gentest differs from oracle", show())
                })?;
                let (wa, wt) = (active.stats.windows_tried, gentest.stats.windows_tried);
                ensure(wa <= wt, || {
                    format!("{name} {}: active tried {wa} windows, gentest {wt}", show())
                })?;
                if !a.is_empty() {
                    parsed += 1;
                    if wa < wt {
                        strictly += 1;
                    }
                }
            }
        }
        report.push(format!("{name}: {inputs} inputs, {parsed} parsed"));
    }
    ensure(strictly > 0, || {
        "active never tried fewer windows on a parsed input".into()
    })?;
    Ok(format!(
        "{}; active strictly fewer windows on {strictly} parsed inputs",
        report.join(", ")
    ))
}

// ---- A8 ---------------------------------------------------------------

#[derive(Clone, Debug)]
enum C {
    Eq(usize, usize),
    Neq(usize, usize),
    NeqConst(usize, i64),
    Element(usize, Vec<i64>),
    Distinct(Vec<usize>),
    /// `x = a -> y != b`
    Imp(usize, i64, usize, i64),
    /// `x = a | y = b`
    Or(usize, i64, usize, i64),
}

impl C {
    fn post(&self, xs: &[VarId]) -> Constraint {
        match self {
            C::Eq(a, b) => Constraint::eq(xs[*a], xs[*b]),
            C::Neq(a, b) => Constraint::neq(xs[*a], xs[*b]),
            C::NeqConst(a, k) => Constraint::neq(xs[*a], *k),
            C::Element(a, ks) => element(xs[*a], ks.iter().copied()),
            C::Distinct(vs) => all_distinct(vs.iter().map(|v| xs[*v])),
            C::Imp(x, a, y, b) => bool_post(BoolFormula::implies(
                BoolFormula::is(xs[*x], *a),
                BoolFormula::not(BoolFormula::is(xs[*y], *b)),
            )),
            C::Or(x, a, y, b) => bool_post(BoolFormula::or([
                BoolFormula::is(xs[*x], *a),
                BoolFormula::is(xs[*y], *b),
            ])),
        }
    }

    /// Direct evaluation on a full assignment.
    fn holds(&self, t: &[i64]) -> bool {
        match self {
            C::Eq(a, b) => t[*a] == t[*b],
            C::Neq(a, b) => t[*a] != t[*b],
            C::NeqConst(a, k) => t[*a] != *k,
            C::Element(a, ks) => ks.contains(&t[*a]),
            C::Distinct(vs) => {
                let vals: BTreeSet<i64> = vs.iter().map(|v| t[*v]).collect();
                vals.len() == vs.len()
            }
            C::Imp(x, a, y, b) => t[*x] != *a || t[*y] != *b,
            C::Or(x, a, y, b) => t[*x] == *a || t[*y] == *b,
        }
    }
}

const MAX_VARS: usize = 4;
const MAX_VALUE: i64 = 5;

fn domains() -> impl Strategy<Value = Vec<BTreeSet<i64>>> {
    proptest::collection::vec(
        proptest::collection::btree_set(0..MAX_VALUE, 1..=MAX_VALUE as usize),
        1..=MAX_VARS,
    )
}

fn constraint(n: usize) -> impl Strategy<Value = C> {
    let v = 0..n;
    let k = 0..MAX_VALUE;
    prop_oneof![
        (v.clone(), v.clone()).prop_map(|(a, b)| C::Eq(a, b)),
        (v.clone(), v.clone()).prop_map(|(a, b)| C::Neq(a, b)),
        (v.clone(), k.clone()).prop_map(|(a, b)| C::NeqConst(a, b)),
        (v.clone(), proptest::collection::vec(k.clone(), 0..4)).prop_map(|(a, ks)| C::Element(a, ks)),
        proptest::collection::vec(v.clone(), 1..=n).prop_map(C::Distinct),
        (v.clone(), k.clone(), v.clone(), k.clone()).prop_map(|(x, a, y, b)| C::Imp(x, a, y, b)),
        (v.clone(), k.clone(), v, k).prop_map(|(x, a, y, b)| C::Or(x, a, y, b)),
    ]
}

fn store_case() -> impl Strategy<Value = (Vec<BTreeSet<i64>>, Vec<C>)> {
    domains().prop_flat_map(|ds| {
        let n = ds.len();
        (Just(ds), proptest::collection::vec(constraint(n), 0..6))
    })
}

fn solutions(doms: &[BTreeSet<i64>], cs: &[C]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for d in doms {
        out = out
            .into_iter()
            .flat_map(|t| {
                d.iter().map(move |x| {
                    let mut t = t.clone();
                    t.push(*x);
                    t
                })
            })
            .collect();
    }
    out.retain(|t| cs.iter().all(|c| c.holds(t)));
    out
}

/// Observable state of `vs`.
fn state(s: &Store, vs: &[VarId]) -> Vec<String> {
    vs.iter()
        .map(|&v| {
            if s.is_bool(v) {
                format!("{:?}", s.status(v))
            } else {
                let d = s.domain(v);
                format!("{:?}{}", d.values(), d.is_complete())
            }
        })
        .collect()
}

fn fresh(doms: &[BTreeSet<i64>]) -> (Store, Vec<VarId>) {
    let mut s = Store::new();
    let xs = doms.iter().map(|d| s.new_closed_var(d.iter().copied())).collect();
    (s, xs)
}

fn soundness((doms, cs): (Vec<BTreeSet<i64>>, Vec<C>)) -> Result<(), TestCaseError> {
    let sols = solutions(&doms, &cs);
    let (mut s, xs) = fresh(&doms);
    let mut ok = true;
    for c in &cs {
        ok = ok && s.tell(c.post(&xs)).unwrap();
    }
    if ok {
        ok = s.propagate() == clpnlp::solver::Consistency::Consistent;
    }
    if !ok {
        prop_assert!(sols.is_empty(), "store failed but {:?} solves {:?}", sols[0], cs);
        return Ok(());
    }
    for t in &sols {
        for (i, x) in xs.iter().enumerate() {
            prop_assert!(
                s.domain(*x).contains(&Value::Int(t[i])),
                "solution {:?} uses pruned value of x{}; constraints {:?}",
                t,
                i,
                cs
            );
        }
    }
    Ok(())
}

fn distinct_strength(doms: Vec<BTreeSet<i64>>) -> Result<(), TestCaseError> {
    let n = doms.len();
    let (mut a, xa) = fresh(&doms);
    let (mut b, xb) = fresh(&doms);
    let ok_a = a.tell(all_distinct(xa.clone())).unwrap();
    let mut ok_b = true;
    for i in 0..n {
        for j in i + 1..n {
            ok_b = ok_b && b.tell(Constraint::neq(xb[i], xb[j])).unwrap();
        }
    }
    if !ok_b {
        prop_assert!(!ok_a, "pairwise neq failed, all_distinct did not on {:?}", doms);
    }
    if ok_a {
        for i in 0..n {
            prop_assert!(
                a.domain(xa[i]).values().is_subset(b.domain(xb[i]).values()),
                "x{} wider under all_distinct on {:?}",
                i,
                doms
            );
        }
    }
    Ok(())
}

fn bool_idempotent((doms, cs): (Vec<BTreeSet<i64>>, Vec<C>)) -> Result<(), TestCaseError> {
    let (mut once, x1) = fresh(&doms);
    let (mut twice, x2) = fresh(&doms);
    for cs_ in cs.iter().filter(|c| matches!(c, C::Imp(..) | C::Or(..))) {
        let r1 = once.tell(cs_.post(&x1)).unwrap();
        let r2 = twice.tell(cs_.post(&x2)).unwrap();
        let r3 = twice.tell(cs_.post(&x2)).unwrap();
        prop_assert_eq!(r1, r2);
        prop_assert!(!r2 || r3, "second post of {:?} failed", cs_);
        prop_assert_eq!(state(&once, &x1), state(&twice, &x2));
        prop_assert_eq!(once.num_vars(), twice.num_vars());
    }
    Ok(())
}

fn snapshot_exact((doms, cs): (Vec<BTreeSet<i64>>, Vec<C>)) -> Result<(), TestCaseError> {
    let (mut s, xs) = fresh(&doms);
    let (first, second) = cs.split_at(cs.len() / 2);
    for c in first {
        s.tell(c.post(&xs)).unwrap();
    }
    let before = (state(&s, &xs), s.num_vars());
    let snap = s.snapshot();
    let extra = s.new_bool();
    s.tell(Constraint::fix_bool(extra, true)).unwrap();
    for c in second {
        s.tell(c.post(&xs)).unwrap();
    }
    s.restore(snap).unwrap();
    prop_assert_eq!((state(&s, &xs), s.num_vars()), before);
    prop_assert!(!s.contains(extra));
    Ok(())
}

fn a8() -> Outcome {
    runner(A8_CASES)
        .run(&store_case(), soundness)
        .map_err(|e| format!("soundness: {e}"))?;
    runner(A8_CASES)
        .run(&domains(), distinct_strength)
        .map_err(|e| format!("all_distinct: {e}"))?;
    runner(A8_CASES)
        .run(&store_case(), bool_idempotent)
        .map_err(|e| format!("bool_post: {e}"))?;
    runner(A8_CASES)
        .run(&store_case(), snapshot_exact)
        .map_err(|e| format!("snapshot: {e}"))?;
    Ok(format!(
        "{A8_CASES} random stores each: sound pruning, all_distinct >= neq, idempotent bool_post, exact restore"
    ))
}
