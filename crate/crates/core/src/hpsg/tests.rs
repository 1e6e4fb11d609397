use std::collections::BTreeMap;

use super::*;
use crate::cfg::{self, ParseOptions, Strategy};
use crate::constraints::{BoolFormula, Constraint};
use crate::fs::{Avm, CellValue, Path};
use crate::grammar::{load_grammar, Fcr, Grammar};
use crate::solver::{BoolStatus, Store};
use crate::Value;

const HPSG_TOY: &str = include_str!("../../grammars/hpsg_toy.grm");
const TOY: &str = include_str!("../../grammars/toy.grm");

fn toy() -> Grammar {
    load_grammar(HPSG_TOY).unwrap()
}

fn d(g: &Grammar, cat: &str, sign: u32) -> TreeDaughter {
    TreeDaughter {
        cat: g.cat(cat).unwrap(),
        sign,
        subj: vec![],
        comps: vec![],
    }
}

fn tree(g: &Grammar, root: &str, ds: Vec<TreeDaughter>) -> LocalTree {
    LocalTree {
        root: g.cat(root).unwrap(),
        daughters: ds,
        unicity: true,
        mother_lists: None,
    }
}

fn numbers(vs: &[Violation]) -> Vec<u8> {
    vs.iter().map(|v| v.constraint).collect()
}

#[test]
fn local_tree_checks() {
    let g = toy();
    assert!(check_local_tree(&tree(&g, "NP", vec![d(&g, "Det", 1), d(&g, "Nm", 2)]), &g).is_empty());
    let v = check_local_tree(&tree(&g, "NP", vec![d(&g, "Nm", 2), d(&g, "Det", 1)]), &g);
    assert_eq!(numbers(&v), [6]);
    let v = check_local_tree(
        &tree(&g, "NP", vec![d(&g, "Det", 1), d(&g, "Det", 1), d(&g, "Nm", 2)]),
        &g,
    );
    assert_eq!(numbers(&v), [5]);
    let mut t = tree(&g, "NP", vec![d(&g, "Det", 1), d(&g, "Det", 1), d(&g, "Nm", 2)]);
    t.unicity = false;
    assert!(check_local_tree(&t, &g).is_empty());
    let v = check_local_tree(&tree(&g, "NP", vec![d(&g, "Vb", 1)]), &g);
    assert_eq!(numbers(&v), [7, 9]);
}

#[test]
fn valency_check_in_local_tree() {
    let g = toy();
    let np = g.cat("NP").unwrap();
    let mut vb = d(&g, "Vb", 1);
    vb.subj = vec![np];
    vb.comps = vec![np];
    let mut t = tree(&g, "VP", vec![vb.clone(), d(&g, "NP", 2)]);
    t.mother_lists = Some((vec![np], vec![]));
    assert!(check_local_tree(&t, &g).is_empty());
    t.mother_lists = Some((vec![np], vec![np]));
    assert_eq!(numbers(&check_local_tree(&t, &g)), [8]);
    // two NPs against one COMPS slot and one SUBJ slot is fine, a third is not
    vb.subj = vec![];
    let t = tree(&g, "VP", vec![vb, d(&g, "NP", 2), d(&g, "NP", 3)]);
    assert_eq!(numbers(&check_local_tree(&t, &g)), [8]);
    let r = roles(&t, &g);
    assert_eq!((r.head, r.comps), (Some(0), vec![1, 2]));
}

#[test]
fn unicity_is_posted_before_values() {
    let mut s = Store::new();
    let same = DtrsSchema {
        head: Some(1),
        comps: vec![1],
        ..Default::default()
    };
    assert!(!post_unicity(&same, &mut s).unwrap());
    let mut s = Store::new();
    assert!(post_unicity(&DtrsSchema::default(), &mut s).unwrap());
    let ok = DtrsSchema {
        head: Some(1),
        adj: vec![2, 3],
        ..Default::default()
    };
    assert!(post_unicity(&ok, &mut s).unwrap());

    // three slots over two signs: no assignment can satisfy the posted
    // constraint, whether propagation notices before binding or on it
    let mut s = Store::new();
    let slots: Vec<_> = (0..3).map(|_| s.new_closed_var([1i64, 2])).collect();
    let posted = s.tell(crate::constraints::all_distinct(slots.clone())).unwrap();
    let bound = posted
        && s.tell(Constraint::equals(slots[0], 1i64)).unwrap()
        && s.tell(Constraint::equals(slots[1], 2i64)).unwrap();
    assert!(!bound);
}

fn wf_vars(s: &mut Store, g: &Grammar, frame: &str) -> WfVars {
    let f = g.frame(g.cat(frame).unwrap()).unwrap();
    WfVars {
        phrase: s.new_bool(),
        members: f.m.iter().map(|c| (*c, s.new_bool())).collect::<BTreeMap<_, _>>(),
    }
}

#[test]
fn subcat_booleans() {
    let g = toy();
    let [nm, det, adj, pp, np] = ["Nm", "Det", "Adj", "PP", "NP"].map(|n| g.cat(n).unwrap());
    let frame = g.frame(np).unwrap();

    let mut s = Store::new();
    let wf = wf_vars(&mut s, &g, "NP");
    assert!(post_subcat(frame, None, &wf, &[], &mut s).unwrap());
    s.tell(Constraint::fix_bool(wf.members[&nm], false)).unwrap();
    assert_eq!(s.status(wf.phrase), BoolStatus::False);

    let mut s = Store::new();
    let wf = wf_vars(&mut s, &g, "NP");
    assert!(post_subcat(frame, Some(0), &wf, &[], &mut s).unwrap());
    assert_eq!(s.status(wf.members[&det]), BoolStatus::True);
    assert_eq!(s.status(wf.members[&adj]), BoolStatus::True);
    assert_eq!(s.status(wf.members[&pp]), BoolStatus::Unknown);

    let vp = g.frame(g.cat("VP").unwrap()).unwrap();
    let mut s = Store::new();
    let wf = wf_vars(&mut s, &g, "VP");
    let x = s.new_closed_var((0..g.num_categories() as i64).collect::<Vec<_>>());
    assert!(post_subcat(vp, None, &wf, &[x], &mut s).unwrap());
    assert!(s.domain(x).values().iter().eq([Value::Int(np.0 as i64)].iter()));
}

fn encode(s: &mut Store, text: &str) -> IndexedFS {
    IndexedFS::encode(&Avm::parse(text).unwrap(), s).unwrap()
}

#[test]
fn fcr_compilation() {
    let mut s = Store::new();
    let mut fs = encode(&mut s, "[pform:to!T, maj:v]");
    let alphabet = ["pform", "index", "vform", "maj", "prd", "pas", "prp"]
        .map(String::from)
        .into();
    let pform = fs.cell(1, "pform").unwrap().status;

    let f = compile_fcr(&Fcr::parse("PFORM -> ~INDEX").unwrap(), &mut fs, &mut s, 1, &alphabet).unwrap();
    let index = fs.cell(1, "index").unwrap();
    assert_eq!(index.value, CellValue::None);
    let index = index.status;
    assert_eq!(
        f,
        BoolFormula::implies(BoolFormula::var(pform), BoolFormula::not(BoolFormula::var(index)))
    );
    assert!(s.tell(Constraint::Bool(f)).unwrap());
    assert_eq!(s.status(index), BoolStatus::False);
    assert!(!s.tell(Constraint::fix_bool(index, true)).unwrap());

    let f = compile_fcr(&Fcr::parse("VFORM -> MAJ[V]").unwrap(), &mut fs, &mut s, 1, &alphabet).unwrap();
    let vform = fs.cell(1, "vform").unwrap().status;
    let maj = fs.cell(1, "maj").unwrap().status;
    assert_eq!(
        f,
        BoolFormula::implies(
            BoolFormula::var(vform),
            BoolFormula::and([BoolFormula::var(maj), BoolFormula::Const(true)])
        )
    );

    let f = compile_fcr(
        &Fcr::parse("+PRD | VFORM -> PAS | PRP").unwrap(),
        &mut fs,
        &mut s,
        1,
        &alphabet,
    )
    .unwrap();
    let BoolFormula::Implies(a, c) = &f else {
        panic!("{f:?}")
    };
    assert!(matches!(**a, BoolFormula::Or(ref xs) if xs.len() == 2));
    assert!(matches!(**c, BoolFormula::Or(ref xs) if xs.len() == 2));
    assert!(s.tell(Constraint::Bool(f)).unwrap());

    let err = compile_fcr(&Fcr::parse("FOO -> ~INDEX").unwrap(), &mut fs, &mut s, 1, &alphabet).unwrap_err();
    assert_eq!(err, HpsgError::UnknownFeature("FOO".into()));
}

const HEADED: &str = "[synsem:[loc:[cat:[subj:<>!T, comps:<>!T]!T]!T]!T, \
    dtrs:[head-dtr:[synsem:[loc:[cat:[head:[maj:v, vform:fin]!T]!T]!T]!T]!T]!T]";

#[test]
fn hfp_shares_head() {
    let mut s = Store::new();
    let mut fs = encode(&mut s, HEADED);
    assert!(matches!(apply_hfp(&mut fs, &mut s, 1).unwrap(), Hfp::Applied));
    let mother = Path::parse("synsem.loc.cat.head");
    let daughter = Path::parse("dtrs.head-dtr.synsem.loc.cat.head");
    assert_eq!(fs.lookup_node(&mother), fs.lookup_node(&daughter));
    fs.set_atom(&mother.join("vform"), Value::sym("bse")).unwrap();
    assert_eq!(
        fs.lookup(&daughter.join("vform")).unwrap().value,
        CellValue::Atom(Value::sym("bse"))
    );
}

#[test]
fn hfp_vacuous_without_head_daughter() {
    let mut s = Store::new();
    let mut fs = encode(
        &mut s,
        "[synsem:[loc:[cat:[subj:<>, comps:<>]]], dtrs:[adj-dtrs:<[a:b]>]]",
    );
    let before = fs.dump();
    assert!(matches!(apply_hfp(&mut fs, &mut s, 1).unwrap(), Hfp::Vacuous));
    assert_eq!(fs.dump(), before);
}

#[test]
fn hfp_waits_for_guard() {
    let mut s = Store::new();
    let unknown = HEADED.replace("!T", "");
    let mut fs = encode(&mut s, &unknown);
    let before = fs.dump();
    let Hfp::Pending(p) = apply_hfp(&mut fs, &mut s, 1).unwrap() else {
        panic!("guard is unknown")
    };
    assert_eq!(fs.dump(), before);
    assert!(!p.try_complete(&mut fs, &mut s).unwrap());
    let statuses: Vec<_> = fs.cells().map(|c| c.status).collect();
    for v in statuses {
        s.tell(Constraint::fix_bool(v, true)).unwrap();
    }
    assert!(s
        .take_fired()
        .iter()
        .any(|(id, e)| *id == p.ask && *e == crate::solver::Entailment::Entailed));
    assert!(p.try_complete(&mut fs, &mut s).unwrap());
    assert_eq!(
        fs.lookup_node(&Path::parse("synsem.loc.cat.head")),
        fs.lookup_node(&Path::parse("dtrs.head-dtr.synsem.loc.cat.head"))
    );
}

fn lists(fs: &IndexedFS, path: &str) -> Vec<String> {
    match fs.lookup(&Path::parse(path)).map(|c| fs.resolved(&c.value)) {
        Some(CellValue::List(ks)) => ks
            .iter()
            .map(|k| match &fs.cell(*k, "label").unwrap().value {
                CellValue::Atom(v) => v.to_string(),
                other => panic!("{other:?}"),
            })
            .collect(),
        other => panic!("{path}: {other:?}"),
    }
}

fn valency_sign(subj: &str, comps: &str, subj_dtr: &str, comp_dtrs: &str) -> String {
    format!(
        "[synsem:[loc:[cat:[subj:!U, comps:!U]]], dtrs:[head-dtr:[synsem:[loc:[cat:[subj:<{subj}>, comps:<{comps}>]]]], \
         subj-dtr:<{subj_dtr}>, comp-dtrs:<{comp_dtrs}>]]"
    )
}

#[test]
fn valency_cancels_realized_daughters() {
    let np = "[label:NP]";
    let pp = "[label:PP]";
    let mut s = Store::new();
    let mut fs = encode(
        &mut s,
        &valency_sign("", &format!("{np}, {pp}"), "", &format!("{np}, {pp}")),
    );
    apply_valency(&mut fs, &mut s, 1).unwrap();
    assert!(lists(&fs, "synsem.loc.cat.comps").is_empty());

    let mut fs = encode(&mut s, &valency_sign(np, &format!("{np}, {pp}"), "", ""));
    apply_valency(&mut fs, &mut s, 1).unwrap();
    assert_eq!(lists(&fs, "synsem.loc.cat.subj"), ["NP"]);
    assert_eq!(lists(&fs, "synsem.loc.cat.comps"), ["NP", "PP"]);

    let mut fs = encode(&mut s, &valency_sign(np, "", np, ""));
    apply_valency(&mut fs, &mut s, 1).unwrap();
    assert!(lists(&fs, "synsem.loc.cat.subj").is_empty());

    let mut fs = encode(&mut s, &valency_sign("", np, "", &format!("{np}, {np}")));
    assert_eq!(
        apply_valency(&mut fs, &mut s, 1).unwrap_err(),
        HpsgError::OverSaturated("COMPS".into())
    );
    let mut fs = encode(&mut s, &valency_sign("", np, "", pp));
    assert!(matches!(
        apply_valency(&mut fs, &mut s, 1),
        Err(HpsgError::Inconsistent(_))
    ));
}

fn run(g: &Grammar, words: &str, strategy: Strategy) -> HpsgResult {
    let ws: Vec<&str> = words.split_whitespace().collect();
    parse_hpsg(&ws, g, &ParseOptions { strategy, limit: None }).unwrap()
}

#[test]
fn three_word_sentence() {
    let g = toy();
    let r = run(&g, "the cat sleeps", Strategy::Active);
    assert!(!r.analyses.is_empty());
    let signs: std::collections::BTreeSet<String> = r.analyses.iter().map(|a| a.sign.dump()).collect();
    assert_eq!(signs.len(), 1);
    let a = &r.analyses[0];
    let fs = &a.sign;
    for p in ["synsem.loc.cat.subj", "synsem.loc.cat.comps"] {
        assert!(lists(fs, p).is_empty());
    }
    let head = fs.lookup_node(&Path::parse("synsem.loc.cat.head"));
    assert!(head.is_some());
    for p in [
        "dtrs.head-dtr.synsem.loc.cat.head",
        "dtrs.head-dtr.dtrs.head-dtr.synsem.loc.cat.head",
    ] {
        assert_eq!(fs.lookup_node(&Path::parse(p)), head, "{p}");
    }
    assert_eq!(a.wf_line(&g), "WF S:T NP:T Det:T Nm:T VP:T Vb:T");
    let shown = a.show(&g);
    assert!(shown.starts_with("<<"), "{shown}");
    assert!(shown.contains(", T>"));
}

#[test]
fn transitive_sentence_and_rejections() {
    let g = toy();
    assert!(!run(&g, "mary sees the dog", Strategy::Active).analyses.is_empty());
    assert!(run(&g, "mary sees", Strategy::Active).analyses.is_empty());
    assert!(run(&g, "cat sleeps", Strategy::Active).analyses.is_empty());
    assert!(run(&g, "the cat the sleeps", Strategy::Active).analyses.is_empty());
    let ws = ["the", "unicorn"];
    assert!(matches!(
        parse_hpsg(&ws, &g, &ParseOptions::default()),
        Err(HpsgError::Grammar(crate::grammar::GrammarError::UnknownWord(_)))
    ));
}

#[test]
fn fcr_violation_rejects_entry() {
    let g = load_grammar(
        "rule S -> P.\nlex \"to\" P [pform:to!T, index:i!T].\nlex \"at\" P [pform:at!T].\nfcr PFORM -> ~INDEX.",
    )
    .unwrap();
    assert!(run(&g, "to", Strategy::Active).analyses.is_empty());
    let r = run(&g, "at", Strategy::Active);
    assert_eq!(r.analyses.len(), 1);
    assert!(
        r.analyses[0].dump.contains("<index, 10, -, F>"),
        "{}",
        r.analyses[0].dump
    );
}

#[test]
fn category_mode_matches_cfg() {
    let g = load_grammar(TOY).unwrap();
    let input = "Det Nm Vb Det Nm Prep Nm";
    let cats = g.categories_of(input).unwrap();
    let c = cfg::parse(&cats, &g, &ParseOptions::default()).unwrap();
    let h = run(&g, input, Strategy::Active);
    assert_eq!(h.analyses.len(), c.derivations.len());
    let hd: Vec<_> = h.analyses.iter().map(|a| a.derivation.clone()).collect();
    assert_eq!(hd, c.derivations);
}

#[test]
fn active_explores_no_more_than_gentest() {
    let g = toy();
    let mut strictly = false;
    for s in [
        "the cat sleeps",
        "mary sees the dog",
        "the dog sees mary",
        "cat sleeps",
        "the cat sees the dog",
    ] {
        let a = run(&g, s, Strategy::Active);
        let t = run(&g, s, Strategy::Gentest);
        let key = |r: &HpsgResult| {
            let mut v: Vec<(String, String)> = r
                .analyses
                .iter()
                .map(|x| (x.derivation.show(&g), x.dump.clone()))
                .collect();
            v.sort();
            v
        };
        assert_eq!(key(&a), key(&t), "{s}");
        assert!(a.stats.node_expansions <= t.stats.node_expansions, "{s}");
        strictly |= a.stats.node_expansions < t.stats.node_expansions;
    }
    assert!(strictly);
}
