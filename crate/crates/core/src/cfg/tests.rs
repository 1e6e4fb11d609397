use super::*;
use crate::grammar::load_grammar;

const TOY: &str = include_str!("../../grammars/toy.grm");
const SENTENCE: &str = "Det Nm Vb Det Nm Prep Nm";

fn toy() -> Grammar {
    load_grammar(TOY).unwrap()
}

fn run(g: &Grammar, input: &str, strategy: Strategy) -> ParseResult {
    let cats = g.categories_of(input).unwrap();
    parse(&cats, g, &ParseOptions { strategy, limit: None }).unwrap()
}

fn shown(g: &Grammar, r: &ParseResult) -> Vec<String> {
    r.derivations.iter().map(|d| d.show(g)).collect()
}

#[test]
fn toy_sentence_first_three() {
    let g = toy();
    let r = run(&g, SENTENCE, Strategy::Active);
    let lines = shown(&g, &r);
    let tail = "<VP>, <Vb,NP,PP>, <S>, <NP,VP>>";
    assert_eq!(
        lines[0],
        format!("<<NP>, <Det,Nm>, <NP>, <Det,Nm>, <NP>, <Nm>, <PP>, <Prep,NP>, {tail}")
    );
    assert_eq!(
        lines[1],
        format!("<<NP>, <Det,Nm>, <NP>, <Nm>, <NP>, <Det,Nm>, <PP>, <Prep,NP>, {tail}")
    );
    assert_eq!(
        lines[2],
        format!("<<NP>, <Det,Nm>, <NP>, <Nm>, <PP>, <Prep,NP>, <NP>, <Det,Nm>, {tail}")
    );
    assert!(lines.iter().all(|l| l.ends_with("<S>, <NP,VP>>")));
}

#[test]
fn one_tree_for_all_derivations() {
    let g = toy();
    let input = g.categories_of(SENTENCE).unwrap();
    let r = run(&g, SENTENCE, Strategy::Active);
    assert!(r.derivations.len() > 3);
    let trees: std::collections::HashSet<Tree> = r
        .derivations
        .iter()
        .map(|d| derivations_to_tree(d, &input).unwrap())
        .collect();
    assert_eq!(trees.len(), 1);
    let t = trees.into_iter().next().unwrap();
    assert_eq!(t.leaves(), input);
    assert_eq!(t.show(&g), "[S [NP Det Nm] [VP Vb [NP Det Nm] [PP Prep [NP Nm]]]]");
    assert_eq!(dedupe_trees(r.derivations, &input).len(), 1);
}

#[test]
fn reductions_start_anywhere() {
    let g = toy();
    let r = run(&g, SENTENCE, Strategy::Active);
    assert_eq!(r.derivations[0].steps[1].pos, 2);
    for d in &r.derivations {
        let input = g.categories_of(SENTENCE).unwrap();
        assert_eq!(d.replay(&input).unwrap(), vec![g.cat("S").unwrap()]);
    }
}

#[test]
fn start_symbol_alone() {
    let g = toy();
    let r = run(&g, "S", Strategy::Active);
    assert_eq!(r.derivations, vec![Derivation::default()]);
    assert_eq!(r.derivations[0].show(&g), "<>");
    let t = derivations_to_tree(&r.derivations[0], &[g.cat("S").unwrap()]).unwrap();
    assert!(t.children.is_empty());
}

#[test]
fn single_rule_grammar() {
    let g = load_grammar("rule S -> A B.").unwrap();
    for s in [Strategy::Active, Strategy::Gentest] {
        let r = run(&g, "A B", s);
        assert_eq!(shown(&g, &r), ["<<S>, <A,B>>"]);
    }
    assert!(run(&g, "B A", Strategy::Active).derivations.is_empty());
}

#[test]
fn errors_and_empty_results() {
    let g = toy();
    assert_eq!(
        parse(&[], &g, &ParseOptions::default()).unwrap_err(),
        CfgError::EmptyInput
    );
    assert!(matches!(
        parse(&[CatId(99)], &g, &ParseOptions::default()),
        Err(CfgError::UnknownCategory(99))
    ));
    assert!(run(&g, "Prep", Strategy::Active).derivations.is_empty());
    let long = vec![g.cat("Nm").unwrap(); 13];
    assert_eq!(oracle_parse(&long, &g).unwrap_err(), CfgError::TooLong(13));
    let input = g.categories_of("Det Nm").unwrap();
    let bad = Derivation {
        steps: vec![Step {
            pos: 1,
            lhs: g.cat("NP").unwrap(),
            rhs: input.clone(),
        }],
    };
    assert!(derivations_to_tree(&bad, &input).is_err());
    assert!(bad.replay(&input).is_err());
}

#[test]
fn strategies_agree_and_active_tries_fewer_windows() {
    let g = toy();
    let active = run(&g, SENTENCE, Strategy::Active);
    let gentest = run(&g, SENTENCE, Strategy::Gentest);
    assert_eq!(active.derivations, gentest.derivations);
    assert!(active.stats.windows_tried < gentest.stats.windows_tried);
    assert_eq!(active.stats.reductions_applied, gentest.stats.reductions_applied);
    let input = g.categories_of(SENTENCE).unwrap();
    let o = oracle_parse(&input, &g).unwrap();
    let set: std::collections::BTreeSet<_> = active.derivations.iter().cloned().collect();
    assert_eq!(set, o.derivations);
    assert!(o.windows_tried >= active.stats.windows_tried);
}

#[test]
fn limit_stops_early() {
    let g = toy();
    let cats = g.categories_of(SENTENCE).unwrap();
    let r = parse(
        &cats,
        &g,
        &ParseOptions {
            strategy: Strategy::Active,
            limit: Some(2),
        },
    )
    .unwrap();
    assert_eq!(r.derivations.len(), 2);
}

#[test]
fn unary_cycles_terminate() {
    let g = load_grammar("rule S -> A.\nrule A -> B.\nrule B -> A.\nrule A -> S.").unwrap();
    for s in [Strategy::Active, Strategy::Gentest] {
        let r = run(&g, "B", s);
        assert_eq!(shown(&g, &r), ["<<A>, <B>, <S>, <A>>"]);
    }
    let o = oracle_parse(&g.categories_of("B").unwrap(), &g).unwrap();
    assert_eq!(o.derivations.len(), 1);
}
