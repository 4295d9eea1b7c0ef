use datalog::{evaluate, parse_program, Const, EvalOptions, FactSet, StratifyError, Term};

fn sym(s: &str) -> Const {
    Const::sym(s)
}

#[test]
fn well_formedness_diagnostics() {
    // ok
    let p = parse_program("p(X) :- q(X).").unwrap();
    assert!(p.check_well_formed().is_empty());

    // head variable not bound by the body
    let p = parse_program("p(X, Y) :- q(X).").unwrap();
    let diags = p.check_well_formed();
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].rule, 0);
    assert!(diags[0].message.contains('Y'), "{}", diags[0].message);

    // variable only in a negated literal
    let p = parse_program("p(X) :- !q(Y), r(X).").unwrap();
    let diags = p.check_well_formed();
    assert_eq!(diags.len(), 1);
    assert!(diags[0].message.contains('Y'), "{}", diags[0].message);
}

#[test]
fn stratification_orders_negated_predicates_below() {
    let p = parse_program(
        "p(X) :- e(X).\n\
         q(X) :- p(X), !r(X).\n\
         r(X) :- e(X).",
    )
    .unwrap();
    let s = p.stratify().unwrap();
    assert!(s.pred_stratum["r"] < s.pred_stratum["q"]);
}

#[test]
fn negation_cycle_is_rejected() {
    let p = parse_program("p(X) :- e(X), !q(X).\nq(X) :- e(X), !p(X).").unwrap();
    match p.stratify() {
        Err(StratifyError::NegationCycle(preds)) => {
            assert_eq!(preds, vec!["p".to_string(), "q".to_string()]);
        }
        other => panic!("expected negation cycle, got {:?}", other),
    }
}

#[test]
fn negation_free_program_is_single_stratum() {
    let p = parse_program("p(X) :- e(X).\nq(X) :- p(X).").unwrap();
    let s = p.stratify().unwrap();
    assert_eq!(s.strata.len(), 1);
}

#[test]
fn transitive_closure_chain() {
    let p = parse_program(
        "mayFollow(L1, L2) :- follow(L1, L2).\n\
         mayFollow(L1, L2) :- mayFollow(L1, L3), follow(L3, L2).",
    )
    .unwrap();
    let mut input = FactSet::new();
    input.insert("follow", vec![sym("l1"), sym("l2")]);
    input.insert("follow", vec![sym("l2"), sym("l3")]);
    let model = evaluate(&p, &input, &EvalOptions::default()).unwrap();
    let derived = model.relation("mayFollow").unwrap();
    assert_eq!(derived.len(), 3);
    assert!(model.contains("mayFollow", &[sym("l1"), sym("l3")]));
}

#[test]
fn empty_input_gives_empty_model_without_constant_rules() {
    let p = parse_program("p(X) :- q(X).").unwrap();
    let model = evaluate(&p, &FactSet::new(), &EvalOptions::default()).unwrap();
    assert!(model.is_empty());

    // A constant-only rule fires even on empty input.
    let p = parse_program("p(a).").unwrap();
    let model = evaluate(&p, &FactSet::new(), &EvalOptions::default()).unwrap();
    assert!(model.contains("p", &[sym("a")]));
}

#[test]
fn input_with_intensional_predicate_is_rejected() {
    let p = parse_program("p(X) :- q(X).").unwrap();
    let mut input = FactSet::new();
    input.insert("p", vec![sym("a")]);
    assert!(evaluate(&p, &input, &EvalOptions::default()).is_err());
}

#[test]
fn negation_tested_against_lower_stratum() {
    let p = parse_program(
        "reach(X) :- start(X).\n\
         reach(Y) :- reach(X), edge(X, Y).\n\
         unreached(X) :- node(X), !reach(X).",
    )
    .unwrap();
    let mut input = FactSet::new();
    for n in ["a", "b", "c"] {
        input.insert("node", vec![sym(n)]);
    }
    input.insert("start", vec![sym("a")]);
    input.insert("edge", vec![sym("a"), sym("b")]);
    let model = evaluate(&p, &input, &EvalOptions::default()).unwrap();
    assert!(model.contains("unreached", &[sym("c")]));
    assert!(!model.contains("unreached", &[sym("a")]));
    assert!(!model.contains("unreached", &[sym("b")]));
}

#[test]
fn query_filters_and_binds() {
    let p = parse_program(
        "mayFollow(L1, L2) :- follow(L1, L2).\n\
         mayFollow(L1, L2) :- mayFollow(L1, L3), follow(L3, L2).",
    )
    .unwrap();
    let mut input = FactSet::new();
    input.insert("follow", vec![sym("l1"), sym("l2")]);
    input.insert("follow", vec![sym("l1"), sym("l3")]);
    let model = evaluate(&p, &input, &EvalOptions::default()).unwrap();

    let subs = model.query("mayFollow", &[Term::Const(sym("l1")), Term::var("X")]);
    assert_eq!(subs.len(), 2);

    // fully ground query: singleton or empty
    let subs = model.query("mayFollow", &[Term::Const(sym("l1")), Term::Const(sym("l2"))]);
    assert_eq!(subs.len(), 1);
    let subs = model.query("mayFollow", &[Term::Const(sym("l2")), Term::Const(sym("l1"))]);
    assert!(subs.is_empty());

    // unknown predicate: empty, not an error
    assert!(model.query("nosuch", &[Term::var("X")]).is_empty());
}

#[test]
fn repeated_query_variables_must_unify() {
    let p = parse_program("e(X, Y) :- edge(X, Y).").unwrap();
    let mut input = FactSet::new();
    input.insert("edge", vec![sym("a"), sym("a")]);
    input.insert("edge", vec![sym("a"), sym("b")]);
    let model = evaluate(&p, &input, &EvalOptions::default()).unwrap();
    let subs = model.query("e", &[Term::var("X"), Term::var("X")]);
    assert_eq!(subs.len(), 1);
    assert_eq!(subs[0]["X"], sym("a"));
}

#[test]
fn fact_limit_aborts() {
    let p = parse_program(
        "pair(X, Y) :- item(X), item(Y).",
    )
    .unwrap();
    let mut input = FactSet::new();
    for i in 0..100u64 {
        input.insert("item", vec![Const::num(i)]);
    }
    let opts = EvalOptions {
        fact_limit: Some(1000),
    };
    assert!(evaluate(&p, &input, &opts).is_err());
}

#[test]
fn dump_is_sorted_and_stable() {
    let p = parse_program("p(X, Y) :- e(X, Y).").unwrap();
    let mut input = FactSet::new();
    input.insert("e", vec![sym("b"), Const::num(2u64)]);
    input.insert("e", vec![sym("a"), Const::num(1u64)]);
    let model = evaluate(&p, &input, &EvalOptions::default()).unwrap();
    let dump = model.dump_sorted();
    assert_eq!(
        dump,
        "e(a,0x1)\ne(b,0x2)\np(a,0x1)\np(b,0x2)\n"
    );
}
