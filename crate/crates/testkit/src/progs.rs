//! Random stratified-program generation. Programs are built stratum-aware so
//! they are well-formed, safe, and stratifiable by construction.

use datalog::{Atom, Const, Literal, Program, Rule, Term};
use rand::prelude::*;

const SYMS: [&str; 3] = ["a", "b", "c"];

pub struct GenProgram {
    pub program: Program,
    pub input: Vec<(String, Vec<Const>)>,
}

fn rand_const(rng: &mut impl Rng) -> Const {
    if rng.gen_bool(0.5) {
        Const::sym(*SYMS.choose(rng).unwrap())
    } else {
        Const::num(rng.gen_range(0u64..5))
    }
}

/// Generate a random stratified program with at most 4 intensional
/// predicates, 8 rules, arities up to 3, and up to 20 input facts over two
/// extensional predicates.
pub fn gen_program(rng: &mut impl Rng) -> GenProgram {
    let n_intensional = rng.gen_range(1..=4);
    let n_extensional = 2usize;
    // arity per predicate; index 0.. are extensional, then intensional
    let ext_names: Vec<String> = (0..n_extensional).map(|i| format!("e{}", i)).collect();
    let int_names: Vec<String> = (0..n_intensional).map(|i| format!("p{}", i)).collect();
    let arity = |name: &str, rng: &mut dyn RngCore| -> usize {
        // derive deterministically from the name so all uses agree
        let h = name.bytes().map(u64::from).sum::<u64>();
        let _ = rng;
        (h % 3 + 1) as usize
    };

    let mut rules = Vec::new();
    let n_rules = rng.gen_range(1..=8);
    for _ in 0..n_rules {
        // head predicate and the strata visible to it
        let head_ix = rng.gen_range(0..n_intensional);
        let head_name = int_names[head_ix].clone();
        let head_arity = arity(&head_name, rng);

        // positive body: 1..=3 literals drawn from extensional preds and
        // intensional preds of index <= head_ix (same stratum or below)
        let mut pool: Vec<String> = ext_names.clone();
        pool.extend(int_names[..=head_ix].iter().cloned());
        let n_pos = rng.gen_range(1..=3);
        let mut body = Vec::new();
        let mut positive_vars: Vec<String> = Vec::new();
        for _ in 0..n_pos {
            let pred = pool.choose(rng).unwrap().clone();
            let a = arity(&pred, rng);
            let mut terms = Vec::new();
            for _ in 0..a {
                if rng.gen_bool(0.7) {
                    let v = format!("V{}", rng.gen_range(0..4));
                    if !positive_vars.contains(&v) {
                        positive_vars.push(v.clone());
                    }
                    terms.push(Term::var(v));
                } else {
                    terms.push(Term::Const(rand_const(rng)));
                }
            }
            body.push(Literal::pos(Atom::new(pred, terms)));
        }

        // optional negated literal over strictly-lower predicates, using
        // only variables already bound positively
        if !positive_vars.is_empty() && rng.gen_bool(0.4) {
            let mut neg_pool: Vec<String> = ext_names.clone();
            neg_pool.extend(int_names[..head_ix].iter().cloned());
            let pred = neg_pool.choose(rng).unwrap().clone();
            let a = arity(&pred, rng);
            let terms: Vec<Term> = (0..a)
                .map(|_| {
                    if rng.gen_bool(0.8) {
                        Term::var(positive_vars.choose(rng).unwrap().clone())
                    } else {
                        Term::Const(rand_const(rng))
                    }
                })
                .collect();
            body.push(Literal::neg(Atom::new(pred, terms)));
        }

        // head terms from positive body variables or constants
        let head_terms: Vec<Term> = (0..head_arity)
            .map(|_| {
                if !positive_vars.is_empty() && rng.gen_bool(0.8) {
                    Term::var(positive_vars.choose(rng).unwrap().clone())
                } else {
                    Term::Const(rand_const(rng))
                }
            })
            .collect();
        rules.push(Rule {
            head: Atom::new(head_name, head_terms),
            body,
        });
    }

    let mut input = Vec::new();
    let n_facts = rng.gen_range(0..=20);
    for _ in 0..n_facts {
        let pred = ext_names.choose(rng).unwrap().clone();
        let a = arity(&pred, rng);
        let row: Vec<Const> = (0..a).map(|_| rand_const(rng)).collect();
        input.push((pred, row));
    }

    GenProgram {
        program: Program::new(rules),
        input,
    }
}
