//! Flow- and data-dependence inference: extract base facts from the SSA CFG
//! and close them under the built-in rule set to obtain the semantic facts
//! (mayFollow, mustFollow, mayDepOn, eq, detBy) that patterns query.

pub mod facts;

use std::collections::BTreeSet;

use datalog::{evaluate, Const, EvalOptions, Model, Program};
use once_cell::sync::Lazy;
use thiserror::Error;

pub use facts::{extract_base_facts, BaseFactSet};

static RULES_TEXT: &str = include_str!("rules.dl");

static RULESET: Lazy<Program> = Lazy::new(|| {
    let program = datalog::parse_program(RULES_TEXT).expect("built-in rule set parses");
    debug_assert!(program.check_well_formed().is_empty());
    program.stratify().expect("built-in rule set stratifies");
    program
});

/// Instruction-kind tags that may appear as the second argument of
/// dependency facts (alongside variable tags).
pub const INSTRUCTION_TAGS: &[&str] = &[
    "address", "arg", "balance", "basefee", "caller", "callvalue", "chainid", "coinbase",
    "data", "difficulty", "gaslimit", "gasprice", "number", "origin", "sload", "timestamp",
];

/// The built-in inference rule set.
pub fn builtin_ruleset() -> &'static Program {
    &RULESET
}

#[derive(Error, Debug)]
pub enum InferError {
    #[error("dependence inference failed: {0}")]
    Eval(#[from] datalog::EvalError),
}

/// The Datalog fixed point over a contract's base facts, with the universes
/// the pattern evaluator quantifies over.
#[derive(Clone, Debug)]
pub struct SemanticModel {
    pub model: Model,
    pub base: BaseFactSet,
    labels: Vec<Const>,
    vars: Vec<Const>,
    tags: Vec<Const>,
}

impl SemanticModel {
    /// All instruction labels, sorted.
    pub fn label_universe(&self) -> &[Const] {
        &self.labels
    }

    /// All program variables, sorted.
    pub fn var_universe(&self) -> &[Const] {
        &self.vars
    }

    /// All tags: instruction kinds plus anything a derived dependency fact
    /// mentions, sorted.
    pub fn tag_universe(&self) -> &[Const] {
        &self.tags
    }

    pub fn offset_of(&self, label: &str) -> Option<usize> {
        self.base.label_offsets.get(label).copied()
    }

    pub fn opcode_of(&self, label: &str) -> Option<&'static str> {
        self.base.label_opcodes.get(label).copied()
    }
}

/// Run the built-in rule set over extracted base facts.
pub fn infer(base: BaseFactSet, fact_limit: Option<usize>) -> Result<SemanticModel, InferError> {
    let opts = EvalOptions { fact_limit };
    let model = evaluate(builtin_ruleset(), &base.facts, &opts)?;

    let labels: Vec<Const> = base
        .label_offsets
        .keys()
        .map(|s| Const::sym(s.clone()))
        .collect();
    let vars: Vec<Const> = base
        .facts
        .rows("var")
        .iter()
        .map(|row| row[0].clone())
        .collect();
    let mut tags: BTreeSet<Const> = INSTRUCTION_TAGS.iter().map(|t| Const::sym(*t)).collect();
    for pred in ["mayDepOn", "detBy", "eq"] {
        if let Some(rel) = model.relation(pred) {
            for row in rel.rows() {
                tags.insert(row[1].clone());
            }
        }
    }
    Ok(SemanticModel {
        model,
        base,
        labels,
        vars,
        tags: tags.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompiler::{decompile, DecompileOptions};
    use crate::evm::decode::decode_bytecode;

    fn analyze_hex(hex: &str) -> SemanticModel {
        let image = decode_bytecode(hex).unwrap();
        let dec = decompile(&image, &DecompileOptions::default()).unwrap();
        infer(extract_base_facts(&dec.cfg), None).unwrap()
    }

    fn sym(s: &str) -> Const {
        Const::sym(s)
    }

    #[test]
    fn ruleset_parses_and_stratifies() {
        let program = builtin_ruleset();
        assert!(program.check_well_formed().is_empty());
        let strat = program.stratify().unwrap();
        // reassignMem must sit strictly below memTag (negation)
        assert!(strat.pred_stratum["reassignMem"] < strat.pred_stratum["memTag"]);
        assert!(strat.pred_stratum["memclobber"] < strat.pred_stratum["memDet"]);
    }

    // PUSH1 4; CALLDATALOAD; PUSH1 0; SSTORE; STOP
    // decompiles to b = dataload(4); sstore(0, b); stop
    const STORE_ARG: &str = "60043560005500";

    #[test]
    fn store_of_data_word() {
        let m = analyze_hex(STORE_ARG);
        // the sstore offset is resolved to the constant 0
        let stores = m.model.query(
            "sstore",
            &[
                datalog::Term::var("L"),
                datalog::Term::var("O"),
                datalog::Term::var("X"),
            ],
        );
        assert_eq!(stores.len(), 1);
        assert_eq!(stores[0]["O"], Const::num(0u64));
        let stored = stores[0]["X"].clone();

        // the stored value may depend on (indeed is determined by) the data
        assert!(m.model.contains("mayDepOn", &[stored.clone(), sym("data")]));
        assert!(m.model.contains("detBy", &[stored.clone(), sym("arg")]));
        // and not on the caller
        assert!(!m.model.contains("mayDepOn", &[stored, sym("caller")]));
        assert!(m.model.contains("isConst", &[Const::num(0u64)]));
    }

    #[test]
    fn caller_equality_via_env_assign() {
        // CALLER; PUSH1 0; SSTORE -> sstore(0, v) with eq(v, caller)
        let m = analyze_hex("3360005500");
        let stores = m.model.query(
            "sstore",
            &[
                datalog::Term::var("L"),
                datalog::Term::var("O"),
                datalog::Term::var("X"),
            ],
        );
        let stored = stores[0]["X"].clone();
        assert!(m.model.contains("eq", &[stored.clone(), sym("caller")]));
        assert!(m.model.contains("detBy", &[stored.clone(), sym("caller")]));
        assert!(m.model.contains("mayDepOn", &[stored, sym("caller")]));
    }

    #[test]
    fn subsumption_chain_holds() {
        let m = analyze_hex(STORE_ARG);
        for pred in ["eq", "detBy"] {
            let upper = if pred == "eq" { "detBy" } else { "mayDepOn" };
            if let Some(rel) = m.model.relation(pred) {
                for row in rel.rows() {
                    assert!(
                        m.model.contains(upper, row),
                        "{pred}{row:?} not in {upper}"
                    );
                }
            }
        }
    }

    #[test]
    fn no_stores_means_no_memory_tags() {
        let m = analyze_hex(STORE_ARG);
        assert!(m.model.relation("memTag").is_none_or(|r| r.is_empty()));
    }

    #[test]
    fn may_follow_within_straight_line() {
        let m = analyze_hex(STORE_ARG);
        // first instruction is the PUSH-derived assign, last is stop
        let follows = m.model.query(
            "mayFollow",
            &[datalog::Term::var("A"), datalog::Term::var("B")],
        );
        assert!(!follows.is_empty());
        // straight line: mustFollow mirrors mayFollow here
        for f in &follows {
            assert!(m
                .model
                .contains("mustFollow", &[f["A"].clone(), f["B"].clone()]));
        }
    }
}
