use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::model::{FactSet, Model, Relation};
use crate::program::{Diagnostic, Program, Rule};
use crate::stratify::{stratify, StratifyError};
use crate::term::{Const, Term};

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    /// Abort when the model grows beyond this many facts.
    pub fact_limit: Option<usize>,
}

#[derive(Error, Debug)]
pub enum EvalError {
    #[error("program is not well-formed: {}", format_diags(.0))]
    IllFormed(Vec<Diagnostic>),
    #[error(transparent)]
    Stratify(#[from] StratifyError),
    #[error("input fact uses intensional predicate {0}")]
    IntensionalInput(String),
    #[error("input fact for {pred} has arity {got}, program uses {expected}")]
    InputArity {
        pred: String,
        expected: usize,
        got: usize,
    },
    #[error("fact limit of {0} exceeded during evaluation")]
    FactLimit(usize),
}

fn format_diags(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Compute the stratified least model of `program` for `input`.
///
/// Each stratum runs semi-naive: after a full first round, a rule only
/// re-fires when one of its positive body literals can be matched against a
/// fact derived in the previous round.
pub fn evaluate(program: &Program, input: &FactSet, opts: &EvalOptions) -> Result<Model, EvalError> {
    let diags = program.check_well_formed();
    if !diags.is_empty() {
        return Err(EvalError::IllFormed(diags));
    }
    let strat = stratify(program)?;
    let sigs = program.signatures();
    let intensional = program.intensional();

    let mut model = Model::empty();
    for (pred, row) in input.iter() {
        if intensional.contains(pred) {
            return Err(EvalError::IntensionalInput(pred.to_string()));
        }
        if let Some(&arity) = sigs.get(pred) {
            if arity != row.len() {
                return Err(EvalError::InputArity {
                    pred: pred.to_string(),
                    expected: arity,
                    got: row.len(),
                });
            }
        }
        model.insert(pred, row.to_vec());
    }

    for stratum in &strat.strata {
        let rules: Vec<CompiledRule> = stratum
            .iter()
            .map(|&i| CompiledRule::compile(&program.rules[i]))
            .collect();
        let defined: HashSet<&str> = rules.iter().map(|r| r.head_pred.as_str()).collect();
        run_stratum(&rules, &defined, &mut model, opts)?;
    }
    Ok(model)
}

fn run_stratum(
    rules: &[CompiledRule],
    defined: &HashSet<&str>,
    model: &mut Model,
    opts: &EvalOptions,
) -> Result<(), EvalError> {
    let mut derived: Vec<(String, Vec<Const>)> = Vec::new();

    // Round 0: full pass over everything known so far.
    for rule in rules {
        rule.fire(model, None, &mut derived);
    }
    let mut delta = absorb(model, derived, opts)?;

    while !delta.is_empty() {
        let mut fresh: Vec<(String, Vec<Const>)> = Vec::new();
        for rule in rules {
            for (i, lit) in rule.body.iter().enumerate() {
                if lit.negated || !defined.contains(lit.pred.as_str()) {
                    continue;
                }
                if let Some(rel) = delta.get(lit.pred.as_str()) {
                    rule.fire(model, Some((i, rel)), &mut fresh);
                }
            }
        }
        delta = absorb(model, fresh, opts)?;
    }
    Ok(())
}

/// Insert newly derived facts, returning the per-predicate delta of the ones
/// that were actually new.
fn absorb(
    model: &mut Model,
    derived: Vec<(String, Vec<Const>)>,
    opts: &EvalOptions,
) -> Result<HashMap<String, Relation>, EvalError> {
    let mut delta: HashMap<String, Relation> = HashMap::new();
    for (pred, row) in derived {
        let arity = row.len();
        if model.insert(&pred, row.clone()) {
            delta
                .entry(pred)
                .or_insert_with(|| Relation::new(arity))
                .insert(row);
            if let Some(limit) = opts.fact_limit {
                if model.len() > limit {
                    return Err(EvalError::FactLimit(limit));
                }
            }
        }
    }
    Ok(delta)
}

#[derive(Clone, Debug)]
enum CTerm {
    Var(usize),
    Const(Const),
}

#[derive(Clone, Debug)]
struct CLit {
    pred: String,
    negated: bool,
    terms: Vec<CTerm>,
}

/// A rule with variables compiled to dense slots.
#[derive(Clone, Debug)]
struct CompiledRule {
    head_pred: String,
    head: Vec<CTerm>,
    body: Vec<CLit>,
    nvars: usize,
}

impl CompiledRule {
    fn compile(rule: &Rule) -> Self {
        fn conv<'a>(terms: &'a [Term], slots: &mut HashMap<&'a str, usize>) -> Vec<CTerm> {
            terms
                .iter()
                .map(|t| match t {
                    Term::Const(c) => CTerm::Const(c.clone()),
                    Term::Var(v) => {
                        let next = slots.len();
                        CTerm::Var(*slots.entry(v.as_str()).or_insert(next))
                    }
                })
                .collect()
        }
        let mut slots: HashMap<&str, usize> = HashMap::new();
        // Body first so every head variable is already allocated.
        let body: Vec<CLit> = rule
            .body
            .iter()
            .map(|l| CLit {
                pred: l.atom.pred.clone(),
                negated: l.negated,
                terms: conv(&l.atom.terms, &mut slots),
            })
            .collect();
        let head = conv(&rule.head.terms, &mut slots);
        CompiledRule {
            head_pred: rule.head.pred.clone(),
            head,
            body,
            nvars: slots.len(),
        }
    }

    /// Apply the rule against `model`; when `delta` is given, body literal
    /// `delta.0` ranges over the delta relation instead of the full one.
    fn fire(
        &self,
        model: &Model,
        delta: Option<(usize, &Relation)>,
        out: &mut Vec<(String, Vec<Const>)>,
    ) {
        let mut env: Vec<Option<Const>> = vec![None; self.nvars];
        self.join(0, model, delta, &mut env, out);
    }

    fn join(
        &self,
        k: usize,
        model: &Model,
        delta: Option<(usize, &Relation)>,
        env: &mut Vec<Option<Const>>,
        out: &mut Vec<(String, Vec<Const>)>,
    ) {
        if k == self.body.len() {
            let row: Vec<Const> = self
                .head
                .iter()
                .map(|t| match t {
                    CTerm::Const(c) => c.clone(),
                    CTerm::Var(s) => env[*s].clone().expect("unbound head variable"),
                })
                .collect();
            out.push((self.head_pred.clone(), row));
            return;
        }
        let lit = &self.body[k];
        if lit.negated {
            let row: Vec<Const> = lit
                .terms
                .iter()
                .map(|t| match t {
                    CTerm::Const(c) => c.clone(),
                    CTerm::Var(s) => env[*s].clone().expect("unbound negated variable"),
                })
                .collect();
            if !model.contains(&lit.pred, &row) {
                self.join(k + 1, model, delta, env, out);
            }
            return;
        }

        let empty = Relation::new(lit.terms.len());
        let rel: &Relation = match delta {
            Some((i, d)) if i == k => d,
            _ => model.relation(&lit.pred).unwrap_or(&empty),
        };
        let bound: Vec<(usize, &Const)> = lit
            .terms
            .iter()
            .enumerate()
            .filter_map(|(pos, t)| match t {
                CTerm::Const(c) => Some((pos, c)),
                CTerm::Var(s) => env[*s].as_ref().map(|c| (pos, c)),
            })
            .collect();
        for id in rel.matching(&bound) {
            let row = rel.row(id);
            let mut newly_bound: Vec<usize> = Vec::new();
            let mut ok = true;
            for (pos, t) in lit.terms.iter().enumerate() {
                if let CTerm::Var(s) = t {
                    match &env[*s] {
                        Some(c) => {
                            if c != &row[pos] {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            env[*s] = Some(row[pos].clone());
                            newly_bound.push(*s);
                        }
                    }
                }
            }
            if ok {
                self.join(k + 1, model, delta, env, out);
            }
            for s in newly_bound {
                env[s] = None;
            }
        }
    }
}
