//! Naive stratified Datalog evaluation: repeated application of the
//! consequence operator to a fixed point, stratum by stratum, with its own
//! stratum assignment. Used as the oracle for the semi-naive engine.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use datalog::{Const, Literal, Program, Rule, Term};

pub type NaiveModel = BTreeMap<String, BTreeSet<Vec<Const>>>;

/// Compute the stratified least model by naive iteration. Returns an error
/// string for non-stratifiable programs.
pub fn naive_model(program: &Program, input: &[(String, Vec<Const>)]) -> Result<NaiveModel, String> {
    let strata = rule_strata(program)?;
    let mut model: NaiveModel = BTreeMap::new();
    for (pred, row) in input {
        model.entry(pred.clone()).or_default().insert(row.clone());
    }
    let max = strata.iter().copied().max().unwrap_or(0);
    for level in 0..=max {
        let rules: Vec<&Rule> = program
            .rules
            .iter()
            .zip(&strata)
            .filter(|(_, s)| **s == level)
            .map(|(r, _)| r)
            .collect();
        loop {
            let mut changed = false;
            for rule in &rules {
                for fact in consequences(rule, &model) {
                    if model
                        .entry(rule.head.pred.clone())
                        .or_default()
                        .insert(fact)
                    {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    Ok(model)
}

/// One application of the consequence operator for a single rule: every
/// substitution satisfying the body yields the ground head.
fn consequences(rule: &Rule, model: &NaiveModel) -> Vec<Vec<Const>> {
    let mut out = Vec::new();
    let env: HashMap<String, Const> = HashMap::new();
    satisfy(&rule.body, 0, env, model, &mut |env| {
        let row: Vec<Const> = rule
            .head
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => env[v].clone(),
            })
            .collect();
        out.push(row);
    });
    out
}

fn satisfy(
    body: &[Literal],
    k: usize,
    env: HashMap<String, Const>,
    model: &NaiveModel,
    emit: &mut dyn FnMut(&HashMap<String, Const>),
) {
    if k == body.len() {
        emit(&env);
        return;
    }
    let lit = &body[k];
    let rows = model.get(&lit.atom.pred);
    if lit.negated {
        let row: Vec<Const> = lit
            .atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => env[v].clone(),
            })
            .collect();
        let present = rows.is_some_and(|set| set.contains(&row));
        if !present {
            satisfy(body, k + 1, env, model, emit);
        }
        return;
    }
    let Some(rows) = rows else { return };
    'rows: for row in rows {
        if row.len() != lit.atom.terms.len() {
            continue;
        }
        let mut env2 = env.clone();
        for (t, c) in lit.atom.terms.iter().zip(row) {
            match t {
                Term::Const(k) => {
                    if k != c {
                        continue 'rows;
                    }
                }
                Term::Var(v) => match env2.get(v) {
                    Some(bound) if bound != c => continue 'rows,
                    Some(_) => {}
                    None => {
                        env2.insert(v.clone(), c.clone());
                    }
                },
            }
        }
        satisfy(body, k + 1, env2, model, emit);
    }
}

/// Assign a stratum to each rule with the classic iterative algorithm:
/// positive dependencies push a head to at least its body's level, negative
/// dependencies strictly above. Fails when a level climbs past the number of
/// predicates (negation cycle).
fn rule_strata(program: &Program) -> Result<Vec<usize>, String> {
    let mut level: HashMap<&str, usize> = HashMap::new();
    let preds: BTreeSet<&str> = program
        .rules
        .iter()
        .flat_map(|r| {
            std::iter::once(r.head.pred.as_str())
                .chain(r.body.iter().map(|l| l.atom.pred.as_str()))
        })
        .collect();
    for p in &preds {
        level.insert(p, 0);
    }
    let bound = preds.len() + 1;
    loop {
        let mut changed = false;
        for rule in &program.rules {
            let mut need = level[rule.head.pred.as_str()];
            for lit in &rule.body {
                let dep = level[lit.atom.pred.as_str()] + usize::from(lit.negated);
                need = need.max(dep);
            }
            if need > bound {
                return Err("negation cycle".into());
            }
            if need > level[rule.head.pred.as_str()] {
                level.insert(rule.head.pred.as_str(), need);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(program
        .rules
        .iter()
        .map(|r| level[r.head.pred.as_str()])
        .collect())
}
