use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use indexmap::IndexSet;

use crate::term::{Const, Term};

/// A set of ground facts grouped by predicate, used both as evaluation input
/// and inside the computed model.
#[derive(Clone, Debug, Default)]
pub struct FactSet {
    preds: BTreeMap<String, Vec<Vec<Const>>>,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pred: impl Into<String>, args: Vec<Const>) {
        self.preds.entry(pred.into()).or_default().push(args);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Const])> {
        self.preds
            .iter()
            .flat_map(|(p, rows)| rows.iter().map(move |r| (p.as_str(), r.as_slice())))
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.preds.keys().map(String::as_str)
    }

    pub fn rows(&self, pred: &str) -> &[Vec<Const>] {
        self.preds.get(pred).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.preds.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Facts of one predicate with an index on every argument position.
#[derive(Clone, Debug)]
pub struct Relation {
    arity: usize,
    rows: IndexSet<Vec<Const>>,
    index: Vec<HashMap<Const, Vec<u32>>>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            rows: IndexSet::new(),
            index: (0..arity).map(|_| HashMap::new()).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Insert a row; returns false if it was already present.
    pub fn insert(&mut self, row: Vec<Const>) -> bool {
        debug_assert_eq!(row.len(), self.arity);
        let (id, new) = self.rows.insert_full(row);
        if new {
            let row = self.rows.get_index(id).unwrap();
            for (pos, c) in row.iter().enumerate() {
                self.index[pos]
                    .entry(c.clone())
                    .or_default()
                    .push(id as u32);
            }
        }
        new
    }

    pub fn contains(&self, row: &[Const]) -> bool {
        self.rows.contains(row)
    }

    pub fn rows(&self) -> impl Iterator<Item = &Vec<Const>> {
        self.rows.iter()
    }

    pub fn row(&self, id: u32) -> &Vec<Const> {
        self.rows.get_index(id as usize).unwrap()
    }

    /// Ids of rows matching all `(position, value)` bindings. Picks the most
    /// selective index bucket and verifies the rest.
    pub fn matching(&self, bound: &[(usize, &Const)]) -> Vec<u32> {
        if bound.is_empty() {
            return (0..self.rows.len() as u32).collect();
        }
        let mut best: Option<&Vec<u32>> = None;
        for (pos, c) in bound {
            match self.index[*pos].get(*c) {
                None => return Vec::new(),
                Some(bucket) => {
                    if best.map_or(true, |b| bucket.len() < b.len()) {
                        best = Some(bucket);
                    }
                }
            }
        }
        let bucket = best.unwrap();
        bucket
            .iter()
            .copied()
            .filter(|&id| {
                let row = self.row(id);
                bound.iter().all(|(pos, c)| &row[*pos] == *c)
            })
            .collect()
    }
}

/// The stratified least model of a program for a given input.
///
/// The model is immutable once computed and can be shared freely across
/// threads for read-only querying.
#[derive(Clone, Debug, Default)]
pub struct Model {
    rels: HashMap<String, Relation>,
    fact_count: usize,
}

impl Model {
    pub(crate) fn empty() -> Self {
        Model::default()
    }

    pub(crate) fn insert(&mut self, pred: &str, row: Vec<Const>) -> bool {
        let arity = row.len();
        let rel = self
            .rels
            .entry(pred.to_string())
            .or_insert_with(|| Relation::new(arity));
        let new = rel.insert(row);
        if new {
            self.fact_count += 1;
        }
        new
    }

    pub fn len(&self) -> usize {
        self.fact_count
    }

    pub fn is_empty(&self) -> bool {
        self.fact_count == 0
    }

    pub fn relation(&self, pred: &str) -> Option<&Relation> {
        self.rels.get(pred)
    }

    pub fn contains(&self, pred: &str, row: &[Const]) -> bool {
        self.rels.get(pred).is_some_and(|r| r.contains(row))
    }

    pub fn predicates(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.rels.keys().map(String::as_str).collect();
        names.sort_unstable();
        names
    }

    /// All substitutions grounding `terms` to a fact of `pred`. Constants in
    /// the query filter the corresponding positions; repeated variables must
    /// unify. Unknown predicates yield the empty set.
    pub fn query(&self, pred: &str, terms: &[Term]) -> Vec<BTreeMap<String, Const>> {
        let Some(rel) = self.rels.get(pred) else {
            log::debug!("query against unknown predicate {pred}");
            return Vec::new();
        };
        if rel.arity() != terms.len() {
            log::debug!(
                "query arity mismatch for {pred}: got {}, relation has {}",
                terms.len(),
                rel.arity()
            );
            return Vec::new();
        }
        let bound: Vec<(usize, &Const)> = terms
            .iter()
            .enumerate()
            .filter_map(|(i, t)| match t {
                Term::Const(c) => Some((i, c)),
                Term::Var(_) => None,
            })
            .collect();
        let mut out = Vec::new();
        'rows: for id in rel.matching(&bound) {
            let row = rel.row(id);
            let mut subst: BTreeMap<String, Const> = BTreeMap::new();
            for (i, t) in terms.iter().enumerate() {
                if let Term::Var(v) = t {
                    match subst.get(v.as_str()) {
                        Some(prev) if prev != &row[i] => continue 'rows,
                        Some(_) => {}
                        None => {
                            subst.insert(v.clone(), row[i].clone());
                        }
                    }
                }
            }
            out.push(subst);
        }
        out
    }

    /// One fact per line, `pred(c1,...,cn)`, sorted by predicate then
    /// arguments. Stable across runs; intended for golden-file tests.
    pub fn dump_sorted(&self) -> String {
        let mut lines: Vec<String> = Vec::with_capacity(self.fact_count);
        for pred in self.predicates() {
            let rel = &self.rels[pred];
            let mut rows: Vec<&Vec<Const>> = rel.rows().collect();
            rows.sort();
            for row in rows {
                let mut line = String::new();
                let _ = write!(line, "{}(", pred);
                for (i, c) in row.iter().enumerate() {
                    if i > 0 {
                        line.push(',');
                    }
                    let _ = write!(line, "{}", c);
                }
                line.push(')');
                lines.push(line);
            }
        }
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}
