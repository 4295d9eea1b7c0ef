use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::program::Program;

/// An ordered partition of a program's rules. Rules in stratum `i` may use
/// (positively) predicates defined in strata `<= i` and negate predicates
/// defined strictly below.
#[derive(Clone, Debug)]
pub struct Stratification {
    /// Rule indices per stratum, bottom first.
    pub strata: Vec<Vec<usize>>,
    /// Stratum of each intensional predicate.
    pub pred_stratum: BTreeMap<String, usize>,
}

#[derive(Error, Clone, Debug, PartialEq, Eq)]
pub enum StratifyError {
    #[error("negation cycle through predicates: {}", .0.join(", "))]
    NegationCycle(Vec<String>),
}

impl Program {
    /// Partition this program's rules into strata, or report the predicate
    /// cycle that makes it non-stratifiable.
    pub fn stratify(&self) -> Result<Stratification, StratifyError> {
        stratify(self)
    }
}

/// Partition the rules of `program` into strata, or report the predicate
/// cycle that makes the program non-stratifiable.
pub fn stratify(program: &Program) -> Result<Stratification, StratifyError> {
    let mut nodes: HashMap<&str, NodeIndex> = HashMap::new();
    let mut graph: DiGraph<&str, bool> = DiGraph::new();

    // Collect predicate names first so graph nodes can borrow from the program.
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for rule in &program.rules {
        names.insert(rule.head.pred.as_str());
        for lit in &rule.body {
            names.insert(lit.atom.pred.as_str());
        }
    }
    for name in &names {
        let ix = graph.add_node(*name);
        nodes.insert(name, ix);
    }

    // Edge body-pred -> head-pred, weighted by negation.
    for rule in &program.rules {
        let head = nodes[rule.head.pred.as_str()];
        for lit in &rule.body {
            let body = nodes[lit.atom.pred.as_str()];
            graph.add_edge(body, head, lit.negated);
        }
    }

    // Any strongly connected component containing a negative edge is a
    // negation cycle.
    let sccs = tarjan_scc(&graph);
    let mut scc_of: HashMap<NodeIndex, usize> = HashMap::new();
    for (i, scc) in sccs.iter().enumerate() {
        for &n in scc {
            scc_of.insert(n, i);
        }
    }
    for edge in graph.edge_indices() {
        let (a, b) = graph.edge_endpoints(edge).unwrap();
        if *graph.edge_weight(edge).unwrap() && scc_of[&a] == scc_of[&b] {
            let mut preds: Vec<String> = sccs[scc_of[&a]]
                .iter()
                .map(|&n| graph[n].to_string())
                .collect();
            preds.sort();
            return Err(StratifyError::NegationCycle(preds));
        }
    }

    // tarjan_scc returns components in reverse topological order, so walking
    // the list backwards visits dependencies before dependents.
    let mut scc_stratum = vec![0usize; sccs.len()];
    for (i, scc) in sccs.iter().enumerate().rev() {
        let mut level = 0usize;
        for &n in scc {
            for edge in graph.edges_directed(n, petgraph::Direction::Incoming) {
                let src = scc_of[&petgraph::visit::EdgeRef::source(&edge)];
                if src == i {
                    continue;
                }
                let need = scc_stratum[src] + usize::from(*edge.weight());
                level = level.max(need);
            }
        }
        scc_stratum[i] = level;
    }

    let mut pred_stratum: BTreeMap<String, usize> = BTreeMap::new();
    let intensional = program.intensional();
    for (&name, &ix) in &nodes {
        if intensional.contains(name) {
            pred_stratum.insert(name.to_string(), scc_stratum[scc_of[&ix]]);
        }
    }

    let depth = pred_stratum.values().copied().max().map_or(1, |m| m + 1);
    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); depth];
    for (idx, rule) in program.rules.iter().enumerate() {
        let s = pred_stratum[rule.head.pred.as_str()];
        strata[s].push(idx);
    }
    Ok(Stratification {
        strata,
        pred_stratum,
    })
}
