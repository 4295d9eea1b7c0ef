//! Random control-flow shapes plus brute-force flow oracles: transitive
//! reachability, exhaustive-path dominance, and branch-interval computation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::prelude::*;

/// A block-structured flow graph over string instruction labels. Blocks are
/// non-empty straight-line label sequences.
#[derive(Clone, Debug)]
pub struct TestCfg {
    pub blocks: Vec<Vec<String>>,
    pub edges: Vec<(usize, usize)>,
    pub entry: usize,
}

impl TestCfg {
    /// Consecutive-instruction pairs: within blocks and across edges.
    pub fn follow_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for block in &self.blocks {
            for w in block.windows(2) {
                out.push((w[0].clone(), w[1].clone()));
            }
        }
        for &(a, b) in &self.edges {
            out.push((
                self.blocks[a].last().unwrap().clone(),
                self.blocks[b].first().unwrap().clone(),
            ));
        }
        out
    }

    pub fn labels(&self) -> Vec<String> {
        self.blocks.iter().flatten().cloned().collect()
    }

    /// All pairs (l1, l2) such that l2 is reachable from l1 by one or more
    /// follow steps.
    pub fn may_follow_oracle(&self) -> BTreeSet<(String, String)> {
        let follow = self.follow_pairs();
        let mut succs: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &follow {
            succs.entry(a).or_default().push(b);
        }
        let mut out = BTreeSet::new();
        for l1 in self.labels() {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let mut queue: VecDeque<&str> = VecDeque::new();
            queue.push_back(l1.as_str());
            while let Some(cur) = queue.pop_front() {
                for &next in succs.get(cur).map_or(&Vec::new(), |v| v) {
                    if seen.insert(next) {
                        queue.push_back(next);
                    }
                }
            }
            for l2 in seen {
                out.insert((l1.clone(), l2.to_string()));
            }
        }
        out
    }

    /// Does every path from the entry instruction to `l2` pass `l1` strictly
    /// before `l2`? Requires the block graph to be a DAG; enumerates every
    /// path. Vacuously true when `l2` is unreachable.
    pub fn must_precede_oracle(&self, l1: &str, l2: &str) -> bool {
        if l1 == l2 {
            return false;
        }
        let follow = self.follow_pairs();
        let mut succs: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &follow {
            succs.entry(a).or_default().push(b);
        }
        let entry_label = self.blocks[self.entry].first().unwrap().as_str();
        // DFS over all paths from entry, tracking whether l1 was seen.
        let mut stack: Vec<(&str, bool)> = vec![(entry_label, entry_label == l1)];
        let mut visited: BTreeSet<(&str, bool)> = BTreeSet::new();
        while let Some((cur, seen_l1)) = stack.pop() {
            if cur == l2 && !seen_l1 {
                return false;
            }
            for &next in succs.get(cur).map_or(&Vec::new(), |v| v) {
                let state = (next, seen_l1 || next == l1);
                if visited.insert(state) {
                    stack.push(state);
                }
            }
        }
        true
    }

    /// Labels strictly between a branch instruction and a join label: every
    /// label reachable from the branch's successors without passing through
    /// the join. The branch and join themselves are excluded.
    pub fn branch_interval(&self, branch: &str, join: &str) -> BTreeSet<String> {
        let follow = self.follow_pairs();
        let mut succs: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &follow {
            succs.entry(a.as_str()).or_default().push(b);
        }
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        for &s in succs.get(branch).map_or(&Vec::new(), |v| v) {
            if s != join && seen.insert(s.to_string()) {
                queue.push_back(s);
            }
        }
        while let Some(cur) = queue.pop_front() {
            for &next in succs.get(cur).map_or(&Vec::new(), |v| v) {
                if next != join && seen.insert(next.to_string()) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }
}

/// Random graph with up to `max_blocks` blocks of 1..=3 labels; arbitrary
/// edges (cycles allowed), every block up to two successors.
pub fn gen_cfg(rng: &mut impl Rng, max_blocks: usize) -> TestCfg {
    let n = rng.gen_range(1..=max_blocks);
    gen_with(rng, n, false)
}

/// Random DAG: edges only go from lower to higher block index.
pub fn gen_dag(rng: &mut impl Rng, max_blocks: usize) -> TestCfg {
    let n = rng.gen_range(1..=max_blocks);
    gen_with(rng, n, true)
}

fn gen_with(rng: &mut impl Rng, n: usize, dag: bool) -> TestCfg {
    let mut blocks = Vec::new();
    let mut label = 0usize;
    for _ in 0..n {
        let len = rng.gen_range(1..=3);
        let mut b = Vec::new();
        for _ in 0..len {
            b.push(format!("l{}", label));
            label += 1;
        }
        blocks.push(b);
    }
    let mut edges = Vec::new();
    for from in 0..n {
        let lo = if dag { from + 1 } else { 0 };
        if lo >= n {
            continue;
        }
        for _ in 0..rng.gen_range(0..=2) {
            let to = rng.gen_range(lo..n);
            if !edges.contains(&(from, to)) {
                edges.push((from, to));
            }
        }
    }
    TestCfg {
        blocks,
        edges,
        entry: 0,
    }
}
