//! Join-point computation: for each conditional branch, the label where its
//! two paths first re-converge, taken as the immediate postdominator of the
//! branch block. Branches whose paths never meet again (or whose targets are
//! unresolved) get no join, which leaves control taint flowing to the end of
//! the function: a sound over-approximation.

use petgraph::algo::dominators::simple_fast;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::ir::{Cfg, Exit, SsaOp};

pub fn compute_join_points(cfg: &mut Cfg) {
    cfg.join_points.clear();
    if cfg.blocks.is_empty() {
        return;
    }
    // Reversed graph with a virtual exit; postdominators are dominators of
    // the reversal rooted at that exit.
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<NodeIndex> = cfg.blocks.iter().map(|_| graph.add_node(())).collect();
    let exit = graph.add_node(());
    for block in &cfg.blocks {
        let succs = cfg.successors(block.id);
        if succs.is_empty() {
            graph.add_edge(exit, nodes[block.id.index()], ());
        } else {
            for s in succs {
                graph.add_edge(nodes[s.index()], nodes[block.id.index()], ());
            }
        }
    }
    let postdom = simple_fast(&graph, exit);

    for block in &cfg.blocks {
        let Exit::Branch { .. } = &block.exit else { continue };
        let succs = cfg.successors(block.id);
        if succs.len() < 2 {
            continue;
        }
        let Some(goto) = block.instrs.last().filter(|i| i.op == SsaOp::Goto) else {
            continue;
        };
        let Some(ipd) = postdom.immediate_dominator(nodes[block.id.index()]) else {
            continue;
        };
        if ipd == exit {
            continue;
        }
        let join_block = cfg.blocks[ipd.index()].id;
        if let Some(join_label) = cfg.first_label_from(join_block) {
            cfg.join_points.push((goto.label, join_label));
        }
    }
    cfg.join_points.sort();
    cfg.join_points.dedup();
}
