//! Subroutine inlining by region cloning, which makes the later analysis
//! context sensitive.
//!
//! The recognized shape is the push-return-address calling idiom:
//!
//! ```text
//!     PUSH ret          ; return address = offset right after the call jump
//!     ...arguments...
//!     PUSH helper
//!     JUMP
//! ret: JUMPDEST
//! ```
//!
//! With two or more callers, the helper's closing dynamic jump sees a merged
//! return address and cannot be resolved. Cloning the helper region once per
//! caller (into a fresh copy group, callers pinned to their copy) lets the
//! stack simulation re-derive each return target exactly.

use std::collections::{BTreeMap, BTreeSet};

use crate::decompiler::raw::{resolve_jumps, AbsVal, JumpRes, RawCfg, RawExit};

/// Inline subroutine calls up to `depth` rounds; each round handles one
/// nesting level. Zero rounds leaves the graph untouched.
pub fn inline_subroutines(raw: &mut RawCfg, depth: u32) {
    for _ in 0..depth {
        resolve_jumps(raw);
        let candidates = find_candidates(raw);
        if candidates.is_empty() {
            break;
        }
        let mut touched: BTreeSet<usize> = BTreeSet::new();
        let mut any = false;
        for cand in candidates {
            if cand.region.iter().any(|b| touched.contains(b)) {
                continue; // overlapping with an already-cloned region
            }
            touched.extend(cand.region.iter().copied());
            clone_per_caller(raw, &cand);
            any = true;
        }
        if !any {
            break;
        }
    }
    resolve_jumps(raw);
}

struct Candidate {
    entry: usize,
    callers: Vec<usize>,
    region: BTreeSet<usize>,
}

fn find_candidates(raw: &mut RawCfg) -> Vec<Candidate> {
    // callers per helper entry: blocks ending in a resolved JUMP whose exit
    // stack still holds the offset right after that jump (a jumpdest)
    let mut callers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for b in 0..raw.blocks.len() {
        if raw.blocks[b].exit != RawExit::Jump {
            continue;
        }
        let Some(JumpRes::Resolved(target)) = raw.resolution[b] else {
            continue;
        };
        if raw.forced.contains_key(&b) {
            continue; // already pinned by an earlier round
        }
        let last = raw.blocks[b].ops.last().unwrap();
        let ret_offset = last.offset + last.size();
        let Some(ret_block) = raw.block_at(ret_offset, 0) else {
            continue;
        };
        if !raw.blocks[ret_block].ops[0].info.is_jumpdest() || ret_block == target {
            continue;
        }
        let Some(exit) = raw.exit_stack(b) else { continue };
        let holds_ret = exit
            .iter()
            .any(|v| matches!(v, AbsVal::Known(w) if *w == crate::word::Word::from(ret_offset as u64)));
        if holds_ret {
            callers.entry(target).or_default().push(b);
        }
    }

    let mut out = Vec::new();
    for (entry, callers) in callers {
        if callers.len() < 2 {
            continue; // a single call site resolves without cloning
        }
        let Some(region) = helper_region(raw, entry) else {
            continue;
        };
        if callers.iter().any(|c| region.contains(c)) || region.contains(&raw.entry) {
            raw.flags.insert("recursive-subroutine".to_string());
            continue;
        }
        out.push(Candidate {
            entry,
            callers,
            region,
        });
    }
    out
}

/// Blocks reachable from the helper entry over resolved edges, not expanding
/// past dynamic jumps (the return site). Requires at least one dynamic jump
/// inside, else there is nothing to repair.
fn helper_region(raw: &RawCfg, entry: usize) -> Option<BTreeSet<usize>> {
    let mut region = BTreeSet::new();
    let mut stack = vec![entry];
    let mut has_dynamic = false;
    while let Some(b) = stack.pop() {
        if !region.insert(b) {
            continue;
        }
        if region.len() > 256 {
            return None;
        }
        let dynamic_jump = matches!(raw.blocks[b].exit, RawExit::Jump)
            && matches!(raw.resolution[b], Some(JumpRes::Dynamic) | None);
        if dynamic_jump {
            has_dynamic = true;
            continue; // region boundary: the return jump
        }
        stack.extend(raw.resolved_successors(b));
    }
    has_dynamic.then_some(region)
}

fn clone_per_caller(raw: &mut RawCfg, cand: &Candidate) {
    for &caller in &cand.callers {
        let group = raw.clone_index.keys().map(|&(_, g)| g).max().unwrap_or(0) + 1;
        let mut map: BTreeMap<usize, usize> = BTreeMap::new();
        for &b in &cand.region {
            let new_id = raw.blocks.len();
            let mut block = raw.blocks[b].clone();
            block.id = new_id;
            raw.blocks.push(block);
            raw.groups.push(group);
            raw.resolution.push(None);
            raw.entry_stacks.push(None);
            raw.clone_index.insert((raw.blocks[b].start, group), new_id);
            map.insert(b, new_id);
        }
        // fix intra-region fall-through edges; jumps re-resolve by group
        for (&old, &new) in &map {
            let exit = raw.blocks[old].exit.clone();
            raw.blocks[new].exit = match exit {
                RawExit::Fall(crate::decompiler::raw::FallTo::Block(t)) => {
                    RawExit::Fall(crate::decompiler::raw::FallTo::Block(
                        map.get(&t).copied().unwrap_or(t),
                    ))
                }
                RawExit::JumpI { fall } => RawExit::JumpI {
                    fall: match fall {
                        crate::decompiler::raw::FallTo::Block(t) => {
                            crate::decompiler::raw::FallTo::Block(
                                map.get(&t).copied().unwrap_or(t),
                            )
                        }
                        other => other,
                    },
                },
                other => other,
            };
        }
        raw.forced.insert(caller, map[&cand.entry]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompiler::raw::build_cfg;
    use crate::evm::decode::decode_bytecode;

    // helper at 0x0d called from two sites, each pushing the jumpdest right
    // after its call jump as the return address:
    //
    //  0: PUSH1 0x05 PUSH1 0x0d JUMP     ; call 1, returns to 5
    //  5: JUMPDEST PUSH1 0x0b PUSH1 0x0d JUMP ; call 2, returns to 0x0b
    //  b: JUMPDEST STOP
    //  d: JUMPDEST PUSH1 1 PUSH1 0 SSTORE JUMP ; helper body + return
    const TWO_SITE: &str = "6005600d565b600b600d565b005b600160005556";

    #[test]
    fn two_sites_get_two_copies() {
        let image = decode_bytecode(TWO_SITE).unwrap();
        let mut raw = build_cfg(&image);
        resolve_jumps(&mut raw);
        // merged return address: the helper's closing jump is unresolved
        let helper = raw.by_offset[&0x0d];
        assert_eq!(raw.resolution[helper], Some(JumpRes::Dynamic));
        assert!(raw.flags.contains("imprecise-jumps"));

        let before = raw.blocks.len();
        inline_subroutines(&mut raw, 2);
        // two cloned copies of the single-block helper
        assert_eq!(raw.blocks.len(), before + 2);
        // both copies resolve their return jumps
        for &b in raw.clone_index.values() {
            assert!(matches!(raw.resolution[b], Some(JumpRes::Resolved(_))));
        }
        // the original body is unreferenced now
        assert_eq!(raw.entry_stacks[helper], None);
        assert!(!raw.flags.contains("recursive-subroutine"));
    }

    #[test]
    fn depth_zero_is_identity() {
        let image = decode_bytecode(TWO_SITE).unwrap();
        let mut raw = build_cfg(&image);
        resolve_jumps(&mut raw);
        let blocks = raw.blocks.len();
        let res = raw.resolution.clone();
        inline_subroutines(&mut raw, 0);
        assert_eq!(raw.blocks.len(), blocks);
        assert_eq!(raw.resolution, res);
    }

    #[test]
    fn recursion_is_flagged_not_inlined() {
        // two call sites into a helper that conditionally calls itself:
        //  0: PUSH1 5 PUSH1 0x0d JUMP
        //  5: JUMPDEST PUSH1 0x0b PUSH1 0x0d JUMP
        //  b: JUMPDEST STOP
        //  d: JUMPDEST CALLVALUE PUSH1 0x13 JUMPI JUMP
        // 13: JUMPDEST PUSH1 0x19 PUSH1 0x0d JUMP   ; self call
        // 19: JUMPDEST JUMP
        let code = "6005600d565b600b600d565b005b34601357565b6019600d565b56";
        let image = decode_bytecode(code).unwrap();
        let mut raw = build_cfg(&image);
        resolve_jumps(&mut raw);
        let blocks = raw.blocks.len();
        inline_subroutines(&mut raw, 2);
        assert!(raw.flags.contains("recursive-subroutine"));
        assert_eq!(raw.blocks.len(), blocks);
    }
}
