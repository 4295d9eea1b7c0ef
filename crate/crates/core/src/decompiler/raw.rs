//! Raw (stack-based) control-flow graph construction and jump-target
//! resolution by abstract stack simulation with constant folding.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::evm::decode::{CodeImage, RawOpcode};
use crate::word::{self, Word};

/// Where fall-through control lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FallTo {
    Block(usize),
    /// Falls into bytes that do not decode as code: aborts.
    Invalid,
    /// Runs off the end of the code: implicit normal halt.
    EndOfCode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawExit {
    Fall(FallTo),
    Jump,
    JumpI { fall: FallTo },
    Halt,
}

#[derive(Clone, Debug)]
pub struct RawBlock {
    pub id: usize,
    pub start: usize,
    pub ops: Vec<RawOpcode>,
    pub exit: RawExit,
}

/// Resolution result for a block ending in JUMP/JUMPI.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JumpRes {
    Resolved(usize),
    /// Target not a jump destination: the jump aborts at runtime.
    Invalid,
    /// Statically unknown: over-approximated by every jump destination.
    Dynamic,
}

/// Abstract stack value: a known 256-bit constant or anything.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbsVal {
    Known(Word),
    Unknown,
}

impl AbsVal {
    fn join(a: AbsVal, b: AbsVal) -> AbsVal {
        if a == b {
            a
        } else {
            AbsVal::Unknown
        }
    }
}

#[derive(Clone, Debug)]
pub struct RawCfg {
    pub blocks: Vec<RawBlock>,
    pub entry: usize,
    /// Offsets of original (group 0) blocks.
    pub by_offset: BTreeMap<usize, usize>,
    /// Blocks whose first opcode is JUMPDEST (legal jump targets); group 0.
    pub jumpdests: Vec<usize>,
    /// Copy group per block. Group 0 holds the original code; inlining
    /// clones subroutine regions into fresh groups. Jump targets resolve
    /// within the jumping block's group first, then fall back to group 0.
    pub groups: Vec<usize>,
    /// (offset, group) -> block id, for cloned blocks.
    pub clone_index: BTreeMap<(usize, usize), usize>,
    /// Caller blocks whose jump is pinned to a specific clone.
    pub forced: BTreeMap<usize, usize>,
    /// Filled by `resolve_jumps`.
    pub resolution: Vec<Option<JumpRes>>,
    /// Abstract stack at block entry; None when only reachable through
    /// dynamic edges (unknown depth).
    pub entry_stacks: Vec<Option<Vec<AbsVal>>>,
    pub flags: BTreeSet<String>,
}

impl RawCfg {
    /// Block starting at `offset`, preferring the given copy group.
    pub fn block_at(&self, offset: usize, group: usize) -> Option<usize> {
        if group != 0 {
            if let Some(&b) = self.clone_index.get(&(offset, group)) {
                return Some(b);
            }
        }
        self.by_offset.get(&offset).copied()
    }

    /// Abstract stack after executing block `b` from its current entry
    /// state. None when the block was never reached during resolution.
    pub fn exit_stack(&self, b: usize) -> Option<Vec<AbsVal>> {
        let entry = self.entry_stacks.get(b)?.clone()?;
        Some(sim_block(&self.blocks[b], &entry).stack)
    }

    /// Successor block ids over resolved edges only.
    pub fn resolved_successors(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        match &self.blocks[b].exit {
            RawExit::Fall(FallTo::Block(t)) => out.push(*t),
            RawExit::Jump => {
                if let Some(JumpRes::Resolved(t)) = self.resolution[b] {
                    out.push(t);
                }
            }
            RawExit::JumpI { fall } => {
                if let Some(JumpRes::Resolved(t)) = self.resolution[b] {
                    out.push(t);
                }
                if let FallTo::Block(t) = fall {
                    out.push(*t);
                }
            }
            _ => {}
        }
        out
    }
}

/// Split the opcode stream into basic blocks. Blocks start at offset 0, at
/// every JUMPDEST, and after every terminator; edges for fall-through are
/// recorded now, jump edges after `resolve_jumps`.
pub fn build_cfg(image: &CodeImage) -> RawCfg {
    let mut leaders: BTreeSet<usize> = BTreeSet::new();
    if let Some(first) = image.opcodes.first() {
        leaders.insert(first.offset);
    }
    for (i, op) in image.opcodes.iter().enumerate() {
        if op.info.is_jumpdest() {
            leaders.insert(op.offset);
        }
        if op.info.is_terminator() {
            if let Some(next) = image.opcodes.get(i + 1) {
                leaders.insert(next.offset);
            }
        }
        // an invalid region interrupts the instruction stream
        if let Some(next) = image.opcodes.get(i + 1) {
            if next.offset != op.offset + op.size() {
                leaders.insert(next.offset);
            }
        }
    }

    let mut blocks: Vec<RawBlock> = Vec::new();
    let mut by_offset = BTreeMap::new();
    let mut current: Vec<RawOpcode> = Vec::new();
    let mut start = 0usize;
    let flush = |start: usize, ops: &mut Vec<RawOpcode>, blocks: &mut Vec<RawBlock>| {
        if ops.is_empty() {
            return;
        }
        let id = blocks.len();
        blocks.push(RawBlock {
            id,
            start,
            ops: std::mem::take(ops),
            exit: RawExit::Halt, // fixed up below
        });
    };
    for op in &image.opcodes {
        if leaders.contains(&op.offset) && !current.is_empty() {
            flush(start, &mut current, &mut blocks);
        }
        if current.is_empty() {
            start = op.offset;
        }
        current.push(op.clone());
    }
    flush(start, &mut current, &mut blocks);
    for b in &blocks {
        by_offset.insert(b.start, b.id);
    }

    // exits
    let code_end = image.bytes.len();
    let n = blocks.len();
    for i in 0..n {
        let last = blocks[i].ops.last().unwrap().clone();
        let next_offset = last.offset + last.size();
        let fall = || -> FallTo {
            if next_offset >= code_end {
                FallTo::EndOfCode
            } else {
                match by_offset.get(&next_offset) {
                    Some(&id) => FallTo::Block(id),
                    None => FallTo::Invalid,
                }
            }
        };
        blocks[i].exit = match last.info.byte {
            0x56 => RawExit::Jump,
            0x57 => RawExit::JumpI { fall: fall() },
            0x00 | 0xf3 | 0xfd | 0xfe | 0xff => RawExit::Halt,
            _ => RawExit::Fall(fall()),
        };
    }

    let jumpdests: Vec<usize> = blocks
        .iter()
        .filter(|b| b.ops.first().unwrap().info.is_jumpdest())
        .map(|b| b.id)
        .collect();
    let nblocks = blocks.len();
    RawCfg {
        blocks,
        entry: 0,
        by_offset,
        jumpdests,
        groups: vec![0; nblocks],
        clone_index: BTreeMap::new(),
        forced: BTreeMap::new(),
        resolution: vec![None; nblocks],
        entry_stacks: vec![None; nblocks],
        flags: BTreeSet::new(),
    }
}

/// Exit state of one simulated block.
struct BlockOut {
    stack: Vec<AbsVal>,
    jump_target: Option<AbsVal>,
}

/// Run a block from an entry stack. Missing depth is synthesized as
/// Unknown (the SSA pass deals with genuine underflow).
fn sim_block(block: &RawBlock, entry: &[AbsVal]) -> BlockOut {
    let mut stack: Vec<AbsVal> = entry.to_vec();
    let mut jump_target = None;
    let pop = |stack: &mut Vec<AbsVal>| stack.pop().unwrap_or(AbsVal::Unknown);
    for op in &block.ops {
        let byte = op.info.byte;
        match byte {
            0x5f..=0x7f => {
                // pushes (PUSH0 included)
                let mut w = Word::ZERO;
                for b in &op.immediate {
                    w = (w << 8) | Word::from(*b);
                }
                stack.push(AbsVal::Known(w));
            }
            0x80..=0x8f => {
                let n = (byte - 0x80) as usize + 1;
                while stack.len() < n {
                    stack.insert(0, AbsVal::Unknown);
                }
                stack.push(stack[stack.len() - n]);
            }
            0x90..=0x9f => {
                let n = (byte - 0x90) as usize + 1;
                while stack.len() < n + 1 {
                    stack.insert(0, AbsVal::Unknown);
                }
                let top = stack.len() - 1;
                stack.swap(top, top - n);
            }
            0x50 => {
                pop(&mut stack);
            }
            0x58 => stack.push(AbsVal::Known(Word::from(op.offset as u64))),
            0x56 => {
                jump_target = Some(pop(&mut stack));
            }
            0x57 => {
                jump_target = Some(pop(&mut stack));
                pop(&mut stack); // condition
            }
            _ => {
                if let Some(fold) = fold_op(byte, &mut stack) {
                    stack.push(fold);
                } else {
                    for _ in 0..op.info.pops {
                        pop(&mut stack);
                    }
                    for _ in 0..op.info.pushes {
                        stack.push(AbsVal::Unknown);
                    }
                }
            }
        }
        if stack.len() > 1024 {
            // runaway junk; give up on precision for this block
            stack.drain(0..stack.len() - 1024);
        }
    }
    BlockOut { stack, jump_target }
}

/// Constant-fold pure operations when all inputs are known. Returns the
/// folded result and consumes the operands, or None to fall back to the
/// generic pop/push handling.
fn fold_op(byte: u8, stack: &mut Vec<AbsVal>) -> Option<AbsVal> {
    let arity: usize = match byte {
        0x15 | 0x19 => 1,
        0x01..=0x07 | 0x0a | 0x0b | 0x10..=0x14 | 0x16..=0x18 | 0x1a..=0x1d => 2,
        0x08 | 0x09 => 3,
        _ => return None,
    };
    if stack.len() < arity || stack[stack.len() - arity..].iter().any(|v| *v == AbsVal::Unknown) {
        return None;
    }
    let mut args = Vec::with_capacity(arity);
    for _ in 0..arity {
        match stack.pop().unwrap() {
            AbsVal::Known(w) => args.push(w),
            AbsVal::Unknown => unreachable!(),
        }
    }
    let r = match byte {
        0x01 => word::add(args[0], args[1]),
        0x02 => word::mul(args[0], args[1]),
        0x03 => word::sub(args[0], args[1]),
        0x04 => word::div(args[0], args[1]),
        0x05 => word::sdiv(args[0], args[1]),
        0x06 => word::rem(args[0], args[1]),
        0x07 => word::srem(args[0], args[1]),
        0x08 => word::addmod(args[0], args[1], args[2]),
        0x09 => word::mulmod(args[0], args[1], args[2]),
        0x0a => word::exp(args[0], args[1]),
        0x0b => word::signextend(args[0], args[1]),
        0x10 => word::lt(args[0], args[1]),
        0x11 => word::gt(args[0], args[1]),
        0x12 => word::slt(args[0], args[1]),
        0x13 => word::sgt(args[0], args[1]),
        0x14 => word::eq(args[0], args[1]),
        0x15 => word::iszero(args[0]),
        0x16 => args[0] & args[1],
        0x17 => args[0] | args[1],
        0x18 => args[0] ^ args[1],
        0x19 => !args[0],
        0x1a => word::byte(args[0], args[1]),
        0x1b => word::shl(args[0], args[1]),
        0x1c => word::shr(args[0], args[1]),
        0x1d => word::sar(args[0], args[1]),
        _ => unreachable!(),
    };
    Some(AbsVal::Known(r))
}

/// Resolve jump targets to a fixed point: propagate abstract stacks along
/// known edges, turning push-derived constants into concrete targets. Jumps
/// that stay unknown are over-approximated by an edge to every jump
/// destination and the contract is flagged `imprecise-jumps`.
pub fn resolve_jumps(cfg: &mut RawCfg) {
    if cfg.blocks.is_empty() {
        return;
    }
    let mut entry_stacks: Vec<Option<Vec<AbsVal>>> = vec![None; cfg.blocks.len()];
    let mut resolution: Vec<Option<JumpRes>> = vec![None; cfg.blocks.len()];
    entry_stacks[cfg.entry] = Some(Vec::new());

    let mut depth_mismatch = false;
    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(cfg.entry);
    let mut visits = vec![0u32; cfg.blocks.len()];
    while let Some(b) = queue.pop_front() {
        visits[b] += 1;
        if visits[b] > 256 {
            continue; // safety valve; lattice should converge long before
        }
        let entry = entry_stacks[b].clone().unwrap_or_default();
        let out = sim_block(&cfg.blocks[b], &entry);

        let mut propagate = |to: usize,
                             stack: &[AbsVal],
                             entry_stacks: &mut Vec<Option<Vec<AbsVal>>>,
                             queue: &mut VecDeque<usize>| {
            let merged = match &entry_stacks[to] {
                None => stack.to_vec(),
                Some(old) => {
                    if old.len() != stack.len() {
                        depth_mismatch = true;
                    }
                    let keep = old.len().min(stack.len());
                    let mut merged = Vec::with_capacity(keep);
                    for i in 0..keep {
                        merged.push(AbsVal::join(
                            old[old.len() - keep + i],
                            stack[stack.len() - keep + i],
                        ));
                    }
                    merged
                }
            };
            if entry_stacks[to].as_deref() != Some(&merged) {
                entry_stacks[to] = Some(merged);
                queue.push_back(to);
            }
        };

        let group = cfg.groups[b];
        let resolve_target = |cfg: &RawCfg, target: Option<AbsVal>| -> JumpRes {
            match target {
                Some(AbsVal::Known(w)) => {
                    if w > Word::from(u32::MAX) {
                        return JumpRes::Invalid;
                    }
                    let offset = w.as_usize();
                    match cfg.block_at(offset, group) {
                        Some(id)
                            if cfg.blocks[id].ops.first().unwrap().info.is_jumpdest() =>
                        {
                            JumpRes::Resolved(id)
                        }
                        _ => JumpRes::Invalid,
                    }
                }
                _ => JumpRes::Dynamic,
            }
        };

        match &cfg.blocks[b].exit {
            RawExit::Fall(FallTo::Block(t)) => {
                propagate(*t, &out.stack, &mut entry_stacks, &mut queue)
            }
            RawExit::Fall(_) => {}
            RawExit::Halt => {}
            RawExit::Jump => {
                let res = match cfg.forced.get(&b) {
                    Some(&t) => JumpRes::Resolved(t),
                    None => resolve_target(cfg, out.jump_target),
                };
                if let JumpRes::Resolved(t) = res {
                    propagate(t, &out.stack, &mut entry_stacks, &mut queue);
                }
                resolution[b] = Some(res);
            }
            RawExit::JumpI { fall } => {
                let res = resolve_target(cfg, out.jump_target);
                if let JumpRes::Resolved(t) = res {
                    propagate(t, &out.stack, &mut entry_stacks, &mut queue);
                }
                resolution[b] = Some(res);
                if let FallTo::Block(t) = fall {
                    propagate(*t, &out.stack, &mut entry_stacks, &mut queue);
                }
            }
        }
    }

    if depth_mismatch {
        cfg.flags.insert("stack-depth-mismatch".to_string());
    }
    let any_dynamic = resolution
        .iter()
        .any(|r| matches!(r, Some(JumpRes::Dynamic)));
    if any_dynamic {
        cfg.flags.insert("imprecise-jumps".to_string());
    }
    cfg.entry_stacks = entry_stacks;
    cfg.resolution = resolution;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::decode::decode_bytecode;

    fn raw(hex: &str) -> RawCfg {
        let image = decode_bytecode(hex).unwrap();
        let mut cfg = build_cfg(&image);
        resolve_jumps(&mut cfg);
        cfg
    }

    #[test]
    fn single_stop_is_one_block() {
        let cfg = raw("00");
        assert_eq!(cfg.blocks.len(), 1);
        assert_eq!(cfg.blocks[0].exit, RawExit::Halt);
    }

    #[test]
    fn push_jump_links_two_blocks() {
        // PUSH1 0x03; JUMP; JUMPDEST; STOP
        let cfg = raw("6003565b00");
        assert_eq!(cfg.blocks.len(), 2);
        assert_eq!(cfg.resolution[0], Some(JumpRes::Resolved(1)));
        assert!(!cfg.flags.contains("imprecise-jumps"));
    }

    #[test]
    fn jumpi_keeps_fall_through_edge() {
        // CALLVALUE; PUSH1 0x06; JUMPI; STOP; JUMPDEST; STOP
        let cfg = raw("346006570056005b00");
        let b0 = &cfg.blocks[0];
        match b0.exit {
            RawExit::JumpI { fall: FallTo::Block(f) } => {
                assert_eq!(cfg.blocks[f].start, 4);
            }
            ref other => panic!("unexpected exit {other:?}"),
        }
    }

    #[test]
    fn folded_arithmetic_target_resolves() {
        // PUSH1 3; PUSH1 3; ADD -> 6; JUMP; JUMPDEST@6; STOP
        let cfg = raw("60036003015 65b00".replace(' ', "").as_str());
        assert_eq!(cfg.resolution[0], Some(JumpRes::Resolved(1)));
    }

    #[test]
    fn storage_target_stays_dynamic() {
        // PUSH1 0; SLOAD; JUMP; JUMPDEST; STOP
        let cfg = raw("60005456  5b00".replace(' ', "").as_str());
        assert_eq!(cfg.resolution[0], Some(JumpRes::Dynamic));
        assert!(cfg.flags.contains("imprecise-jumps"));
    }

    #[test]
    fn jump_to_non_jumpdest_is_invalid() {
        // PUSH1 0x04; JUMP; STOP; STOP  (4 is not a JUMPDEST)
        let cfg = raw("600456 0000".replace(' ', "").as_str());
        assert_eq!(cfg.resolution[0], Some(JumpRes::Invalid));
    }
}
