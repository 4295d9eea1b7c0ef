//! Lifting the stack machine to stackless SSA.
//!
//! Each block is simulated with a symbolic stack of [`Value`]s. Pushes become
//! assignments of constants, dup/swap/pop dissolve into stack bookkeeping,
//! and every value-producing opcode defines a fresh variable. At block entry
//! with multiple predecessors, fresh merge variables stand for the incoming
//! stack slots; each predecessor gets one copy assignment per slot before its
//! terminator.

use std::collections::BTreeSet;

use crate::decompiler::raw::{FallTo, JumpRes, RawCfg, RawExit};
use crate::evm::decode::CodeImage;
use crate::ir::{Block, BlockId, Cfg, Exit, JumpTargets, SsaInstruction, SsaOp, Value};
use crate::word::Word;

/// Per-block symbolic machine state while lowering.
struct BlockState {
    stack: Vec<Value>,
    /// Blocks only reachable through unresolved jumps have unknown entry
    /// depth; popping past the known slots yields `Top` instead of failing.
    bottomless: bool,
    underflow: bool,
}

impl BlockState {
    fn pop(&mut self) -> Option<Value> {
        match self.stack.pop() {
            Some(v) => Some(v),
            None if self.bottomless => Some(Value::Top),
            None => {
                self.underflow = true;
                None
            }
        }
    }
}

pub fn to_ssa(image: &CodeImage, raw: &RawCfg) -> Cfg {
    let mut cfg = Cfg {
        flags: raw.flags.clone(),
        ..Cfg::default()
    };
    let nblocks = raw.blocks.len();

    // Materialized sinks for fall-through into data or off the code end.
    let mut invalid_sink: Option<BlockId> = None;
    let mut end_sink: Option<BlockId> = None;

    // Reserve ids 0..nblocks for the raw blocks so indices line up.
    for rb in &raw.blocks {
        cfg.blocks.push(Block {
            id: BlockId(rb.id as u32),
            offset: rb.start,
            head_jumpdest: rb.ops.first().unwrap().info.is_jumpdest(),
            instrs: Vec::new(),
            exit: Exit::Halt,
        });
        cfg.block_params.push(Vec::new());
    }

    // Count incoming resolved edges to decide which blocks need merge vars.
    let mut pred_count = vec![0usize; nblocks];
    let mut dynamic_target = vec![false; nblocks];
    for rb in &raw.blocks {
        match &rb.exit {
            RawExit::Fall(FallTo::Block(t)) => pred_count[*t] += 1,
            RawExit::Jump => match raw.resolution[rb.id] {
                Some(JumpRes::Resolved(t)) => pred_count[t] += 1,
                Some(JumpRes::Dynamic) => {
                    for &d in &raw.jumpdests {
                        dynamic_target[d] = true;
                    }
                }
                _ => {}
            },
            RawExit::JumpI { fall } => {
                if let FallTo::Block(t) = fall {
                    pred_count[*t] += 1;
                }
                match raw.resolution[rb.id] {
                    Some(JumpRes::Resolved(t)) => pred_count[t] += 1,
                    Some(JumpRes::Dynamic) => {
                        for &d in &raw.jumpdests {
                            dynamic_target[d] = true;
                        }
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }

    // Process in deterministic DFS pre-order from the entry, then any
    // leftovers (unreachable or dynamic-only blocks) in index order.
    let order = visit_order(raw);

    let mut exit_stacks: Vec<Option<Vec<Value>>> = vec![None; nblocks];
    let mut underflow = false;

    for &b in &order {
        // Entry stack: inherit from a single processed predecessor, else
        // fresh merge variables per known slot.
        let single_pred = pred_count[b] == 1 && !dynamic_target[b] && b != raw.entry;
        let inherited = if single_pred {
            find_single_pred(raw, b).and_then(|p| exit_stacks[p].clone())
        } else {
            None
        };
        let mut state = match inherited {
            Some(stack) => BlockState {
                stack,
                bottomless: false,
                underflow: false,
            },
            None => match &raw.entry_stacks[b] {
                Some(entry) if b == raw.entry => {
                    debug_assert!(entry.is_empty());
                    BlockState {
                        stack: Vec::new(),
                        bottomless: false,
                        underflow: false,
                    }
                }
                Some(entry) => {
                    let params: Vec<_> =
                        (0..entry.len()).map(|_| cfg.fresh_var()).collect();
                    cfg.block_params[b] = params.clone();
                    BlockState {
                        stack: params.into_iter().map(Value::Var).collect(),
                        bottomless: false,
                        underflow: false,
                    }
                }
                None => BlockState {
                    stack: Vec::new(),
                    bottomless: true,
                    underflow: false,
                },
            },
        };

        lower_block(&mut cfg, raw, b, &mut state, &mut invalid_sink, &mut end_sink);
        underflow |= state.underflow;
        exit_stacks[b] = Some(state.stack);
    }

    if underflow {
        cfg.flags.insert("stack-underflow".to_string());
    }

    // Insert merge copies at the end of each resolved predecessor edge.
    for b in 0..nblocks {
        let params = cfg.block_params[b].clone();
        if params.is_empty() {
            continue;
        }
        for p in resolved_preds(raw, b) {
            let Some(exit) = exit_stacks[p].clone() else { continue };
            if exit.len() < params.len() {
                cfg.flags.insert("stack-depth-mismatch".to_string());
            }
            let offset = cfg.blocks[p]
                .instrs
                .last()
                .map(|i| cfg.label_offset(i.label))
                .unwrap_or(cfg.blocks[p].offset);
            let mut copies = Vec::new();
            for (i, &m) in params.iter().enumerate() {
                // top-aligned: params are the top `params.len()` slots
                let Some(src_ix) = exit
                    .len()
                    .checked_sub(params.len())
                    .map(|base| base + i)
                else {
                    continue;
                };
                let Some(&src) = exit.get(src_ix) else { continue };
                let label = cfg.fresh_label(offset);
                copies.push(SsaInstruction {
                    label,
                    op: SsaOp::Assign,
                    result: Some(m),
                    args: vec![src],
                });
            }
            let block = &mut cfg.blocks[p];
            let insert_at = block
                .instrs
                .iter()
                .position(|i| i.op.is_terminator())
                .unwrap_or(block.instrs.len());
            for (k, c) in copies.into_iter().enumerate() {
                block.instrs.insert(insert_at + k, c);
            }
        }
    }

    let _ = image;
    cfg
}

fn find_single_pred(raw: &RawCfg, b: usize) -> Option<usize> {
    resolved_preds(raw, b).into_iter().next()
}

fn resolved_preds(raw: &RawCfg, b: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for rb in &raw.blocks {
        let mut hits = 0usize;
        match &rb.exit {
            RawExit::Fall(FallTo::Block(t)) if *t == b => hits += 1,
            RawExit::JumpI { fall } => {
                if *fall == FallTo::Block(b) {
                    hits += 1;
                }
                if raw.resolution[rb.id] == Some(JumpRes::Resolved(b)) {
                    hits += 1;
                }
            }
            RawExit::Jump => {
                if raw.resolution[rb.id] == Some(JumpRes::Resolved(b)) {
                    hits += 1;
                }
            }
            _ => {}
        }
        if hits > 0 {
            out.push(rb.id);
        }
    }
    out
}

/// DFS pre-order from the entry over resolved edges, then remaining blocks.
fn visit_order(raw: &RawCfg) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    let mut stack = vec![raw.entry];
    while let Some(b) = stack.pop() {
        if !seen.insert(b) {
            continue;
        }
        order.push(b);
        let mut succs = Vec::new();
        match &raw.blocks[b].exit {
            RawExit::Fall(FallTo::Block(t)) => succs.push(*t),
            RawExit::Jump => {
                if let Some(JumpRes::Resolved(t)) = raw.resolution[b] {
                    succs.push(t);
                }
            }
            RawExit::JumpI { fall } => {
                if let Some(JumpRes::Resolved(t)) = raw.resolution[b] {
                    succs.push(t);
                }
                if let FallTo::Block(t) = fall {
                    succs.push(*t);
                }
            }
            _ => {}
        }
        // push reversed so the first successor is visited first
        for s in succs.into_iter().rev() {
            stack.push(s);
        }
    }
    for b in 0..raw.blocks.len() {
        if !seen.contains(&b) {
            order.push(b);
        }
    }
    order
}

fn lower_block(
    cfg: &mut Cfg,
    raw: &RawCfg,
    b: usize,
    state: &mut BlockState,
    invalid_sink: &mut Option<BlockId>,
    end_sink: &mut Option<BlockId>,
) {
    let rb = &raw.blocks[b];
    let mut instrs: Vec<SsaInstruction> = Vec::new();
    let mut truncated = false;

    macro_rules! pops {
        ($n:expr) => {{
            let mut args = Vec::with_capacity($n);
            let mut failed = false;
            for _ in 0..$n {
                match state.pop() {
                    Some(v) => args.push(v),
                    None => {
                        failed = true;
                        break;
                    }
                }
            }
            if failed {
                truncated = true;
                break;
            }
            args
        }};
    }

    for op in &rb.ops {
        let offset = op.offset;
        let byte = op.info.byte;
        let emit = |cfg: &mut Cfg,
                        instrs: &mut Vec<SsaInstruction>,
                        op: SsaOp,
                        result: Option<crate::ir::VarId>,
                        args: Vec<Value>| {
            let label = cfg.fresh_label(offset);
            instrs.push(SsaInstruction {
                label,
                op,
                result,
                args,
            });
        };

        match byte {
            0x5f..=0x7f => {
                let mut w = Word::ZERO;
                for imm in &op.immediate {
                    w = (w << 8) | Word::from(*imm);
                }
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Assign, Some(v), vec![Value::Const(w)]);
                state.stack.push(Value::Var(v));
            }
            0x80..=0x8f => {
                let n = (byte - 0x80) as usize + 1;
                if ensure_depth(state, n).is_err() {
                    truncated = true;
                    break;
                }
                let v = state.stack[state.stack.len() - n];
                state.stack.push(v);
            }
            0x90..=0x9f => {
                let n = (byte - 0x90) as usize + 1;
                if ensure_depth(state, n + 1).is_err() {
                    truncated = true;
                    break;
                }
                let top = state.stack.len() - 1;
                state.stack.swap(top, top - n);
            }
            0x50 => {
                let _ = pops!(1);
            }
            0x5b => {} // jumpdest: block boundary only
            0x58 => {
                let v = cfg.fresh_var();
                emit(
                    cfg,
                    &mut instrs,
                    SsaOp::Assign,
                    Some(v),
                    vec![Value::Const(Word::from(offset as u64))],
                );
                state.stack.push(Value::Var(v));
            }
            // arithmetic / comparison / bitwise family
            0x01..=0x0b | 0x10..=0x1d => {
                let name = op_name(byte);
                let args = pops!(op.info.pops as usize);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Op(name), Some(v), args);
                state.stack.push(Value::Var(v));
            }
            0x20 => {
                let args = pops!(2);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Sha3, Some(v), args);
                state.stack.push(Value::Var(v));
            }
            // environment reads whose value is the tag itself
            0x30 | 0x32 | 0x33 | 0x34 | 0x3a | 0x41 | 0x42 | 0x43 | 0x44 | 0x45 | 0x46 | 0x48 => {
                let tag = env_tag(byte);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::EnvRead(tag), Some(v), vec![]);
                state.stack.push(Value::Var(v));
            }
            0x31 => {
                let args = pops!(1);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Balance, Some(v), args);
                state.stack.push(Value::Var(v));
            }
            0x47 => {
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Balance, Some(v), vec![Value::Top]);
                state.stack.push(Value::Var(v));
            }
            0x35 => {
                let args = pops!(1);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::DataLoad, Some(v), args);
                state.stack.push(Value::Var(v));
            }
            0x36 => {
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::DataSize, Some(v), vec![]);
                state.stack.push(Value::Var(v));
            }
            0x37 => {
                let args = pops!(3);
                emit(cfg, &mut instrs, SsaOp::DataCopy, None, args);
            }
            0x39 | 0x3e => {
                let args = pops!(3);
                emit(cfg, &mut instrs, SsaOp::CodeCopy, None, vec![args[0]]);
            }
            0x3c => {
                let args = pops!(4);
                emit(cfg, &mut instrs, SsaOp::CodeCopy, None, vec![args[1]]);
            }
            // opaque zero-arg reads
            0x38 | 0x3d | 0x59 | 0x5a => {
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Op(op_name(byte)), Some(v), vec![]);
                state.stack.push(Value::Var(v));
            }
            // opaque one-arg reads
            0x3b | 0x3f | 0x40 => {
                let args = pops!(1);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Op(op_name(byte)), Some(v), args);
                state.stack.push(Value::Var(v));
            }
            0x51 => {
                let args = pops!(1);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::MLoad, Some(v), args);
                state.stack.push(Value::Var(v));
            }
            0x52 => {
                let args = pops!(2);
                emit(cfg, &mut instrs, SsaOp::MStore, None, args);
            }
            0x53 => {
                let args = pops!(2);
                emit(cfg, &mut instrs, SsaOp::MStore8, None, args);
            }
            0x54 => {
                let args = pops!(1);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::SLoad, Some(v), args);
                state.stack.push(Value::Var(v));
            }
            0x55 => {
                let args = pops!(2);
                emit(cfg, &mut instrs, SsaOp::SStore, None, args);
            }
            0x56 => {
                let args = pops!(1);
                emit(cfg, &mut instrs, SsaOp::Jump, None, args);
            }
            0x57 => {
                let args = pops!(2); // [target, condition]
                emit(
                    cfg,
                    &mut instrs,
                    SsaOp::Goto,
                    None,
                    vec![args[1], args[0]],
                );
            }
            0xa0..=0xa4 => {
                let args = pops!(op.info.pops as usize);
                emit(cfg, &mut instrs, SsaOp::Log, None, args);
            }
            0xf0 => {
                let args = pops!(3);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Create, Some(v), vec![args[0]]);
                state.stack.push(Value::Var(v));
            }
            0xf5 => {
                let args = pops!(4);
                let v = cfg.fresh_var();
                emit(cfg, &mut instrs, SsaOp::Create, Some(v), vec![args[0]]);
                state.stack.push(Value::Var(v));
            }
            0xf1 | 0xf2 => {
                let args = pops!(7); // gas, to, value, in_off, in_len, out_off, out_len
                let v = cfg.fresh_var();
                emit(
                    cfg,
                    &mut instrs,
                    SsaOp::Call,
                    Some(v),
                    vec![args[1], args[2]],
                );
                state.stack.push(Value::Var(v));
            }
            0xf4 | 0xfa => {
                let args = pops!(6); // no value argument: transfers nothing
                let v = cfg.fresh_var();
                emit(
                    cfg,
                    &mut instrs,
                    SsaOp::Call,
                    Some(v),
                    vec![args[1], Value::Const(Word::ZERO)],
                );
                state.stack.push(Value::Var(v));
            }
            0x00 => emit(cfg, &mut instrs, SsaOp::Stop, None, vec![]),
            0xf3 => {
                let args = pops!(2);
                emit(cfg, &mut instrs, SsaOp::Stop, None, args);
            }
            0xfd => {
                let args = pops!(2);
                emit(cfg, &mut instrs, SsaOp::Throw, None, args);
            }
            0xfe => emit(cfg, &mut instrs, SsaOp::Throw, None, vec![]),
            0xff => {
                let args = pops!(1);
                emit(cfg, &mut instrs, SsaOp::SelfDestruct, None, args);
            }
            _ => {
                // unknown but decoded opcode (should not happen: the decoder
                // only yields table entries): treat as abort
                emit(cfg, &mut instrs, SsaOp::Throw, None, vec![]);
                truncated = true;
                break;
            }
        }
    }

    let end_offset = rb
        .ops
        .last()
        .map(|o| o.offset)
        .unwrap_or(rb.start);

    // Exit construction.
    let exit = if truncated {
        // deployed code may contain unreachable junk; cut the block here
        let label = cfg.fresh_label(end_offset);
        instrs.push(SsaInstruction {
            label,
            op: SsaOp::Throw,
            result: None,
            args: vec![],
        });
        cfg.flags.insert("stack-underflow".to_string());
        Exit::Halt
    } else {
        match &rb.exit {
            RawExit::Halt => Exit::Halt,
            RawExit::Fall(fall) => match fall {
                FallTo::Block(t) => Exit::Fall(BlockId(*t as u32)),
                FallTo::Invalid => {
                    let sink = sink_block(cfg, invalid_sink, SsaOp::Throw, end_offset);
                    Exit::Fall(sink)
                }
                FallTo::EndOfCode => {
                    let sink = sink_block(cfg, end_sink, SsaOp::Stop, end_offset);
                    Exit::Fall(sink)
                }
            },
            RawExit::Jump => match raw.resolution[b] {
                Some(JumpRes::Resolved(t)) => Exit::Jump(JumpTargets::Resolved(BlockId(t as u32))),
                Some(JumpRes::Invalid) => {
                    cfg.flags.insert("invalid-jump-target".to_string());
                    replace_last_with_throw(&mut instrs);
                    Exit::Halt
                }
                // Never simulated (reachable only through unresolved jumps):
                // keep the conservative edge set.
                Some(JumpRes::Dynamic) | None => Exit::Jump(JumpTargets::Dynamic(
                    raw.jumpdests.iter().map(|&d| BlockId(d as u32)).collect(),
                )),
            },
            RawExit::JumpI { fall } => {
                let fall_block = match fall {
                    FallTo::Block(t) => BlockId(*t as u32),
                    FallTo::Invalid => sink_block(cfg, invalid_sink, SsaOp::Throw, end_offset),
                    FallTo::EndOfCode => sink_block(cfg, end_sink, SsaOp::Stop, end_offset),
                };
                let taken = match raw.resolution[b] {
                    Some(JumpRes::Resolved(t)) => JumpTargets::Resolved(BlockId(t as u32)),
                    Some(JumpRes::Dynamic) | None => JumpTargets::Dynamic(
                        raw.jumpdests.iter().map(|&d| BlockId(d as u32)).collect(),
                    ),
                    Some(JumpRes::Invalid) => {
                        cfg.flags.insert("invalid-jump-target".to_string());
                        JumpTargets::Dynamic(Vec::new())
                    }
                };
                Exit::Branch {
                    taken,
                    fall: fall_block,
                }
            }
        }
    };

    cfg.blocks[b].instrs = instrs;
    cfg.blocks[b].exit = exit;
}

fn replace_last_with_throw(instrs: &mut Vec<SsaInstruction>) {
    if let Some(last) = instrs.last_mut() {
        if matches!(last.op, SsaOp::Jump) {
            last.op = SsaOp::Throw;
            last.args.clear();
            return;
        }
    }
}

fn ensure_depth(state: &mut BlockState, n: usize) -> Result<(), ()> {
    if state.stack.len() >= n {
        return Ok(());
    }
    if state.bottomless {
        while state.stack.len() < n {
            state.stack.insert(0, Value::Top);
        }
        Ok(())
    } else {
        state.underflow = true;
        Err(())
    }
}

fn sink_block(cfg: &mut Cfg, slot: &mut Option<BlockId>, op: SsaOp, offset: usize) -> BlockId {
    if let Some(id) = slot {
        return *id;
    }
    let id = BlockId(cfg.blocks.len() as u32);
    let label = cfg.fresh_label(offset);
    cfg.blocks.push(Block {
        id,
        offset,
        head_jumpdest: false,
        instrs: vec![SsaInstruction {
            label,
            op,
            result: None,
            args: vec![],
        }],
        exit: Exit::Halt,
    });
    cfg.block_params.push(Vec::new());
    *slot = Some(id);
    id
}

fn op_name(byte: u8) -> &'static str {
    match byte {
        0x01 => "add",
        0x02 => "mul",
        0x03 => "sub",
        0x04 => "div",
        0x05 => "sdiv",
        0x06 => "mod",
        0x07 => "smod",
        0x08 => "addmod",
        0x09 => "mulmod",
        0x0a => "exp",
        0x0b => "signextend",
        0x10 => "lt",
        0x11 => "gt",
        0x12 => "slt",
        0x13 => "sgt",
        0x14 => "cmpeq",  // "eq" names the semantic equality relation
        0x15 => "iszero",
        0x16 => "and",
        0x17 => "or",
        0x18 => "xor",
        0x19 => "not",
        0x1a => "byte",
        0x1b => "shl",
        0x1c => "shr",
        0x1d => "sar",
        0x38 => "codesize",
        0x3b => "extcodesize",
        0x3d => "returndatasize",
        0x3f => "extcodehash",
        0x40 => "blockhash",
        0x59 => "msize",
        0x5a => "gas",
        _ => unreachable!("no op name for byte {byte:#x}"),
    }
}

fn env_tag(byte: u8) -> &'static str {
    match byte {
        0x30 => "address",
        0x32 => "origin",
        0x33 => "caller",
        0x34 => "callvalue",
        0x3a => "gasprice",
        0x41 => "coinbase",
        0x42 => "timestamp",
        0x43 => "number",
        0x44 => "difficulty",
        0x45 => "gaslimit",
        0x46 => "chainid",
        0x48 => "basefee",
        _ => unreachable!("no env tag for byte {byte:#x}"),
    }
}
