//! CFG-level optimizations: constant propagation (partial evaluation),
//! SSA-level jump re-resolution, dead instruction elimination, and the
//! unreachable-block sweep.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use tiny_keccak::{Hasher, Keccak};

use crate::ir::{BlockId, Cfg, Exit, JumpTargets, SsaOp, Value, VarId};
use crate::word::{self, Word};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Lattice {
    Bot,
    Const(Word),
    Many,
}

impl Lattice {
    fn join(a: Lattice, b: Lattice) -> Lattice {
        match (a, b) {
            (Lattice::Bot, x) | (x, Lattice::Bot) => x,
            (Lattice::Const(x), Lattice::Const(y)) if x == y => a,
            _ => Lattice::Many,
        }
    }
}

/// Propagate constants: any variable provably equal to one constant on all
/// paths is replaced by that constant in every use; arithmetic over constant
/// arguments folds, and hashes over fully constant memory regions fold to
/// the concrete digest (which is what resolves mapping-slot storage
/// offsets). Returns true if any use site changed.
pub fn propagate_constants(cfg: &mut Cfg) -> bool {
    let nvars = cfg.next_var as usize;
    let mut val = vec![Lattice::Bot; nvars];

    let value_of = |v: &Value, val: &[Lattice]| -> Lattice {
        match v {
            Value::Const(c) => Lattice::Const(*c),
            Value::Var(x) => val[x.0 as usize],
            Value::Top => Lattice::Many,
        }
    };

    loop {
        let mut changed = false;
        let update = |r: VarId, new: Lattice, val: &mut Vec<Lattice>, changed: &mut bool| {
            let joined = Lattice::join(val[r.0 as usize], new);
            if joined != val[r.0 as usize] {
                val[r.0 as usize] = joined;
                *changed = true;
            }
        };
        for block in &cfg.blocks {
            // straight-line memory words with known constant content,
            // tracked for hash folding
            let mut mem: BTreeMap<Word, Word> = BTreeMap::new();
            for instr in &block.instrs {
                match instr.op {
                    SsaOp::MStore => {
                        match (
                            value_of(&instr.args[0], &val),
                            value_of(&instr.args[1], &val),
                        ) {
                            (Lattice::Const(o), Lattice::Const(x)) => {
                                // unaligned stores clobber neighbours
                                mem.retain(|&k, _| {
                                    k.checked_add(Word::from(32u32)).is_some_and(|e| e <= o)
                                        || o.checked_add(Word::from(32u32))
                                            .is_some_and(|e| e <= k)
                                });
                                mem.insert(o, x);
                            }
                            (Lattice::Const(o), _) => {
                                mem.retain(|&k, _| {
                                    k.checked_add(Word::from(32u32)).is_some_and(|e| e <= o)
                                        || o.checked_add(Word::from(32u32))
                                            .is_some_and(|e| e <= k)
                                });
                            }
                            _ => mem.clear(),
                        }
                    }
                    SsaOp::MStore8 | SsaOp::DataCopy | SsaOp::CodeCopy | SsaOp::Call
                    | SsaOp::Create => mem.clear(),
                    SsaOp::Sha3 => {
                        let r = instr.result.unwrap();
                        let folded = match (
                            value_of(&instr.args[0], &val),
                            value_of(&instr.args[1], &val),
                        ) {
                            (Lattice::Const(o), Lattice::Const(n)) => fold_sha3(&mem, o, n),
                            _ => None,
                        };
                        update(r, folded.map_or(Lattice::Many, Lattice::Const), &mut val, &mut changed);
                    }
                    _ => {}
                }
                if instr.op == SsaOp::Sha3 {
                    continue; // handled above
                }
                let Some(r) = instr.result else { continue };
                let new = match instr.op {
                    SsaOp::Assign => value_of(&instr.args[0], &val),
                    SsaOp::Op(name) => {
                        let mut args = Vec::with_capacity(instr.args.len());
                        let mut state = Lattice::Const(Word::ZERO);
                        for a in &instr.args {
                            match value_of(a, &val) {
                                Lattice::Const(c) => args.push(c),
                                Lattice::Bot => {
                                    state = Lattice::Bot;
                                    break;
                                }
                                Lattice::Many => {
                                    state = Lattice::Many;
                                    break;
                                }
                            }
                        }
                        match state {
                            Lattice::Const(_) => fold_named(name, &args)
                                .map_or(Lattice::Many, Lattice::Const),
                            other => other,
                        }
                    }
                    _ => Lattice::Many,
                };
                update(r, new, &mut val, &mut changed);
            }
        }
        if !changed {
            break;
        }
    }

    // substitution pass
    let mut replaced = false;
    for block in &mut cfg.blocks {
        for instr in &mut block.instrs {
            for arg in &mut instr.args {
                if let Value::Var(v) = arg {
                    if let Lattice::Const(c) = val[v.0 as usize] {
                        *arg = Value::Const(c);
                        replaced = true;
                    }
                }
            }
        }
    }
    replaced
}

fn fold_sha3(mem: &BTreeMap<Word, Word>, offset: Word, len: Word) -> Option<Word> {
    if len > Word::from(512u32) || len % Word::from(32u32) != Word::ZERO {
        return None;
    }
    let words = (len / Word::from(32u32)).as_usize();
    let mut bytes = Vec::with_capacity(words * 32);
    for i in 0..words {
        let o = offset.checked_add(Word::from((i * 32) as u64))?;
        bytes.extend_from_slice(&mem.get(&o)?.to_be_bytes());
    }
    let mut hasher = Keccak::v256();
    hasher.update(&bytes);
    let mut out = [0u8; 32];
    hasher.finalize(&mut out);
    Some(Word::from_be_bytes(out))
}

fn fold_named(name: &str, args: &[Word]) -> Option<Word> {
    let bin = |f: fn(Word, Word) -> Word| -> Option<Word> {
        (args.len() == 2).then(|| f(args[0], args[1]))
    };
    match name {
        "add" => bin(word::add),
        "mul" => bin(word::mul),
        "sub" => bin(word::sub),
        "div" => bin(word::div),
        "sdiv" => bin(word::sdiv),
        "mod" => bin(word::rem),
        "smod" => bin(word::srem),
        "exp" => bin(word::exp),
        "signextend" => bin(word::signextend),
        "lt" => bin(word::lt),
        "gt" => bin(word::gt),
        "slt" => bin(word::slt),
        "sgt" => bin(word::sgt),
        "cmpeq" => bin(word::eq),
        "and" => bin(|a, b| a & b),
        "or" => bin(|a, b| a | b),
        "xor" => bin(|a, b| a ^ b),
        "byte" => bin(word::byte),
        "shl" => bin(word::shl),
        "shr" => bin(word::shr),
        "sar" => bin(word::sar),
        "iszero" => (args.len() == 1).then(|| word::iszero(args[0])),
        "not" => (args.len() == 1).then(|| !args[0]),
        "addmod" => (args.len() == 3).then(|| word::addmod(args[0], args[1], args[2])),
        "mulmod" => (args.len() == 3).then(|| word::mulmod(args[0], args[1], args[2])),
        _ => None,
    }
}

/// Rewrite dynamic jump edges whose target value has become a constant.
/// Returns true when any edge changed.
pub fn resolve_ssa_jumps(cfg: &mut Cfg) -> bool {
    let by_offset: HashMap<usize, BlockId> = cfg
        .blocks
        .iter()
        .filter(|b| b.head_jumpdest)
        .map(|b| (b.offset, b.id))
        .collect();
    let mut changed = false;
    let mut invalid = false;
    for block in &mut cfg.blocks {
        let resolve = |v: &Value| -> Option<Result<BlockId, ()>> {
            match v {
                Value::Const(c) => {
                    if *c > Word::from(u32::MAX) {
                        return Some(Err(()));
                    }
                    Some(by_offset.get(&c.as_usize()).copied().ok_or(()))
                }
                _ => None,
            }
        };
        match block.exit.clone() {
            Exit::Jump(JumpTargets::Dynamic(_)) => {
                let target = block
                    .instrs
                    .last()
                    .filter(|i| i.op == SsaOp::Jump)
                    .and_then(|i| i.args.first().cloned());
                match target.as_ref().and_then(resolve) {
                    Some(Ok(t)) => {
                        block.exit = Exit::Jump(JumpTargets::Resolved(t));
                        changed = true;
                    }
                    Some(Err(())) => {
                        if let Some(last) = block.instrs.last_mut() {
                            last.op = SsaOp::Throw;
                            last.args.clear();
                        }
                        block.exit = Exit::Halt;
                        changed = true;
                        invalid = true;
                    }
                    None => {}
                }
            }
            Exit::Branch {
                taken: JumpTargets::Dynamic(_),
                fall,
            } => {
                let target = block
                    .instrs
                    .last()
                    .filter(|i| i.op == SsaOp::Goto)
                    .and_then(|i| i.args.get(1).cloned());
                match target.as_ref().and_then(resolve) {
                    Some(Ok(t)) => {
                        block.exit = Exit::Branch {
                            taken: JumpTargets::Resolved(t),
                            fall,
                        };
                        changed = true;
                    }
                    Some(Err(())) => {
                        block.exit = Exit::Branch {
                            taken: JumpTargets::Dynamic(Vec::new()),
                            fall,
                        };
                        changed = true;
                        invalid = true;
                    }
                    None => {}
                }
            }
            _ => {}
        }
    }
    if invalid {
        cfg.flags.insert("invalid-jump-target".to_string());
    }
    changed
}

/// Remove pure instructions whose results are never read. Side-effecting
/// instructions (stores, calls, logs, control transfers, halts) are kept
/// regardless, so the observable behavior multiset is preserved.
pub fn eliminate_unused(cfg: &mut Cfg) -> bool {
    // var -> defining instruction arg lists (merge vars have several defs)
    let mut def_args: HashMap<VarId, Vec<Vec<Value>>> = HashMap::new();
    let mut live: BTreeSet<VarId> = BTreeSet::new();
    let mut queue: Vec<VarId> = Vec::new();
    for block in &cfg.blocks {
        for instr in &block.instrs {
            if let Some(r) = instr.result {
                def_args.entry(r).or_default().push(instr.args.clone());
            }
            if instr.op.has_side_effect() {
                for a in &instr.args {
                    if let Value::Var(v) = a {
                        if live.insert(*v) {
                            queue.push(*v);
                        }
                    }
                }
            }
        }
    }
    while let Some(v) = queue.pop() {
        for args in def_args.get(&v).into_iter().flatten() {
            for a in args {
                if let Value::Var(u) = a {
                    if live.insert(*u) {
                        queue.push(*u);
                    }
                }
            }
        }
    }
    let mut removed = false;
    for block in &mut cfg.blocks {
        let before = block.instrs.len();
        block
            .instrs
            .retain(|i| i.op.has_side_effect() || i.result.is_some_and(|r| live.contains(&r)));
        removed |= block.instrs.len() != before;
    }
    removed
}

/// Drop blocks unreachable from the entry and compact ids. Returns the
/// old-to-new id mapping for callers holding block references.
pub fn sweep_unreachable(cfg: &mut Cfg) -> HashMap<BlockId, BlockId> {
    let reachable = cfg.reachable();
    let mut remap: HashMap<BlockId, BlockId> = HashMap::new();
    let mut new_blocks = Vec::with_capacity(reachable.len());
    let mut new_params = Vec::with_capacity(reachable.len());
    for (old_ix, block) in cfg.blocks.iter().enumerate() {
        if reachable.contains(&block.id) {
            let new_id = BlockId(new_blocks.len() as u32);
            remap.insert(block.id, new_id);
            let mut b = block.clone();
            b.id = new_id;
            new_blocks.push(b);
            new_params.push(cfg.block_params.get(old_ix).cloned().unwrap_or_default());
        }
    }
    let fix = |t: &mut JumpTargets, remap: &HashMap<BlockId, BlockId>| match t {
        JumpTargets::Resolved(b) => {
            *b = remap[b];
        }
        JumpTargets::Dynamic(list) => {
            list.retain(|b| remap.contains_key(b));
            for b in list {
                *b = remap[b];
            }
        }
    };
    for block in &mut new_blocks {
        match &mut block.exit {
            Exit::Fall(b) => *b = remap[b],
            Exit::Jump(t) => fix(t, &remap),
            Exit::Branch { taken, fall } => {
                fix(taken, &remap);
                *fall = remap[fall];
            }
            Exit::Halt => {}
        }
    }
    cfg.blocks = new_blocks;
    cfg.block_params = new_params;
    cfg.entry = remap[&cfg.entry];
    remap
}
