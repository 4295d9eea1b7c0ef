//! Base-fact extraction from the SSA CFG.
//!
//! Every SSA instruction becomes one fact `instr(L, Y, X1, ..., Xn)` with
//! constants inlined where known and the unknown marker `top` standing for
//! values without even a symbolic identity. Consecutive instructions (within
//! and across blocks) yield `follow` facts, decompiler join points `joinpt`
//! facts, and every constant an `isConst` fact. A handful of auxiliary
//! relations (block structure, variable universe, operand normalization)
//! carry what the rule set cannot see from the instruction facts alone.

use std::collections::{BTreeMap, BTreeSet};

use datalog::{Const, FactSet};

use crate::ir::{Cfg, Exit, JumpTargets, Label, SsaInstruction, SsaOp, Value, VarId};
use crate::word::Word;

/// Base facts plus the metadata needed to interpret them.
#[derive(Clone, Debug, Default)]
pub struct BaseFactSet {
    pub facts: FactSet,
    /// Label symbol -> originating bytecode offset.
    pub label_offsets: BTreeMap<String, usize>,
    /// Label symbol -> instruction fact predicate (opcode name).
    pub label_opcodes: BTreeMap<String, &'static str>,
    pub instruction_count: usize,
}

pub fn label_sym(l: Label) -> Const {
    Const::sym(format!("l{}", l.0))
}

pub fn var_sym(v: VarId) -> Const {
    Const::sym(format!("v{}", v.0))
}

fn block_sym(ix: usize) -> Const {
    Const::sym(format!("b{}", ix))
}

pub fn value_const(v: Value) -> Const {
    match v {
        Value::Var(x) => var_sym(x),
        Value::Const(c) => Const::Num(c),
        Value::Top => Const::Top,
    }
}

pub fn extract_base_facts(cfg: &Cfg) -> BaseFactSet {
    let mut out = BaseFactSet::default();

    // First pass: the constant and variable universes.
    let mut consts: BTreeSet<Word> = BTreeSet::new();
    let mut vars: BTreeSet<VarId> = BTreeSet::new();
    let mut def_counts: BTreeMap<VarId, usize> = BTreeMap::new();
    for instr in cfg.instructions() {
        if let Some(r) = instr.result {
            vars.insert(r);
            *def_counts.entry(r).or_insert(0) += 1;
        }
        for a in &instr.args {
            match a {
                Value::Const(c) => {
                    consts.insert(*c);
                }
                Value::Var(x) => {
                    vars.insert(*x);
                }
                Value::Top => {}
            }
        }
    }

    // Second pass: instruction facts and operand helpers.
    let mut envtags: BTreeSet<&'static str> = BTreeSet::new();
    for block in &cfg.blocks {
        for instr in &block.instrs {
            emit_instruction(cfg, block.id.index(), instr, &mut out, &mut envtags, &consts);
        }
    }

    // follow: within blocks and across every CFG edge
    for block in &cfg.blocks {
        for w in block.instrs.windows(2) {
            out.facts.insert(
                "follow",
                vec![label_sym(w[0].label), label_sym(w[1].label)],
            );
        }
        if let Some(last) = block.instrs.last() {
            for succ in cfg.successors(block.id) {
                if let Some(first) = cfg.first_label_from(succ) {
                    out.facts
                        .insert("follow", vec![label_sym(last.label), label_sym(first)]);
                }
            }
        }
    }

    for (goto, join) in &cfg.join_points {
        out.facts
            .insert("joinpt", vec![label_sym(*goto), label_sym(*join)]);
    }

    // block structure for the dominance encoding
    let n = cfg.blocks.len();
    for (i, block) in cfg.blocks.iter().enumerate() {
        out.facts.insert("blocknode", vec![block_sym(i)]);
        for instr in &block.instrs {
            out.facts
                .insert("blockof", vec![label_sym(instr.label), block_sym(i)]);
        }
        for succ in cfg.successors(block.id) {
            out.facts
                .insert("blockedge", vec![block_sym(i), block_sym(succ.index())]);
        }
        for (a_ix, a) in block.instrs.iter().enumerate() {
            for b in &block.instrs[a_ix + 1..] {
                out.facts
                    .insert("before", vec![label_sym(a.label), label_sym(b.label)]);
            }
        }
    }
    if n > 0 {
        out.facts
            .insert("entryblock", vec![block_sym(cfg.entry.index())]);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.facts
                    .insert("diffblock", vec![block_sym(i), block_sym(j)]);
            }
        }
    }

    for v in &vars {
        out.facts.insert("var", vec![var_sym(*v)]);
    }
    for (v, count) in &def_counts {
        if *count > 1 {
            out.facts.insert("multidef", vec![var_sym(*v)]);
        }
    }
    for t in &envtags {
        out.facts.insert("envtag", vec![Const::sym(*t)]);
    }
    for c in &consts {
        out.facts.insert("isConst", vec![Const::Num(*c)]);
    }
    out
}

fn emit_instruction(
    cfg: &Cfg,
    block_ix: usize,
    instr: &SsaInstruction,
    out: &mut BaseFactSet,
    envtags: &mut BTreeSet<&'static str>,
    consts: &BTreeSet<Word>,
) {
    let l = label_sym(instr.label);
    let lname = match &l {
        Const::Sym(s) => s.clone(),
        _ => unreachable!(),
    };
    out.label_offsets
        .insert(lname.clone(), cfg.label_offset(instr.label));
    out.label_opcodes.insert(lname, instr.op.fact_name());
    out.instruction_count += 1;

    let result = instr.result.map(var_sym);
    let args: Vec<Const> = instr.args.iter().map(|v| value_const(*v)).collect();

    let mut row = vec![l.clone()];
    match instr.op {
        SsaOp::Assign => {
            row.push(result.unwrap());
            row.push(args[0].clone());
        }
        SsaOp::EnvRead(tag) => {
            envtags.insert(tag);
            row.push(result.unwrap());
            row.push(Const::sym(tag));
        }
        SsaOp::Op(_) => {
            let y = result.unwrap();
            row.push(y.clone());
            row.extend(args.iter().cloned());
            let injective = matches!(
                instr.op,
                SsaOp::Op("add") | SsaOp::Op("sub") | SsaOp::Op("xor")
            ) && instr.args.len() == 2;
            for (i, a) in instr.args.iter().enumerate() {
                if let Value::Var(x) = a {
                    out.facts
                        .insert("oparg", vec![l.clone(), y.clone(), var_sym(*x)]);
                    if injective && matches!(instr.args[1 - i], Value::Const(_)) {
                        out.facts
                            .insert("detarg", vec![l.clone(), y.clone(), var_sym(*x)]);
                    }
                }
            }
        }
        SsaOp::Sha3 => {
            let y = result.unwrap();
            row.push(y);
            row.extend(args.iter().cloned());
            if let (Value::Const(o), Value::Const(len)) = (instr.args[0], instr.args[1]) {
                if len <= Word::from(4096u32) {
                    // every known constant that falls inside the hashed region
                    for c in consts {
                        if *c >= o && o.checked_add(len).is_some_and(|end| *c < end) {
                            out.facts
                                .insert("hashspan", vec![l.clone(), Const::Num(*c)]);
                        }
                    }
                }
            }
        }
        SsaOp::DataLoad => {
            row.push(result.unwrap());
            row.push(args[0].clone());
            if let Value::Const(o) = instr.args[0] {
                if o >= Word::from(4u32) {
                    out.facts
                        .insert("argload", vec![l.clone(), var_sym(instr.result.unwrap())]);
                }
            }
        }
        SsaOp::DataSize => row.push(result.unwrap()),
        SsaOp::DataCopy => row.extend(args.iter().cloned()),
        SsaOp::CodeCopy => row.push(args[0].clone()),
        SsaOp::Balance | SsaOp::MLoad | SsaOp::SLoad => {
            row.push(result.unwrap());
            row.push(args[0].clone());
        }
        SsaOp::MStore | SsaOp::MStore8 | SsaOp::SStore => {
            row.push(args[0].clone());
            row.push(args[1].clone());
        }
        SsaOp::Call => {
            row.push(result.unwrap());
            row.push(args[0].clone());
            row.push(args[1].clone());
        }
        SsaOp::Create => {
            row.push(result.unwrap());
            row.push(args[0].clone());
        }
        SsaOp::Goto => {
            row.push(args[0].clone());
            let target = match &cfg.blocks[block_ix].exit {
                Exit::Branch {
                    taken: JumpTargets::Resolved(t),
                    ..
                } => cfg
                    .first_label_from(*t)
                    .map(label_sym)
                    .unwrap_or(Const::Top),
                _ => Const::Top,
            };
            row.push(target);
        }
        SsaOp::Log | SsaOp::Jump | SsaOp::Stop | SsaOp::Throw => {}
        SsaOp::SelfDestruct => row.push(args[0].clone()),
    }
    out.facts.insert(instr.op.fact_name(), row);
}
