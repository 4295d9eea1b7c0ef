//! Stackless SSA intermediate representation over a control-flow graph.
//!
//! Every value-producing instruction defines a fresh variable; stack
//! shuffling from the source bytecode is gone by construction. SSA is relaxed
//! at control-flow joins: a merge variable may have one defining assign per
//! incoming edge (inserted at the end of each predecessor).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::word::Word;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Label(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An operand: a variable, a 256-bit constant, or the unknown marker.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Value {
    Var(VarId),
    Const(Word),
    Top,
}

impl Value {
    pub fn as_var(self) -> Option<VarId> {
        match self {
            Value::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_const(self) -> Option<Word> {
        match self {
            Value::Const(c) => Some(c),
            _ => None,
        }
    }
}

/// Instruction kinds of the stack-free instruction set.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SsaOp {
    /// `result = args[0]`; also used for merge copies at joins.
    Assign,
    /// Pure named operation (arithmetic, comparison, and the few environment
    /// queries that take arguments' worth of nothing but produce opaque
    /// values). `result = name(args...)`.
    Op(&'static str),
    /// Zero-argument environment read whose value IS the named tag
    /// (caller, callvalue, timestamp, ...). Encoded as an assign from the
    /// tag in the fact representation.
    EnvRead(&'static str),
    /// Hash of the memory region `[args[0], args[0] + args[1])`.
    Sha3,
    /// Load a word of transaction input data: `result = data[args[0]..]`.
    DataLoad,
    /// Transaction input data length.
    DataSize,
    /// Copy transaction data into memory: args `[mem_off, data_off, len]`.
    DataCopy,
    /// Any other copy into memory (code, return data): args[0] = mem offset.
    CodeCopy,
    /// Account balance: args `[address]`.
    Balance,
    MLoad,
    MStore,
    /// Single-byte store; shares the mstore fact encoding.
    MStore8,
    SLoad,
    SStore,
    /// External call: args `[to, amount]`, result = success flag. Plain
    /// calls carry their real amount; delegate/static variants transfer
    /// nothing and get a constant zero.
    Call,
    /// Contract creation: args `[amount]`, result = new address.
    Create,
    Log,
    /// Conditional jump: args `[condition]`, successors in the block exit.
    Goto,
    /// Unconditional jump: args `[target_value]` (kept for resolution).
    Jump,
    /// Normal halt (STOP or RETURN).
    Stop,
    /// Aborting halt (REVERT, INVALID).
    Throw,
    /// args `[beneficiary]`.
    SelfDestruct,
}

impl SsaOp {
    /// Instructions that must never be removed: they write state, transfer
    /// control, or end execution.
    pub fn has_side_effect(self) -> bool {
        matches!(
            self,
            SsaOp::MStore
                | SsaOp::MStore8
                | SsaOp::SStore
                | SsaOp::DataCopy
                | SsaOp::CodeCopy
                | SsaOp::Call
                | SsaOp::Create
                | SsaOp::Log
                | SsaOp::Goto
                | SsaOp::Jump
                | SsaOp::Stop
                | SsaOp::Throw
                | SsaOp::SelfDestruct
        )
    }

    pub fn is_terminator(self) -> bool {
        matches!(
            self,
            SsaOp::Goto | SsaOp::Jump | SsaOp::Stop | SsaOp::Throw | SsaOp::SelfDestruct
        )
    }

    /// Predicate name used for this instruction's base fact.
    pub fn fact_name(self) -> &'static str {
        match self {
            SsaOp::Assign | SsaOp::EnvRead(_) => "assign",
            SsaOp::Op(name) => name,
            SsaOp::Sha3 => "sha3",
            SsaOp::DataLoad => "dataload",
            SsaOp::DataSize => "datasize",
            SsaOp::DataCopy => "datacopy",
            SsaOp::CodeCopy => "codecopy",
            SsaOp::Balance => "balance",
            SsaOp::MLoad => "mload",
            SsaOp::MStore | SsaOp::MStore8 => "mstore",
            SsaOp::SLoad => "sload",
            SsaOp::SStore => "sstore",
            SsaOp::Call => "call",
            SsaOp::Create => "create",
            SsaOp::Log => "log",
            SsaOp::Goto => "goto",
            SsaOp::Jump => "jump",
            SsaOp::Stop => "stop",
            SsaOp::Throw => "throw",
            SsaOp::SelfDestruct => "selfdestruct",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SsaInstruction {
    pub label: Label,
    pub op: SsaOp,
    pub result: Option<VarId>,
    pub args: Vec<Value>,
}

/// Where control can go when this block ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exit {
    /// No terminator; falls into the next block.
    Fall(BlockId),
    /// Unconditional jump.
    Jump(JumpTargets),
    /// Conditional jump: taken edge plus fall-through.
    Branch { taken: JumpTargets, fall: BlockId },
    /// stop / throw / selfdestruct: no successors.
    Halt,
}

/// Targets of a jump edge. `Dynamic` means the target could not be resolved
/// statically; the listed blocks over-approximate it (every jump
/// destination), keeping may-analyses sound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JumpTargets {
    Resolved(BlockId),
    Dynamic(Vec<BlockId>),
}

impl JumpTargets {
    pub fn blocks(&self) -> &[BlockId] {
        match self {
            JumpTargets::Resolved(b) => std::slice::from_ref(b),
            JumpTargets::Dynamic(bs) => bs,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Block {
    pub id: BlockId,
    /// Bytecode offset of the block's first opcode.
    pub offset: usize,
    /// Whether the block starts at a jump destination (legal jump target).
    pub head_jumpdest: bool,
    pub instrs: Vec<SsaInstruction>,
    pub exit: Exit,
}

/// Per-label bookkeeping. Labels stay unique across inlining; the offset maps
/// each one back to the originating bytecode position.
#[derive(Clone, Copy, Debug)]
pub struct LabelInfo {
    pub offset: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Cfg {
    pub blocks: Vec<Block>,
    pub entry: BlockId,
    pub labels: Vec<LabelInfo>,
    pub next_var: u32,
    /// Merge variables defined at each block's entry (bottom of stack
    /// first). Written by the SSA pass, consumed by inlining.
    pub block_params: Vec<Vec<VarId>>,
    /// (branch label, join label): the two paths leaving the branch first
    /// re-converge at the join.
    pub join_points: Vec<(Label, Label)>,
    /// Analysis imprecision markers (imprecise-jumps, stack-underflow, ...).
    pub flags: BTreeSet<String>,
}

impl Cfg {
    pub fn fresh_label(&mut self, offset: usize) -> Label {
        let l = Label(self.labels.len() as u32);
        self.labels.push(LabelInfo { offset });
        l
    }

    pub fn fresh_var(&mut self) -> VarId {
        let v = VarId(self.next_var);
        self.next_var += 1;
        v
    }

    pub fn label_offset(&self, label: Label) -> usize {
        self.labels[label.0 as usize].offset
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.index()]
    }

    pub fn successors(&self, id: BlockId) -> Vec<BlockId> {
        match &self.block(id).exit {
            Exit::Fall(b) => vec![*b],
            Exit::Jump(t) => t.blocks().to_vec(),
            Exit::Branch { taken, fall } => {
                let mut out = taken.blocks().to_vec();
                if !out.contains(fall) {
                    out.push(*fall);
                }
                out
            }
            Exit::Halt => Vec::new(),
        }
    }

    pub fn instructions(&self) -> impl Iterator<Item = &SsaInstruction> {
        self.blocks.iter().flat_map(|b| b.instrs.iter())
    }

    /// First instruction label at or after the head of `block`, following
    /// fall-through and resolved-jump chains through empty blocks.
    pub fn first_label_from(&self, mut block: BlockId) -> Option<Label> {
        let mut seen = BTreeSet::new();
        loop {
            if !seen.insert(block) {
                return None;
            }
            let b = self.block(block);
            if let Some(instr) = b.instrs.first() {
                return Some(instr.label);
            }
            match &b.exit {
                Exit::Fall(next) => block = *next,
                Exit::Jump(JumpTargets::Resolved(next)) => block = *next,
                _ => return None,
            }
        }
    }

    /// Blocks reachable from the entry.
    pub fn reachable(&self) -> BTreeSet<BlockId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.entry];
        while let Some(b) = stack.pop() {
            if !seen.insert(b) {
                continue;
            }
            stack.extend(self.successors(b));
        }
        seen
    }

    /// Structured text dump, one instruction per line, for fixture diffing.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            let _ = writeln!(out, "block b{} @{}:", block.id.0, block.offset);
            for i in &block.instrs {
                let _ = write!(out, "  l{}@{}: ", i.label.0, self.label_offset(i.label));
                if let Some(r) = i.result {
                    let _ = write!(out, "v{} = ", r.0);
                }
                let _ = write!(out, "{}", i.op.fact_name());
                if let SsaOp::EnvRead(tag) = i.op {
                    let _ = write!(out, " {}", tag);
                }
                for a in &i.args {
                    match a {
                        Value::Var(v) => {
                            let _ = write!(out, " v{}", v.0);
                        }
                        Value::Const(c) => {
                            let _ = write!(out, " 0x{:x}", c);
                        }
                        Value::Top => {
                            let _ = write!(out, " top");
                        }
                    }
                }
                out.push('\n');
            }
            let _ = writeln!(out, "  exit {:?}", block.exit);
        }
        out
    }
}

/// ABI dispatch table: 4-byte selectors to method entry blocks.
#[derive(Clone, Debug, Default)]
pub struct MethodTable {
    pub methods: std::collections::BTreeMap<u32, BlockId>,
    pub fallback: Option<BlockId>,
}
