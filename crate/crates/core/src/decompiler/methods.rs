//! ABI method discovery: recognize the dispatcher idiom (the first four
//! bytes of transaction data compared against selector constants guarding
//! jumps) and label each entry block with its selector.

use std::collections::{BTreeSet, HashMap};

use crate::ir::{BlockId, Cfg, Exit, JumpTargets, SsaInstruction, SsaOp, Value, VarId};
use crate::word::Word;

pub fn identify_methods(cfg: &mut Cfg) -> crate::ir::MethodTable {
    let defs: HashMap<VarId, &SsaInstruction> = cfg
        .blocks
        .iter()
        .flat_map(|b| b.instrs.iter())
        .filter_map(|i| i.result.map(|r| (r, i)))
        .collect();

    let const_of = |v: Value| -> Option<Word> {
        match v {
            Value::Const(c) => Some(c),
            Value::Var(x) => {
                let mut cur = x;
                for _ in 0..8 {
                    let def = defs.get(&cur)?;
                    if def.op != SsaOp::Assign {
                        return None;
                    }
                    match def.args[0] {
                        Value::Const(c) => return Some(c),
                        Value::Var(next) => cur = next,
                        Value::Top => return None,
                    }
                }
                None
            }
            Value::Top => None,
        }
    };

    // v = calldataload(0)?
    let loads_word0 = |v: VarId| -> bool {
        defs.get(&v).is_some_and(|d| {
            d.op == SsaOp::DataLoad && const_of(d.args[0]) == Some(Word::ZERO)
        })
    };
    // selector extraction: shr(224, w0), div(w0, 2^224), or a mask of either
    fn selector_shaped(
        v: VarId,
        defs: &HashMap<VarId, &SsaInstruction>,
        const_of: &dyn Fn(Value) -> Option<Word>,
        loads_word0: &dyn Fn(VarId) -> bool,
        depth: u8,
    ) -> bool {
        if depth > 4 {
            return false;
        }
        let Some(def) = defs.get(&v) else { return false };
        let recurse = |x: Value| {
            x.as_var().is_some_and(|u| {
                selector_shaped(u, defs, const_of, loads_word0, depth + 1)
            })
        };
        match def.op {
            SsaOp::Op("shr") => {
                const_of(def.args[0]) == Some(Word::from(224u32))
                    && def.args[1].as_var().is_some_and(loads_word0)
            }
            SsaOp::Op("div") => {
                def.args[0].as_var().is_some_and(loads_word0)
                    && const_of(def.args[1]) == Some(Word::ONE << 224u32)
            }
            SsaOp::Op("and") => {
                let mask = Word::from(0xffffffffu32);
                (const_of(def.args[0]) == Some(mask) && recurse(def.args[1]))
                    || (const_of(def.args[1]) == Some(mask) && recurse(def.args[0]))
            }
            SsaOp::Assign => recurse(def.args[0]),
            _ => false,
        }
    }

    let mut table = crate::ir::MethodTable::default();
    let mut dispatch_blocks: BTreeSet<BlockId> = BTreeSet::new();
    // (dispatcher block, continue-edge successor)
    let mut continues: HashMap<BlockId, BlockId> = HashMap::new();
    let mut duplicate = false;

    for block in &cfg.blocks {
        let Exit::Branch { taken, fall } = &block.exit else { continue };
        let JumpTargets::Resolved(taken) = taken else { continue };
        let Some(goto) = block.instrs.last().filter(|i| i.op == SsaOp::Goto) else {
            continue;
        };
        let Some(cond) = goto.args[0].as_var() else { continue };
        let Some(cond_def) = defs.get(&cond) else { continue };

        // eq(sel, S) / eq(S, sel), optionally wrapped in iszero
        let mut negated = false;
        let mut eq_def = *cond_def;
        if eq_def.op == SsaOp::Op("iszero") {
            let Some(inner) = eq_def.args[0].as_var().and_then(|u| defs.get(&u)) else {
                continue;
            };
            negated = true;
            eq_def = inner;
        }
        if eq_def.op != SsaOp::Op("cmpeq") {
            continue;
        }
        let sides = [(eq_def.args[0], eq_def.args[1]), (eq_def.args[1], eq_def.args[0])];
        let Some(selector) = sides.iter().find_map(|(a, b)| {
            let shaped = a.as_var().is_some_and(|u| {
                selector_shaped(u, &defs, &const_of, &loads_word0, 0)
            });
            if shaped {
                const_of(*b).filter(|c| *c <= Word::from(u32::MAX))
            } else {
                None
            }
        }) else {
            continue;
        };

        // equal branch enters the method; the other continues dispatching
        let (method_entry, continues_at) = if negated {
            (*fall, *taken)
        } else {
            (*taken, *fall)
        };
        if table
            .methods
            .insert(selector.as_u32(), method_entry)
            .is_some()
        {
            duplicate = true;
        }
        dispatch_blocks.insert(block.id);
        continues.insert(block.id, continues_at);
    }

    if duplicate {
        cfg.flags.insert("malformed-dispatcher".to_string());
    }

    // Fallback: walk the continue chain from the entry past all dispatcher
    // comparisons. With no dispatcher the whole body is the fallback.
    let mut at = cfg.entry;
    let mut seen = BTreeSet::new();
    let fallback = loop {
        if !seen.insert(at) {
            break at;
        }
        if let Some(next) = continues.get(&at) {
            at = *next;
            continue;
        }
        // fall through non-dispatching straight-line blocks leading into
        // the first comparison
        let succs = cfg.successors(at);
        if succs.len() == 1
            && (dispatch_blocks.contains(&succs[0]) || continues.contains_key(&succs[0]))
        {
            at = succs[0];
            continue;
        }
        if succs.len() == 1 && seen.len() <= 2 && !dispatch_blocks.is_empty() {
            // initial selector-extraction block(s)
            at = succs[0];
            continue;
        }
        break at;
    };
    table.fallback = Some(fallback);
    table
}
