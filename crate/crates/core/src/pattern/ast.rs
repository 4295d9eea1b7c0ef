//! Security-pattern abstract syntax.

use datalog::Const;

use crate::word::Word;

/// Binder sort for bare `exists` quantifiers. `Any` ranges over the union of
/// the three universes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Sort {
    Label,
    Var,
    Tag,
    Any,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Quant {
    Some,
    All,
}

/// A term as written in a pattern.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PTerm {
    /// Upper-case identifier: a pattern variable.
    Var(String),
    /// `_`: matches anything, binds nothing.
    Wildcard,
    /// Numeric literal.
    Num(Word),
    /// Known tag or other symbol constant (caller, data, ...).
    Sym(String),
    /// The unknown-offset marker `top`.
    Top,
    /// `@N`: the instruction label at bytecode offset N.
    LabelAt(u64),
}

impl PTerm {
    /// Ground constant for already-constant terms (not variables).
    pub fn as_const(&self) -> Option<Const> {
        match self {
            PTerm::Num(w) => Some(Const::Num(*w)),
            PTerm::Sym(s) => Some(Const::sym(s.clone())),
            PTerm::Top => Some(Const::Top),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Pattern {
    /// Instruction fact atom, e.g. `sstore(L, X, _)`.
    Instr { opcode: String, terms: Vec<PTerm> },
    /// Semantic predicate, e.g. `MayDepOn(X, caller)`; `name` is the engine
    /// predicate name (lower camel case).
    Pred { name: String, terms: Vec<PTerm> },
    Exists {
        sort: Sort,
        var: String,
        body: Box<Pattern>,
    },
    Not(Box<Pattern>),
    And(Box<Pattern>, Box<Pattern>),
    // ---- sugar, removed by desugaring ----
    Or(Box<Pattern>, Box<Pattern>),
    Implies(Box<Pattern>, Box<Pattern>),
    /// `some instr(X, ...). body` / `all instr(X, ...). body`
    QuantInstr {
        quant: Quant,
        opcode: String,
        terms: Vec<PTerm>,
        body: Box<Pattern>,
    },
    /// `a = b` (value equality; `Eq` semantic fact or constant identity).
    EqSugar(PTerm, PTerm),
    /// `a != b`
    NeqSugar(PTerm, PTerm),
}

impl Pattern {
    pub fn and(a: Pattern, b: Pattern) -> Pattern {
        Pattern::And(Box::new(a), Box::new(b))
    }

    pub fn not(a: Pattern) -> Pattern {
        Pattern::Not(Box::new(a))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PropertyKind {
    Instruction,
    Contract,
}

/// Per-anchor (or per-contract) outcome.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Verdict {
    Compliant,
    Warning,
    Violation,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Compliant => "compliant",
            Verdict::Warning => "warning",
            Verdict::Violation => "violation",
        }
    }
}

/// One checked pattern: the text it came from, the sugared parse, and the
/// desugared core form used for evaluation.
#[derive(Clone, Debug)]
pub struct PatternEntry {
    pub source: String,
    pub parsed: Pattern,
    pub core: Pattern,
}

/// A security property: compliance and violation pattern lists plus the
/// anchor opcodes verdicts attach to.
#[derive(Clone, Debug)]
pub struct PropertySpec {
    pub name: String,
    pub kind: PropertyKind,
    pub anchors: Vec<String>,
    pub description: String,
    pub compliance: Vec<PatternEntry>,
    pub violation: Vec<PatternEntry>,
}
