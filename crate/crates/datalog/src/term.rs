use std::fmt;

use ethnum::U256;

/// A ground constant.
///
/// The universe mixes interned symbols (instruction labels, program
/// variables, tags), 256-bit unsigned numbers, and the reserved unknown
/// marker `top`. Symbols and numbers never compare equal, so clients can use
/// both without collisions.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Const {
    Sym(String),
    Num(U256),
    Top,
}

impl Const {
    pub fn sym(s: impl Into<String>) -> Self {
        Const::Sym(s.into())
    }

    pub fn num(n: impl Into<U256>) -> Self {
        Const::Num(n.into())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Const::Top)
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Sym(s) => f.write_str(s),
            Const::Num(n) => write!(f, "0x{:x}", n),
            Const::Top => f.write_str("top"),
        }
    }
}

/// A term in an atom: either a named variable or a constant.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(String),
    Const(Const),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(c: Const) -> Self {
        Term::Const(c)
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{}", c),
        }
    }
}
