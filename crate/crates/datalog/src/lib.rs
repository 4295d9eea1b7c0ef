//! A small stratified Datalog engine.
//!
//! The engine is generic: it knows nothing about the domain it is used for.
//! Clients declare a [`Program`] (a set of rules over predicates), feed it a
//! [`FactSet`] of ground input facts, and receive a [`Model`] containing the
//! stratified least fixed point. Negation is supported through stratification:
//! a program is rejected if a predicate depends negatively on itself through a
//! cycle.
//!
//! Programs can be built in code or parsed from a compact text format, one
//! rule per line:
//!
//! ```text
//! reach(X, Y) :- edge(X, Y).
//! reach(X, Z) :- reach(X, Y), edge(Y, Z).
//! isolated(X) :- node(X), !touched(X).
//! ```
//!
//! `!` marks negated literals, `//` starts a comment, identifiers starting
//! with an upper-case letter are variables, everything else is a constant.
//! The reserved constant `top` denotes the unknown marker.

mod eval;
mod model;
mod parser;
mod program;
mod stratify;
mod term;

pub use eval::{evaluate, EvalError, EvalOptions};
pub use model::{FactSet, Model, Relation};
pub use parser::{parse_program, ParseError};
pub use program::{Atom, Diagnostic, Literal, Program, Rule};
pub use stratify::{Stratification, StratifyError};
pub use term::{Const, Term};
