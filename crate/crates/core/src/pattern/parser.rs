//! Concrete syntax for security patterns.
//!
//! ```text
//! some sstore(L1, X, _). !MayDepOn(X, caller) && !MayDepOn(L1, caller)
//! ```
//!
//! Quantifiers: `some instr(...).` / `all instr(...).` / `exists [sort] V.`;
//! connectives `!`, `&&`, `||`, `=>` (right-associative, lowest precedence);
//! `=` / `!=` for value equality; `_` wildcards; `@N` for the label at byte
//! offset N. Upper-case identifiers are variables; lower-case identifiers
//! are tags or the reserved `top`. Semantic predicates keep their usual
//! capitalized names (`MayDepOn`, `Eq`, ...).

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{PTerm, Pattern, Quant, Sort};
use crate::word::Word;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("pattern syntax error at column {column}: {message}")]
pub struct PatternParseError {
    pub column: usize,
    pub message: String,
}

/// Semantic predicates: surface name, engine name, arity.
pub const SEMANTIC_PREDS: &[(&str, &str, usize)] = &[
    ("Eq", "eq", 2),
    ("DetBy", "detBy", 2),
    ("MayDepOn", "mayDepOn", 2),
    ("MayFollow", "mayFollow", 2),
    ("MustFollow", "mustFollow", 2),
    ("Follow", "follow", 2),
    ("isConst", "isConst", 1),
];

/// Instruction fact vocabulary: fact name and arity (label included).
pub const INSTR_VOCAB: &[(&str, usize)] = &[
    ("assign", 3),
    ("add", 4),
    ("mul", 4),
    ("sub", 4),
    ("div", 4),
    ("sdiv", 4),
    ("mod", 4),
    ("smod", 4),
    ("addmod", 5),
    ("mulmod", 5),
    ("exp", 4),
    ("signextend", 4),
    ("lt", 4),
    ("gt", 4),
    ("slt", 4),
    ("sgt", 4),
    ("cmpeq", 4),
    ("iszero", 3),
    ("and", 4),
    ("or", 4),
    ("xor", 4),
    ("not", 3),
    ("byte", 4),
    ("shl", 4),
    ("shr", 4),
    ("sar", 4),
    ("codesize", 2),
    ("extcodesize", 3),
    ("returndatasize", 2),
    ("extcodehash", 3),
    ("blockhash", 3),
    ("msize", 2),
    ("gas", 2),
    ("sha3", 4),
    ("dataload", 3),
    ("datasize", 2),
    ("datacopy", 4),
    ("codecopy", 2),
    ("balance", 3),
    ("mload", 3),
    ("mstore", 3),
    ("sload", 3),
    ("sstore", 3),
    ("call", 4),
    ("create", 3),
    ("log", 1),
    ("goto", 3),
    ("jump", 1),
    ("stop", 1),
    ("throw", 1),
    ("selfdestruct", 2),
];

pub fn instr_arity(opcode: &str) -> Option<usize> {
    INSTR_VOCAB
        .iter()
        .find(|(name, _)| *name == opcode)
        .map(|(_, a)| *a)
}

/// Known tag symbols usable as constants in patterns.
pub fn known_tags() -> BTreeSet<&'static str> {
    crate::analysis::INSTRUCTION_TAGS.iter().copied().collect()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Word),
    LabelAt(u64),
    LParen,
    RParen,
    Dot,
    Comma,
    Bang,
    AndAnd,
    OrOr,
    Implies,
    Equals,
    NotEquals,
    Underscore,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, PatternParseError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0usize;
    let err = |column: usize, message: String| PatternParseError { column, message };
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '.' => {
                out.push((i, Tok::Dot));
                i += 1;
            }
            ',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    out.push((i, Tok::Implies));
                    i += 2;
                } else {
                    out.push((i, Tok::Equals));
                    i += 1;
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push((i, Tok::NotEquals));
                    i += 2;
                } else {
                    out.push((i, Tok::Bang));
                    i += 1;
                }
            }
            '&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    out.push((i, Tok::AndAnd));
                    i += 2;
                } else {
                    return Err(err(i, "expected &&".into()));
                }
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    out.push((i, Tok::OrOr));
                    i += 2;
                } else {
                    return Err(err(i, "expected ||".into()));
                }
            }
            '@' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && (bytes[j] as char).is_ascii_alphanumeric() {
                    j += 1;
                }
                let lit = &text[start..j];
                let n = if let Some(hex) = lit.strip_prefix("0x") {
                    u64::from_str_radix(hex, 16)
                } else {
                    lit.parse::<u64>()
                }
                .map_err(|_| err(i, format!("bad label offset {lit:?}")))?;
                out.push((i, Tok::LabelAt(n)));
                i = j;
            }
            '_' => {
                // bare underscore only; identifiers may not start with it
                out.push((i, Tok::Underscore));
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < bytes.len() && (bytes[j] as char).is_ascii_alphanumeric() {
                    j += 1;
                }
                let lit = &text[start..j];
                let w = if let Some(hex) = lit.strip_prefix("0x") {
                    Word::from_str_radix(hex, 16)
                } else {
                    Word::from_str_radix(lit, 10)
                }
                .map_err(|_| err(start, format!("bad number {lit:?}")))?;
                out.push((start, Tok::Num(w)));
                i = j;
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                out.push((start, Tok::Ident(text[start..j].to_string())));
                i = j;
            }
            other => return Err(err(i, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(c, _)| *c)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), PatternParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn err(&self, message: String) -> PatternParseError {
        PatternParseError {
            column: self.column(),
            message,
        }
    }

    // pattern := quantifier-chain | implication
    fn pattern(&mut self) -> Result<Pattern, PatternParseError> {
        match self.peek() {
            Some(Tok::Ident(id)) if id == "some" || id == "all" => {
                let quant = if id == "some" { Quant::Some } else { Quant::All };
                self.bump();
                let (opcode, terms) = self.instr_atom()?;
                self.expect(Tok::Dot, "'.' after quantified instruction")?;
                let body = self.pattern()?;
                Ok(Pattern::QuantInstr {
                    quant,
                    opcode,
                    terms,
                    body: Box::new(body),
                })
            }
            Some(Tok::Ident(id)) if id == "exists" => {
                self.bump();
                let mut sort = Sort::Any;
                if let Some(Tok::Ident(s)) = self.peek() {
                    match s.as_str() {
                        "label" => {
                            sort = Sort::Label;
                            self.bump();
                        }
                        "var" => {
                            sort = Sort::Var;
                            self.bump();
                        }
                        "tag" => {
                            sort = Sort::Tag;
                            self.bump();
                        }
                        _ => {}
                    }
                }
                let mut vars = Vec::new();
                loop {
                    match self.bump() {
                        Some(Tok::Ident(v)) if v.starts_with(|c: char| c.is_ascii_uppercase()) => {
                            vars.push(v)
                        }
                        _ => return Err(self.err("expected binder variable".into())),
                    }
                    if self.peek() == Some(&Tok::Comma) {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Dot, "'.' after exists binders")?;
                let mut body = self.pattern()?;
                for v in vars.into_iter().rev() {
                    body = Pattern::Exists {
                        sort,
                        var: v,
                        body: Box::new(body),
                    };
                }
                Ok(body)
            }
            _ => self.implication(),
        }
    }

    fn implication(&mut self) -> Result<Pattern, PatternParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.bump();
            let rhs = self.pattern()?; // right-associative, may chain quantifiers
            Ok(Pattern::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Pattern, PatternParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::OrOr) {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Pattern::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Pattern, PatternParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::AndAnd) {
            self.bump();
            let rhs = self.unary()?;
            lhs = Pattern::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Pattern, PatternParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Pattern::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.pattern()?;
                self.expect(Tok::RParen, "')'")?;
                // allow comparisons against a parenthesized... no: parens wrap patterns only
                Ok(inner)
            }
            _ => self.atom_or_comparison(),
        }
    }

    fn atom_or_comparison(&mut self) -> Result<Pattern, PatternParseError> {
        // term (= | !=) term, or a predicate/instruction atom
        let checkpoint = self.pos;
        if let Ok(lhs) = self.term() {
            match self.peek() {
                Some(Tok::Equals) => {
                    self.bump();
                    let rhs = self.term()?;
                    return Ok(Pattern::EqSugar(lhs, rhs));
                }
                Some(Tok::NotEquals) => {
                    self.bump();
                    let rhs = self.term()?;
                    return Ok(Pattern::NeqSugar(lhs, rhs));
                }
                _ => {
                    self.pos = checkpoint;
                }
            }
        } else {
            self.pos = checkpoint;
        }

        let name = match self.bump() {
            Some(Tok::Ident(n)) => n,
            _ => return Err(self.err("expected predicate or instruction atom".into())),
        };
        if let Some((_, engine, arity)) = SEMANTIC_PREDS.iter().find(|(s, _, _)| *s == name) {
            let terms = self.term_list()?;
            if terms.len() != *arity {
                return Err(self.err(format!(
                    "{name} takes {arity} arguments, got {}",
                    terms.len()
                )));
            }
            return Ok(Pattern::Pred {
                name: (*engine).to_string(),
                terms,
            });
        }
        if let Some(arity) = instr_arity(&name) {
            let terms = self.term_list()?;
            if terms.len() != arity {
                return Err(self.err(format!(
                    "instruction {name} takes {arity} arguments (label included), got {}",
                    terms.len()
                )));
            }
            return Ok(Pattern::Instr {
                opcode: name,
                terms,
            });
        }
        Err(self.err(format!("unknown predicate or instruction {name:?}")))
    }

    fn instr_atom(&mut self) -> Result<(String, Vec<PTerm>), PatternParseError> {
        let name = match self.bump() {
            Some(Tok::Ident(n)) => n,
            _ => return Err(self.err("expected instruction name".into())),
        };
        let Some(arity) = instr_arity(&name) else {
            return Err(self.err(format!("unknown instruction {name:?}")));
        };
        let terms = self.term_list()?;
        if terms.len() != arity {
            return Err(self.err(format!(
                "instruction {name} takes {arity} arguments (label included), got {}",
                terms.len()
            )));
        }
        Ok((name, terms))
    }

    fn term_list(&mut self) -> Result<Vec<PTerm>, PatternParseError> {
        self.expect(Tok::LParen, "'('")?;
        let mut terms = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.bump();
            return Ok(terms);
        }
        loop {
            terms.push(self.term()?);
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => return Err(self.err("expected ',' or ')'".into())),
            }
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<PTerm, PatternParseError> {
        match self.peek().cloned() {
            Some(Tok::Underscore) => {
                self.bump();
                Ok(PTerm::Wildcard)
            }
            Some(Tok::Num(w)) => {
                self.bump();
                Ok(PTerm::Num(w))
            }
            Some(Tok::LabelAt(n)) => {
                self.bump();
                Ok(PTerm::LabelAt(n))
            }
            Some(Tok::Ident(id)) => {
                if id.starts_with(|c: char| c.is_ascii_uppercase()) {
                    self.bump();
                    Ok(PTerm::Var(id))
                } else if id == "top" {
                    self.bump();
                    Ok(PTerm::Top)
                } else if known_tags().contains(id.as_str()) {
                    self.bump();
                    Ok(PTerm::Sym(id))
                } else {
                    Err(self.err(format!(
                        "unknown tag {id:?} (known tags: {})",
                        crate::analysis::INSTRUCTION_TAGS.join(", ")
                    )))
                }
            }
            _ => Err(self.err("expected term".into())),
        }
    }
}

/// Parse one pattern expression.
pub fn parse_pattern(text: &str) -> Result<Pattern, PatternParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        len: text.len(),
    };
    let pat = p.pattern()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input after pattern".into()));
    }
    Ok(pat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_restricted_write_violation() {
        let p = parse_pattern(
            "some sstore(L1, X, _). !MayDepOn(X, caller) && !MayDepOn(L1, caller)",
        )
        .unwrap();
        match p {
            Pattern::QuantInstr {
                quant: Quant::Some,
                opcode,
                terms,
                ..
            } => {
                assert_eq!(opcode, "sstore");
                assert_eq!(terms.len(), 3);
                assert_eq!(terms[2], PTerm::Wildcard);
            }
            other => panic!("unexpected parse {other:?}"),
        }
    }

    #[test]
    fn parses_amount_equality() {
        let p = parse_pattern("all call(_, _, _, Amount). Amount = 0").unwrap();
        match p {
            Pattern::QuantInstr { quant: Quant::All, body, .. } => {
                assert_eq!(
                    *body,
                    Pattern::EqSugar(PTerm::Var("Amount".into()), PTerm::Num(Word::ZERO))
                );
            }
            other => panic!("unexpected parse {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_and_unknown() {
        assert!(parse_pattern("some sstore(L, X, _).").is_err()); // dangling body
        assert!(parse_pattern("some frobnicate(L). stop(L)").is_err());
        assert!(parse_pattern("MayDepOn(X)").is_err()); // arity
        assert!(parse_pattern("some sstore(L, X). stop(L)").is_err()); // instr arity
        assert!(parse_pattern("Eq(X, bogus_tag)").is_err());
    }

    #[test]
    fn precedence_implication_binds_loosest() {
        let p = parse_pattern("Eq(X, caller) && Eq(X, data) => isConst(X)").unwrap();
        assert!(matches!(p, Pattern::Implies(_, _)));
    }

    #[test]
    fn exists_with_sort_and_label_literal() {
        let p = parse_pattern("exists label L4. Follow(L4, @16) && L4 != @16").unwrap();
        match p {
            Pattern::Exists { sort: Sort::Label, var, .. } => assert_eq!(var, "L4"),
            other => panic!("unexpected parse {other:?}"),
        }
    }
}
