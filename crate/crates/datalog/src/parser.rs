use ethnum::U256;
use thiserror::Error;

use crate::program::{Atom, Literal, Program, Rule};
use crate::term::{Const, Term};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Parse the textual rule format: one rule per line,
/// `head :- lit, ..., !lit.`, `//` comments, `.input pred` declarations.
///
/// Identifiers starting with an upper-case letter are variables, `_` is a
/// fresh anonymous variable, `top` is the reserved unknown constant, numbers
/// (decimal or `0x` hex) are 256-bit constants, and any other identifier is a
/// symbol constant.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut rules = Vec::new();
    let mut extensional = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find("//") {
            Some(ix) => &raw[..ix],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(".input") {
            for name in rest.split_whitespace() {
                extensional.push(name.to_string());
            }
            continue;
        }
        rules.push(parse_rule(line, line_no)?);
    }
    let mut program = Program::new(rules);
    for pred in extensional {
        program.declare_extensional(pred);
    }
    Ok(program)
}

fn parse_rule(line: &str, line_no: usize) -> Result<Rule, ParseError> {
    let err = |message: String| ParseError {
        line: line_no,
        message,
    };
    let line = line
        .strip_suffix('.')
        .ok_or_else(|| err("rule must end with '.'".into()))?;
    let mut fresh = 0usize;
    let (head_text, body_text) = match line.split_once(":-") {
        Some((h, b)) => (h.trim(), Some(b.trim())),
        None => (line.trim(), None),
    };
    let head = parse_atom(head_text, line_no, &mut fresh)?;
    let mut body = Vec::new();
    if let Some(body_text) = body_text {
        for part in split_literals(body_text) {
            let part = part.trim();
            let (negated, atom_text) = match part.strip_prefix('!') {
                Some(rest) => (true, rest.trim()),
                None => (false, part),
            };
            let atom = parse_atom(atom_text, line_no, &mut fresh)?;
            body.push(Literal { negated, atom });
        }
    }
    Ok(Rule { head, body })
}

/// Split a rule body on top-level commas (commas inside parentheses separate
/// atom arguments, not literals).
fn split_literals(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in body.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&body[start..]);
    parts
}

fn parse_atom(text: &str, line_no: usize, fresh: &mut usize) -> Result<Atom, ParseError> {
    let err = |message: String| ParseError {
        line: line_no,
        message,
    };
    let text = text.trim();
    let Some(open) = text.find('(') else {
        // Zero-arity atom.
        if !is_ident(text) {
            return Err(err(format!("malformed atom: {text:?}")));
        }
        return Ok(Atom::new(text, Vec::new()));
    };
    let close = text
        .rfind(')')
        .ok_or_else(|| err(format!("missing ')' in atom: {text:?}")))?;
    let pred = text[..open].trim();
    if !is_ident(pred) {
        return Err(err(format!("malformed predicate name: {pred:?}")));
    }
    let args = &text[open + 1..close];
    let mut terms = Vec::new();
    for arg in args.split(',') {
        let arg = arg.trim();
        if arg.is_empty() {
            return Err(err(format!("empty argument in atom: {text:?}")));
        }
        terms.push(parse_term(arg, line_no, fresh)?);
    }
    Ok(Atom::new(pred, terms))
}

fn parse_term(text: &str, line_no: usize, fresh: &mut usize) -> Result<Term, ParseError> {
    let err = |message: String| ParseError {
        line: line_no,
        message,
    };
    if text == "_" {
        let t = Term::var(format!("_anon{}", *fresh));
        *fresh += 1;
        return Ok(t);
    }
    if text == "top" {
        return Ok(Term::Const(Const::Top));
    }
    let first = text.chars().next().unwrap();
    if first.is_ascii_digit() {
        let value = if let Some(hex) = text.strip_prefix("0x") {
            U256::from_str_radix(hex, 16)
        } else {
            U256::from_str_radix(text, 10)
        }
        .map_err(|e| err(format!("bad number {text:?}: {e}")))?;
        return Ok(Term::Const(Const::Num(value)));
    }
    if !is_ident(text) {
        return Err(err(format!("malformed term: {text:?}")));
    }
    if first.is_ascii_uppercase() {
        Ok(Term::var(text))
    } else {
        Ok(Term::Const(Const::sym(text)))
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !s.starts_with(|c: char| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rules_and_comments() {
        let p = parse_program(
            "// transitive closure\n\
             reach(X, Y) :- edge(X, Y).\n\
             reach(X, Z) :- reach(X, Y), edge(Y, Z).\n\
             lonely(X) :- node(X), !reach(X, X).\n",
        )
        .unwrap();
        assert_eq!(p.rules.len(), 3);
        assert!(p.rules[2].body[1].negated);
        assert!(p.check_well_formed().is_empty());
    }

    #[test]
    fn wildcards_are_fresh() {
        let p = parse_program("p(X) :- q(X, _), r(_, X).\n").unwrap();
        let vars: Vec<_> = p.rules[0].body[0].atom.vars().collect();
        assert_eq!(vars[1], "_anon0");
        let vars: Vec<_> = p.rules[0].body[1].atom.vars().collect();
        assert_eq!(vars[0], "_anon1");
    }

    #[test]
    fn constants_and_numbers() {
        let p = parse_program("p(X) :- q(X, caller, 0x10, 7, top).\n").unwrap();
        let terms = &p.rules[0].body[0].atom.terms;
        assert_eq!(terms[1], Term::Const(Const::sym("caller")));
        assert_eq!(terms[2], Term::Const(Const::num(16u64)));
        assert_eq!(terms[3], Term::Const(Const::num(7u64)));
        assert_eq!(terms[4], Term::Const(Const::Top));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_program("p(X) :- q(X)\n").is_err()); // missing dot
        assert!(parse_program("p(X :- q(X).\n").is_err());
        assert!(parse_program("p(9x) :- q(9x).\n").is_err());
    }
}
