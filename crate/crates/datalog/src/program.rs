use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::Term;

/// A predicate applied to terms, e.g. `reach(X, Y)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Atom {
    pub pred: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, terms: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            terms,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| t.as_var())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", t)?;
        }
        f.write_str(")")
    }
}

/// An atom or its negation, as it appears in a rule body.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Literal {
    pub negated: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            negated: false,
            atom,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            negated: true,
            atom,
        }
    }
}

/// `head :- body.` A rule with an empty body derives its (ground) head
/// unconditionally.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                if l.negated {
                    f.write_str("!")?;
                }
                write!(f, "{}", l.atom)?;
            }
        }
        f.write_str(".")
    }
}

/// A well-formedness finding. `check_well_formed` reports problems instead of
/// failing, so callers can show all of them at once.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub rule: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: {}", self.rule, self.message)
    }
}

/// A rule set plus the set of extensional (input-only) predicates.
///
/// Extensional predicates are those that never occur in a rule head; they are
/// derived automatically but can be extended with `declare_extensional` for
/// predicates the rules never mention at all.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
    extra_extensional: BTreeSet<String>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Self {
        Program {
            rules,
            extra_extensional: BTreeSet::new(),
        }
    }

    /// Declare a predicate as extensional even though no rule refers to it.
    pub fn declare_extensional(&mut self, pred: impl Into<String>) {
        self.extra_extensional.insert(pred.into());
    }

    /// Predicates defined by at least one rule head.
    pub fn intensional(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.head.pred.as_str()).collect()
    }

    /// All predicates mentioned anywhere, mapped to their arity.
    /// Inconsistent arities are reported by `check_well_formed`.
    pub fn signatures(&self) -> BTreeMap<&str, usize> {
        let mut sigs = BTreeMap::new();
        for rule in &self.rules {
            sigs.entry(rule.head.pred.as_str())
                .or_insert(rule.head.terms.len());
            for lit in &rule.body {
                sigs.entry(lit.atom.pred.as_str())
                    .or_insert(lit.atom.terms.len());
            }
        }
        sigs
    }

    pub fn is_extensional(&self, pred: &str) -> bool {
        self.extra_extensional.contains(pred) || !self.intensional().contains(pred)
    }

    /// Check head-variable containment, negation safety, and arity
    /// consistency. Returns one diagnostic per violation; an empty vector
    /// means the program is well-formed.
    pub fn check_well_formed(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut arities: BTreeMap<&str, usize> = BTreeMap::new();
        for (idx, rule) in self.rules.iter().enumerate() {
            let body_vars: BTreeSet<&str> = rule
                .body
                .iter()
                .flat_map(|l| l.atom.vars())
                .collect();
            let positive_vars: BTreeSet<&str> = rule
                .body
                .iter()
                .filter(|l| !l.negated)
                .flat_map(|l| l.atom.vars())
                .collect();
            for v in rule.head.vars() {
                if !body_vars.contains(v) {
                    out.push(Diagnostic {
                        rule: idx,
                        message: format!("head variable {} does not occur in the body", v),
                    });
                }
            }
            for lit in rule.body.iter().filter(|l| l.negated) {
                for v in lit.atom.vars() {
                    if !positive_vars.contains(v) {
                        out.push(Diagnostic {
                            rule: idx,
                            message: format!(
                                "variable {} occurs only in negated literal {}",
                                v, lit.atom
                            ),
                        });
                    }
                }
            }
            for atom in std::iter::once(&rule.head).chain(rule.body.iter().map(|l| &l.atom)) {
                let pred = atom.pred.as_str();
                let arity = atom.terms.len();
                match arities.get(pred) {
                    Some(&a) if a != arity => out.push(Diagnostic {
                        rule: idx,
                        message: format!(
                            "predicate {} used with arity {} but previously {}",
                            pred, arity, a
                        ),
                    }),
                    Some(_) => {}
                    None => {
                        arities.insert(pred, arity);
                    }
                }
            }
        }
        out
    }
}

