use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::{Hole, HoleId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("constraint syntax at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("constraint mentions unknown hole `{0}`")]
    UnknownHole(String),
    #[error("constraint mentions unknown option `{option}` of hole `{hole}`")]
    UnknownOption { hole: String, option: String },
    #[error("constraint atom ({hole}, {option}) out of range")]
    BadAtom { hole: HoleId, option: usize },
}

/// Propositional formula over atoms `hole = option`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom { hole: HoleId, option: usize },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

/// A literal `hole = option` (positive) or `hole != option`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub hole: HoleId,
    pub option: usize,
    pub positive: bool,
}

impl Formula {
    pub fn atom(hole: HoleId, option: usize) -> Self {
        Formula::Atom { hole, option }
    }

    pub fn negate(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn implies(self, other: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn iff(self, other: Formula) -> Self {
        Formula::Iff(Box::new(self), Box::new(other))
    }

    /// Truth value under a total assignment.
    pub fn eval(&self, options: &[usize]) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom { hole, option } => options[*hole] == *option,
            Formula::Not(f) => !f.eval(options),
            Formula::And(fs) => fs.iter().all(|f| f.eval(options)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(options)),
            Formula::Implies(a, b) => !a.eval(options) || b.eval(options),
            Formula::Iff(a, b) => a.eval(options) == b.eval(options),
        }
    }

    /// Kleene evaluation under a partial assignment; `None` is unknown.
    pub fn eval_partial(&self, options: &[Option<usize>]) -> Option<bool> {
        match self {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Atom { hole, option } => options[*hole].map(|o| o == *option),
            Formula::Not(f) => f.eval_partial(options).map(|b| !b),
            Formula::And(fs) => {
                let mut unknown = false;
                for f in fs {
                    match f.eval_partial(options) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                (!unknown).then_some(true)
            }
            Formula::Or(fs) => {
                let mut unknown = false;
                for f in fs {
                    match f.eval_partial(options) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                (!unknown).then_some(false)
            }
            Formula::Implies(a, b) => match (a.eval_partial(options), b.eval_partial(options)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
            Formula::Iff(a, b) => Some(a.eval_partial(options)? == b.eval_partial(options)?),
        }
    }

    pub fn holes(&self) -> BTreeSet<HoleId> {
        let mut out = BTreeSet::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes(&self, out: &mut BTreeSet<HoleId>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom { hole, .. } => {
                out.insert(*hole);
            }
            Formula::Not(f) => f.collect_holes(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_holes(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_holes(out);
                b.collect_holes(out);
            }
        }
    }

    /// Appends the top-level conjuncts of `self` to `out`.
    pub fn conjuncts(&self, out: &mut Vec<Formula>) {
        match self {
            Formula::And(fs) => fs.iter().for_each(|f| f.conjuncts(out)),
            Formula::True => {}
            f => out.push(f.clone()),
        }
    }

    /// The formula as a disjunction of literals, if it has that shape.
    pub fn to_clause(&self) -> Option<Vec<Literal>> {
        let mut lits = Vec::new();
        if self.push_disjuncts(&mut lits) {
            lits.sort();
            lits.dedup();
            Some(lits)
        } else {
            None
        }
    }

    fn push_disjuncts(&self, lits: &mut Vec<Literal>) -> bool {
        match self {
            Formula::False => true,
            Formula::Atom { hole, option } => {
                lits.push(Literal {
                    hole: *hole,
                    option: *option,
                    positive: true,
                });
                true
            }
            Formula::Not(f) => f.push_negated_conjuncts(lits),
            Formula::Or(fs) => fs.iter().all(|f| f.push_disjuncts(lits)),
            Formula::Implies(a, b) => a.push_negated_conjuncts(lits) && b.push_disjuncts(lits),
            _ => false,
        }
    }

    /// Literals of `¬self` when `self` is a conjunction of literals.
    fn push_negated_conjuncts(&self, lits: &mut Vec<Literal>) -> bool {
        match self {
            Formula::True => true,
            Formula::Atom { hole, option } => {
                lits.push(Literal {
                    hole: *hole,
                    option: *option,
                    positive: false,
                });
                true
            }
            Formula::Not(f) => f.push_disjuncts(lits),
            Formula::And(fs) => fs.iter().all(|f| f.push_negated_conjuncts(lits)),
            _ => false,
        }
    }

    pub(crate) fn validate(&self, holes: &[Hole]) -> Result<(), ConstraintError> {
        match self {
            Formula::True | Formula::False => Ok(()),
            Formula::Atom { hole, option } => {
                if *hole < holes.len() && *option < holes[*hole].len() {
                    Ok(())
                } else {
                    Err(ConstraintError::BadAtom {
                        hole: *hole,
                        option: *option,
                    })
                }
            }
            Formula::Not(f) => f.validate(holes),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(|f| f.validate(holes)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.validate(holes)?;
                b.validate(holes)
            }
        }
    }

    pub fn to_sexpr<'a>(&'a self, holes: &'a [Hole]) -> SExpr<'a> {
        SExpr {
            formula: self,
            holes,
        }
    }

    /// Parses the s-expression form written by [`Formula::to_sexpr`].
    pub fn parse_sexpr(text: &str, holes: &[Hole]) -> Result<Formula, ConstraintError> {
        let mut p = SParser {
            src: text,
            pos: 0,
            holes,
        };
        let f = p.formula()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.error("trailing input"));
        }
        Ok(f)
    }
}

pub struct SExpr<'a> {
    formula: &'a Formula,
    holes: &'a [Hole],
}

fn is_bare(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "true"
        && s != "false"
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

impl fmt::Display for SExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |g: &'_ Formula| {
            SExpr {
                formula: g,
                holes: self.holes,
            }
            .to_string()
        };
        match self.formula {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom { hole, option } => {
                let h = &self.holes[*hole];
                let name = if is_bare(&h.name) {
                    h.name.clone()
                } else {
                    quote(&h.name)
                };
                write!(f, "(= {} {})", name, quote(&h.options[*option]))
            }
            Formula::Not(g) => write!(f, "(not {})", sub(g)),
            Formula::And(gs) | Formula::Or(gs) => {
                let op = if matches!(self.formula, Formula::And(_)) {
                    "and"
                } else {
                    "or"
                };
                write!(f, "({op}")?;
                for g in gs {
                    write!(f, " {}", sub(g))?;
                }
                write!(f, ")")
            }
            Formula::Implies(a, b) => write!(f, "(=> {} {})", sub(a), sub(b)),
            Formula::Iff(a, b) => write!(f, "(<=> {} {})", sub(a), sub(b)),
        }
    }
}

struct SParser<'a> {
    src: &'a str,
    pos: usize,
    holes: &'a [Hole],
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
    Str(String),
}

impl SParser<'_> {
    fn error(&self, msg: &str) -> ConstraintError {
        ConstraintError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn next(&mut self) -> Result<Tok, ConstraintError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Err(self.error("unexpected end of input"));
        };
        match c {
            '(' => {
                self.pos += 1;
                Ok(Tok::Open)
            }
            ')' => {
                self.pos += 1;
                Ok(Tok::Close)
            }
            '"' => {
                let bytes = rest.as_bytes();
                let mut i = 1;
                while i < bytes.len() {
                    match bytes[i] {
                        b'\\' => i += 2,
                        b'"' => break,
                        _ => i += 1,
                    }
                }
                if i >= bytes.len() {
                    return Err(self.error("unterminated string"));
                }
                let s: String = serde_json::from_str(&rest[..=i])
                    .map_err(|e| self.error(&format!("bad string: {e}")))?;
                self.pos += i + 1;
                Ok(Tok::Str(s))
            }
            _ => {
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == '"')
                    .unwrap_or(rest.len());
                self.pos += end;
                Ok(Tok::Word(rest[..end].to_string()))
            }
        }
    }

    fn formula(&mut self) -> Result<Formula, ConstraintError> {
        let start = self.pos;
        match self.next()? {
            Tok::Word(w) if w == "true" => Ok(Formula::True),
            Tok::Word(w) if w == "false" => Ok(Formula::False),
            Tok::Open => {
                let head = match self.next()? {
                    Tok::Word(w) => w,
                    _ => return Err(self.error("expected operator")),
                };
                let f = match head.as_str() {
                    "=" => {
                        let hole = match self.next()? {
                            Tok::Word(w) | Tok::Str(w) => w,
                            _ => return Err(self.error("expected hole name")),
                        };
                        let label = match self.next()? {
                            Tok::Word(w) | Tok::Str(w) => w,
                            _ => return Err(self.error("expected option label")),
                        };
                        let name = hole.trim_matches('@');
                        let h = self
                            .holes
                            .iter()
                            .position(|x| x.name == name)
                            .ok_or_else(|| ConstraintError::UnknownHole(name.to_string()))?;
                        let o = self.holes[h].option_index(&label).ok_or_else(|| {
                            ConstraintError::UnknownOption {
                                hole: name.to_string(),
                                option: label.clone(),
                            }
                        })?;
                        Formula::atom(h, o)
                    }
                    "not" => self.formula()?.negate(),
                    "and" | "or" => {
                        let mut args = Vec::new();
                        while !self.peek_close() {
                            args.push(self.formula()?);
                        }
                        if head == "and" {
                            Formula::And(args)
                        } else {
                            Formula::Or(args)
                        }
                    }
                    "=>" => {
                        let a = self.formula()?;
                        a.implies(self.formula()?)
                    }
                    "<=>" => {
                        let a = self.formula()?;
                        a.iff(self.formula()?)
                    }
                    other => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown operator `{other}`")));
                    }
                };
                match self.next()? {
                    Tok::Close => Ok(f),
                    _ => Err(self.error("expected `)`")),
                }
            }
            _ => {
                self.pos = start;
                Err(self.error("expected formula"))
            }
        }
    }

    fn peek_close(&mut self) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(')')
    }
}
