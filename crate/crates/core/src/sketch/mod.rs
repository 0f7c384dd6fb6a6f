//! Sketch language: guarded commands with holes, option costs and
//! constraints, elaborated into a [`Family`].
//!
//! ```text
//! hole @k2@ either { 2, 3 }
//! hole @k3@ either { 2, 4 }
//! module encode
//!   s : [0..4] init 0;
//!   s = 0 -> 0.5: s'=1 + 0.5: s'=@k2@;
//!   ...
//! endmodule
//! ```

pub mod ast;
mod elaborate;
mod eval;
mod lexer;
mod parser;

use thiserror::Error;

use crate::family::{Family, FamilyError};
use crate::model::{CmpOp, StateId};

pub use ast::{Expr, Program};
pub use elaborate::{elaborate, elaborate_with, max_states_from_env, DEFAULT_MAX_STATES};
pub use eval::{eval_expr, Scope, Value};
pub use lexer::Pos;
pub use parser::{parse, parse_expr};

#[derive(Debug, Error, PartialEq)]
pub enum SketchError {
    #[error("{pos}: {msg}")]
    Lex { pos: Pos, msg: String },
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: duplicate hole `{name}`")]
    DuplicateHole { name: String, pos: Pos },
    #[error("{pos}: duplicate option `{name}`")]
    DuplicateOptionName { name: String, pos: Pos },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, pos: Pos },
    #[error("{pos}: {msg}")]
    Semantic { pos: Pos, msg: String },
    #[error("{0}")]
    Eval(String),
    #[error("state [{state}]: commands at {first} and {second} are both enabled")]
    OverlappingGuards {
        state: String,
        first: Pos,
        second: Pos,
    },
    #[error("state [{state}]: no command is enabled")]
    NoEnabledCommand { state: String },
    #[error("{pos}: probabilities sum to {sum}")]
    ProbabilitySum { pos: Pos, sum: f64 },
    #[error("{pos}: probabilities must be constant")]
    NonConstantProbability { pos: Pos },
    #[error("{pos}: update sets `{var}` to {value}, outside its range (state [{state}])")]
    OutOfBounds {
        pos: Pos,
        var: String,
        value: i64,
        state: String,
    },
    #[error("more than {bound} states")]
    TooManyStates { bound: usize },
    #[error("property: {0}")]
    Property(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Parses and elaborates a sketch.
pub fn load(text: &str) -> Result<Family, SketchError> {
    elaborate(&parse(text)?)
}

/// States whose valuation satisfies the boolean expression `goal`. Families
/// without variables expose the state index as `state`.
pub fn goal_states(fam: &Family, goal: &str) -> Result<Vec<StateId>, SketchError> {
    let expr = parse_expr(goal)?;
    goal_states_of(fam, &expr)
}

pub fn goal_states_of(fam: &Family, expr: &Expr) -> Result<Vec<StateId>, SketchError> {
    if let Some(h) = expr.holes().into_iter().next() {
        return Err(SketchError::Property(format!(
            "goal refers to hole `@{h}@`"
        )));
    }
    let mut names: Vec<String> = fam
        .labels()
        .map(|l| l.variables.clone())
        .unwrap_or_default();
    names.push("state".into());
    if let Some(v) = expr.variables().into_iter().find(|v| !names.contains(v)) {
        return Err(SketchError::Property(format!(
            "unknown variable `{v}` in goal"
        )));
    }
    let mut out = Vec::new();
    let mut val: Vec<i64> = Vec::with_capacity(names.len());
    for s in 0..fam.len() {
        val.clear();
        if let Some(l) = fam.labels() {
            val.extend_from_slice(&l.valuations[s]);
        }
        val.push(s as i64);
        if eval_expr(expr, &Scope::variables_only(&names, &val))?.as_bool()? {
            out.push(s);
        }
    }
    Ok(out)
}

/// A reachability property `P∼λ [F goal]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub op: CmpOp,
    pub threshold: f64,
    pub goal: Expr,
}

/// Parses `P>=0.1 [F s=4]`.
pub fn parse_property(text: &str) -> Result<Property, SketchError> {
    let bad = |msg: &str| SketchError::Property(format!("{msg} in `{text}`"));
    let t = text.trim();
    let rest = t
        .strip_prefix('P')
        .ok_or_else(|| bad("expected `P`"))?
        .trim_start();
    let (op, rest) = [">=", "<=", ">", "<"]
        .iter()
        .find_map(|sym| rest.strip_prefix(sym).map(|r| (*sym, r)))
        .ok_or_else(|| bad("expected one of >=, >, <=, <"))?;
    let op: CmpOp = op.parse().map_err(|_| bad("bad comparison"))?;
    let open = rest.find('[').ok_or_else(|| bad("expected `[`"))?;
    let threshold: f64 = rest[..open]
        .trim()
        .parse()
        .map_err(|_| bad("bad threshold"))?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(bad("threshold outside [0, 1]"));
    }
    let inner = rest[open + 1..]
        .trim_end()
        .strip_suffix(']')
        .ok_or_else(|| bad("expected `]`"))?
        .trim();
    let goal = inner
        .strip_prefix('F')
        .filter(|g| g.starts_with(char::is_whitespace) || g.starts_with('('))
        .ok_or_else(|| bad("expected `F <goal>`"))?;
    Ok(Property {
        op,
        threshold,
        goal: parse_expr(goal)?,
    })
}
