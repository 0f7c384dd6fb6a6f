use std::fmt;

use super::ast::{BinOp, Expr, HoleDecl};
use super::SketchError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Value {
    pub fn as_int(self) -> Result<i64, SketchError> {
        match self {
            Value::Int(i) => Ok(i),
            other => Err(SketchError::Eval(format!(
                "expected an integer, got {other}"
            ))),
        }
    }

    pub fn as_bool(self) -> Result<bool, SketchError> {
        match self {
            Value::Bool(b) => Ok(b),
            other => Err(SketchError::Eval(format!(
                "expected a boolean, got {other}"
            ))),
        }
    }

    pub fn as_real(self) -> Result<f64, SketchError> {
        match self {
            Value::Int(i) => Ok(i as f64),
            Value::Real(r) => Ok(r),
            Value::Bool(b) => Err(SketchError::Eval(format!("expected a number, got {b}"))),
        }
    }
}

/// What an expression may refer to: variables with their current values
/// and holes with a (partial) option assignment.
#[derive(Clone, Copy)]
pub struct Scope<'a> {
    pub variables: &'a [String],
    pub valuation: &'a [i64],
    pub holes: &'a [HoleDecl],
    pub assignment: &'a [Option<usize>],
}

impl<'a> Scope<'a> {
    pub fn variables_only(variables: &'a [String], valuation: &'a [i64]) -> Self {
        Scope {
            variables,
            valuation,
            holes: &[],
            assignment: &[],
        }
    }
}

pub fn eval_expr(e: &Expr, scope: &Scope) -> Result<Value, SketchError> {
    Ok(match e {
        Expr::Int(i) => Value::Int(*i),
        Expr::Decimal(d) => Value::Real(
            d.parse()
                .map_err(|_| SketchError::Eval(format!("bad decimal `{d}`")))?,
        ),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Var(v) => {
            let i = scope
                .variables
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| SketchError::Eval(format!("unknown variable `{v}`")))?;
            Value::Int(scope.valuation[i])
        }
        Expr::Hole(h) => {
            let i = scope
                .holes
                .iter()
                .position(|x| x.name == *h)
                .ok_or_else(|| SketchError::Eval(format!("unknown hole `@{h}@`")))?;
            let o = scope
                .assignment
                .get(i)
                .copied()
                .flatten()
                .ok_or_else(|| SketchError::Eval(format!("hole `@{h}@` is unassigned")))?;
            eval_expr(&scope.holes[i].options[o].expr, scope)?
        }
        Expr::Neg(a) => match eval_expr(a, scope)? {
            Value::Int(i) => Value::Int(
                i.checked_neg()
                    .ok_or_else(|| SketchError::Eval("integer overflow".into()))?,
            ),
            Value::Real(r) => Value::Real(-r),
            Value::Bool(_) => return Err(SketchError::Eval("cannot negate a boolean".into())),
        },
        Expr::Not(a) => Value::Bool(!eval_expr(a, scope)?.as_bool()?),
        Expr::Bin(op, a, b) => bin(*op, a, b, scope)?,
    })
}

fn bin(op: BinOp, a: &Expr, b: &Expr, scope: &Scope) -> Result<Value, SketchError> {
    use BinOp::*;
    match op {
        And => {
            return Ok(Value::Bool(
                eval_expr(a, scope)?.as_bool()? && eval_expr(b, scope)?.as_bool()?,
            ))
        }
        Or => {
            return Ok(Value::Bool(
                eval_expr(a, scope)?.as_bool()? || eval_expr(b, scope)?.as_bool()?,
            ))
        }
        Implies => {
            return Ok(Value::Bool(
                !eval_expr(a, scope)?.as_bool()? || eval_expr(b, scope)?.as_bool()?,
            ))
        }
        _ => {}
    }
    let x = eval_expr(a, scope)?;
    let y = eval_expr(b, scope)?;
    let overflow = || SketchError::Eval("integer overflow".into());
    Ok(match (op, x, y) {
        (Iff, _, _) => Value::Bool(x.as_bool()? == y.as_bool()?),
        (Eq, Value::Bool(p), Value::Bool(q)) => Value::Bool(p == q),
        (Ne, Value::Bool(p), Value::Bool(q)) => Value::Bool(p != q),
        (Add, Value::Int(p), Value::Int(q)) => Value::Int(p.checked_add(q).ok_or_else(overflow)?),
        (Sub, Value::Int(p), Value::Int(q)) => Value::Int(p.checked_sub(q).ok_or_else(overflow)?),
        (Mul, Value::Int(p), Value::Int(q)) => Value::Int(p.checked_mul(q).ok_or_else(overflow)?),
        (Eq, Value::Int(p), Value::Int(q)) => Value::Bool(p == q),
        (Ne, Value::Int(p), Value::Int(q)) => Value::Bool(p != q),
        (Lt, Value::Int(p), Value::Int(q)) => Value::Bool(p < q),
        (Le, Value::Int(p), Value::Int(q)) => Value::Bool(p <= q),
        (Gt, Value::Int(p), Value::Int(q)) => Value::Bool(p > q),
        (Ge, Value::Int(p), Value::Int(q)) => Value::Bool(p >= q),
        _ => {
            let p = x.as_real()?;
            let q = y.as_real()?;
            match op {
                Add => Value::Real(p + q),
                Sub => Value::Real(p - q),
                Mul => Value::Real(p * q),
                Div => {
                    if q == 0.0 {
                        return Err(SketchError::Eval("division by zero".into()));
                    }
                    Value::Real(p / q)
                }
                Eq => Value::Bool(p == q),
                Ne => Value::Bool(p != q),
                Lt => Value::Bool(p < q),
                Le => Value::Bool(p <= q),
                Gt => Value::Bool(p > q),
                Ge => Value::Bool(p >= q),
                And | Or | Implies | Iff => unreachable!("handled above"),
            }
        }
    })
}
