use std::collections::BTreeSet;
use std::fmt;

use super::lexer::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Iff,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Implies => "=>",
            BinOp::Iff => "<=>",
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Iff => 1,
            BinOp::Implies => 2,
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 6,
            BinOp::Add | BinOp::Sub => 7,
            BinOp::Mul | BinOp::Div => 8,
        }
    }
}

const PREC_NOT: u8 = 5;
const PREC_NEG: u8 = 9;
const PREC_ATOM: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    /// Decimal literal as written.
    Decimal(String),
    Bool(bool),
    Var(String),
    Hole(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(op, ..) => op.prec(),
            Expr::Not(_) => PREC_NOT,
            Expr::Neg(_) => PREC_NEG,
            Expr::Int(i) if *i < 0 => PREC_NEG,
            _ => PREC_ATOM,
        }
    }

    pub fn holes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Hole(h) = e {
                out.insert(h.clone());
            }
        });
        out
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                out.insert(v.clone());
            }
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Not(a) => a.walk(f),
            Expr::Bin(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Decimal(d) => write!(f, "{d}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Hole(h) => write!(f, "@{h}@"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.prec() < PREC_ATOM)
            }
            Expr::Not(a) => {
                write!(f, "!")?;
                wrap(f, a, a.prec() < PREC_NEG)
            }
            Expr::Bin(op, a, b) => {
                let p = op.prec();
                let right_assoc = *op == BinOp::Implies;
                let cmp = p == 6;
                let left_paren = a.prec() < p || (a.prec() == p && (right_assoc || cmp));
                let right_paren = b.prec() < p || (b.prec() == p && (!right_assoc || cmp));
                wrap(f, a, left_paren)?;
                write!(f, " {} ", op.symbol())?;
                wrap(f, b, right_paren)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionDecl {
    pub name: Option<String>,
    pub expr: Expr,
    pub cost: Option<u64>,
}

impl OptionDecl {
    /// Label used in realisations: the option name, else the expression.
    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => self.expr.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleDecl {
    pub name: String,
    pub options: Vec<OptionDecl>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDecl {
    pub formula: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub init: Option<i64>,
    pub pos: Pos,
}

impl VarDecl {
    pub fn initial(&self) -> i64 {
        self.init.unwrap_or(self.lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub var: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchDecl {
    /// `None` for a branch written without a probability.
    pub prob: Option<Expr>,
    /// Empty for `true`.
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub label: Option<String>,
    pub guard: Expr,
    pub branches: Vec<BranchDecl>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub name: String,
    pub vars: Vec<VarDecl>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub holes: Vec<HoleDecl>,
    pub constraints: Vec<ConstraintDecl>,
    pub module: Module,
}

impl Program {
    pub fn hole(&self, name: &str) -> Option<(usize, &HoleDecl)> {
        self.holes.iter().enumerate().find(|(_, h)| h.name == name)
    }

    /// Hole and option index of a named option.
    pub fn option_named(&self, name: &str) -> Option<(usize, usize)> {
        self.holes.iter().enumerate().find_map(|(h, decl)| {
            decl.options
                .iter()
                .position(|o| o.name.as_deref() == Some(name))
                .map(|o| (h, o))
        })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.holes {
            write!(f, "hole @{}@ either {{ ", h.name)?;
            for (i, o) in h.options.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                if let Some(n) = &o.name {
                    write!(f, "{n} is ")?;
                }
                write!(f, "{}", o.expr)?;
                if let Some(c) = o.cost {
                    write!(f, " cost {c}")?;
                }
            }
            writeln!(f, " }}")?;
        }
        for c in &self.constraints {
            writeln!(f, "constraint {}", c.formula)?;
        }
        if !self.holes.is_empty() || !self.constraints.is_empty() {
            writeln!(f)?;
        }
        writeln!(f, "module {}", self.module.name)?;
        for v in &self.module.vars {
            write!(f, "  {} : [{}..{}]", v.name, v.lo, v.hi)?;
            if let Some(i) = v.init {
                write!(f, " init {i}")?;
            }
            writeln!(f, ";")?;
        }
        for c in &self.module.commands {
            write!(f, "  ")?;
            if let Some(l) = &c.label {
                write!(f, "[{l}] ")?;
            }
            write!(f, "{} -> ", c.guard)?;
            for (i, b) in c.branches.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                if let Some(p) = &b.prob {
                    write!(f, "{p}: ")?;
                }
                if b.updates.is_empty() {
                    write!(f, "true")?;
                }
                for (j, u) in b.updates.iter().enumerate() {
                    if j > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{}'={}", u.var, u.expr)?;
                }
            }
            writeln!(f, ";")?;
        }
        writeln!(f, "endmodule")
    }
}
