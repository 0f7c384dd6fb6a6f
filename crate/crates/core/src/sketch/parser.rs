use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{lex, Kw, Pos, Tok};
use super::SketchError;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

/// Parses a sketch and checks names: duplicate holes and option names,
/// undeclared variables, holes and option names.
pub fn parse(text: &str) -> Result<Program, SketchError> {
    let mut p = Parser {
        toks: lex(text)?,
        i: 0,
    };
    let prog = p.program()?;
    check_names(&prog)?;
    Ok(prog)
}

/// Parses a standalone expression (goals, property formulas).
pub fn parse_expr(text: &str) -> Result<Expr, SketchError> {
    let mut p = Parser {
        toks: lex(text)?,
        i: 0,
    };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, SketchError> {
        Err(SketchError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, SketchError> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), SketchError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        if *self.peek() == Tok::Kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, k: Kw) -> Result<(), SketchError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.unexpected(&format!("`{}`", k.as_str()))
        }
    }

    fn expect_eof(&self) -> Result<(), SketchError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn ident(&mut self) -> Result<String, SketchError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn int(&mut self) -> Result<i64, SketchError> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(if neg { -v } else { v })
            }
            _ => self.unexpected("integer"),
        }
    }

    fn program(&mut self) -> Result<Program, SketchError> {
        let mut holes = Vec::new();
        let mut constraints = Vec::new();
        let mut module = None;
        if matches!(self.peek(), Tok::Ident(w) if w == "dtmc") {
            self.advance();
        }
        loop {
            match self.peek() {
                Tok::Kw(Kw::Hole) => holes.push(self.hole_decl()?),
                Tok::Kw(Kw::Constraint) => {
                    let pos = self.pos();
                    self.advance();
                    let formula = self.expr()?;
                    self.eat_sym(";");
                    constraints.push(ConstraintDecl { formula, pos });
                }
                Tok::Kw(Kw::Module) => {
                    if module.is_some() {
                        return self.error("only one module is supported");
                    }
                    module = Some(self.module()?);
                }
                Tok::Eof => break,
                _ => return self.unexpected("`hole`, `constraint` or `module`"),
            }
        }
        match module {
            Some(module) => Ok(Program {
                holes,
                constraints,
                module,
            }),
            None => self.error("missing module"),
        }
    }

    fn hole_decl(&mut self) -> Result<HoleDecl, SketchError> {
        let pos = self.pos();
        self.expect_kw(Kw::Hole)?;
        let name = match self.advance() {
            Tok::HoleRef(n) | Tok::Ident(n) => n,
            _ => {
                self.i -= 1;
                return self.unexpected("hole name");
            }
        };
        self.expect_kw(Kw::Either)?;
        self.expect_sym("{")?;
        let mut options = Vec::new();
        loop {
            let name =
                if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Kw(Kw::Is) {
                    let n = self.ident()?;
                    self.advance();
                    Some(n)
                } else {
                    None
                };
            let expr = self.expr()?;
            let cost = if self.eat_kw(Kw::Cost) {
                match self.advance() {
                    Tok::Int(c) if c >= 0 => Some(c as u64),
                    _ => {
                        self.i -= 1;
                        return self.unexpected("natural number cost");
                    }
                }
            } else {
                None
            };
            options.push(OptionDecl { name, expr, cost });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("}")?;
        self.eat_sym(";");
        Ok(HoleDecl { name, options, pos })
    }

    fn module(&mut self) -> Result<Module, SketchError> {
        self.expect_kw(Kw::Module)?;
        let name = self.ident()?;
        let mut vars = Vec::new();
        let mut commands = Vec::new();
        loop {
            match self.peek() {
                Tok::Kw(Kw::EndModule) => {
                    self.advance();
                    break;
                }
                Tok::Eof => return self.unexpected("`endmodule`"),
                Tok::Ident(_) if *self.peek_at(1) == Tok::Sym(":") => {
                    if !commands.is_empty() {
                        return self.error("variable declarations must precede commands");
                    }
                    vars.push(self.var_decl()?);
                }
                _ => commands.push(self.command()?),
            }
        }
        Ok(Module {
            name,
            vars,
            commands,
        })
    }

    fn var_decl(&mut self) -> Result<VarDecl, SketchError> {
        let pos = self.pos();
        let name = self.ident()?;
        self.expect_sym(":")?;
        self.expect_sym("[")?;
        let lo = self.int()?;
        self.expect_sym("..")?;
        let hi = self.int()?;
        self.expect_sym("]")?;
        let init = if self.eat_kw(Kw::Init) {
            Some(self.int()?)
        } else {
            None
        };
        self.expect_sym(";")?;
        Ok(VarDecl {
            name,
            lo,
            hi,
            init,
            pos,
        })
    }

    fn command(&mut self) -> Result<Command, SketchError> {
        let pos = self.pos();
        let label = if self.eat_sym("[") {
            let l = match self.peek() {
                Tok::Ident(_) => Some(self.ident()?),
                _ => None,
            };
            self.expect_sym("]")?;
            l
        } else {
            None
        };
        let guard = self.expr()?;
        self.expect_sym("->")?;
        let mut branches = vec![self.branch()?];
        while self.eat_sym("+") {
            branches.push(self.branch()?);
        }
        // the terminating `;` may be left out before the next command
        self.eat_sym(";");
        Ok(Command {
            label,
            guard,
            branches,
            pos,
        })
    }

    fn starts_update(&self) -> bool {
        match self.peek() {
            Tok::Kw(Kw::True) => true,
            Tok::Ident(_) => *self.peek_at(1) == Tok::Sym("'"),
            Tok::Sym("(") => {
                matches!(self.peek_at(1), Tok::Ident(_)) && *self.peek_at(2) == Tok::Sym("'")
            }
            _ => false,
        }
    }

    fn branch(&mut self) -> Result<BranchDecl, SketchError> {
        let prob = if self.starts_update() {
            None
        } else {
            let p = self.additive(false)?;
            self.expect_sym(":")?;
            Some(p)
        };
        let mut updates = Vec::new();
        if !self.eat_kw(Kw::True) {
            loop {
                let paren = self.eat_sym("(");
                let var = self.ident()?;
                self.expect_sym("'")?;
                self.expect_sym("=")?;
                let expr = self.additive(true)?;
                if paren {
                    self.expect_sym(")")?;
                }
                updates.push(Update { var, expr });
                if !self.eat_sym("&") {
                    break;
                }
            }
        }
        Ok(BranchDecl { prob, updates })
    }

    /// After a `+` inside an update: does a new `prob: update` branch start?
    fn branch_follows(&self) -> bool {
        let mut k = self.i + 1;
        let mut depth = 0usize;
        while k < self.toks.len() {
            match &self.toks[k].0 {
                Tok::Sym("(") => depth += 1,
                Tok::Sym(")") => {
                    if depth == 0 {
                        return false;
                    }
                    depth -= 1;
                }
                Tok::Sym(":") => return depth == 0,
                Tok::Sym(";") | Tok::Sym("'") | Tok::Sym("&") | Tok::Sym("+") | Tok::Sym("->") => {
                    return false
                }
                Tok::Kw(Kw::EndModule) | Tok::Eof => return false,
                _ => {}
            }
            k += 1;
        }
        false
    }

    pub fn expr(&mut self) -> Result<Expr, SketchError> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Expr, SketchError> {
        let mut a = self.implies()?;
        while self.eat_sym("<=>") {
            let b = self.implies()?;
            a = Expr::bin(BinOp::Iff, a, b);
        }
        Ok(a)
    }

    fn implies(&mut self) -> Result<Expr, SketchError> {
        let a = self.or()?;
        if self.eat_sym("=>") {
            let b = self.implies()?;
            return Ok(Expr::bin(BinOp::Implies, a, b));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Expr, SketchError> {
        let mut a = self.and()?;
        while self.eat_sym("|") {
            let b = self.and()?;
            a = Expr::bin(BinOp::Or, a, b);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Expr, SketchError> {
        let mut a = self.not()?;
        while self.eat_sym("&") {
            let b = self.not()?;
            a = Expr::bin(BinOp::And, a, b);
        }
        Ok(a)
    }

    fn not(&mut self) -> Result<Expr, SketchError> {
        if self.eat_sym("!") {
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, SketchError> {
        let a = self.additive(false)?;
        let op = match self.peek() {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(a),
        };
        self.advance();
        let b = self.additive(false)?;
        Ok(Expr::bin(op, a, b))
    }

    fn additive(&mut self, in_update: bool) -> Result<Expr, SketchError> {
        let mut a = self.multiplicative()?;
        loop {
            let op = if self.is_sym("+") {
                if in_update && self.branch_follows() {
                    break;
                }
                BinOp::Add
            } else if self.is_sym("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.advance();
            let b = self.multiplicative()?;
            a = Expr::bin(op, a, b);
        }
        Ok(a)
    }

    fn multiplicative(&mut self) -> Result<Expr, SketchError> {
        let mut a = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else {
                break;
            };
            let b = self.unary()?;
            a = Expr::bin(op, a, b);
        }
        Ok(a)
    }

    fn unary(&mut self) -> Result<Expr, SketchError> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SketchError> {
        let e = match self.peek().clone() {
            Tok::Int(v) => Expr::Int(v),
            Tok::Decimal(d) => Expr::Decimal(d),
            Tok::Kw(Kw::True) => Expr::Bool(true),
            Tok::Kw(Kw::False) => Expr::Bool(false),
            Tok::Ident(v) => Expr::Var(v),
            Tok::HoleRef(h) => Expr::Hole(h),
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            _ => return self.unexpected("expression"),
        };
        self.advance();
        Ok(e)
    }
}

fn check_names(prog: &Program) -> Result<(), SketchError> {
    let mut holes = BTreeSet::new();
    let mut option_names = BTreeSet::new();
    for h in &prog.holes {
        if !holes.insert(h.name.as_str()) {
            return Err(SketchError::DuplicateHole {
                name: h.name.clone(),
                pos: h.pos,
            });
        }
        let mut labels = BTreeSet::new();
        for o in &h.options {
            if let Some(n) = &o.name {
                if !option_names.insert(n.as_str()) {
                    return Err(SketchError::DuplicateOptionName {
                        name: n.clone(),
                        pos: h.pos,
                    });
                }
            }
            if !labels.insert(o.label()) {
                return Err(SketchError::DuplicateOptionName {
                    name: o.label(),
                    pos: h.pos,
                });
            }
            if let Some(inner) = o.expr.holes().into_iter().next() {
                return Err(SketchError::Semantic {
                    pos: h.pos,
                    msg: format!("option of hole `{}` refers to hole `{inner}`", h.name),
                });
            }
        }
    }

    let mut vars = BTreeSet::new();
    for v in &prog.module.vars {
        if !vars.insert(v.name.as_str()) {
            return Err(SketchError::Semantic {
                pos: v.pos,
                msg: format!("variable `{}` declared twice", v.name),
            });
        }
        if v.lo > v.hi {
            return Err(SketchError::Semantic {
                pos: v.pos,
                msg: format!("empty range [{}..{}] for `{}`", v.lo, v.hi, v.name),
            });
        }
        if !(v.lo..=v.hi).contains(&v.initial()) {
            return Err(SketchError::Semantic {
                pos: v.pos,
                msg: format!("initial value of `{}` outside its range", v.name),
            });
        }
    }

    let known = |e: &Expr, pos: Pos| -> Result<(), SketchError> {
        if let Some(v) = e
            .variables()
            .into_iter()
            .find(|v| !vars.contains(v.as_str()))
        {
            return Err(SketchError::UnknownIdentifier { name: v, pos });
        }
        if let Some(h) = e.holes().into_iter().find(|h| !holes.contains(h.as_str())) {
            return Err(SketchError::UnknownIdentifier {
                name: format!("@{h}@"),
                pos,
            });
        }
        Ok(())
    };
    for h in &prog.holes {
        for o in &h.options {
            known(&o.expr, h.pos)?;
        }
    }
    for c in &prog.module.commands {
        known(&c.guard, c.pos)?;
        for b in &c.branches {
            if let Some(p) = &b.prob {
                known(p, c.pos)?;
            }
            let mut assigned = BTreeSet::new();
            for u in &b.updates {
                if !vars.contains(u.var.as_str()) {
                    return Err(SketchError::UnknownIdentifier {
                        name: u.var.clone(),
                        pos: c.pos,
                    });
                }
                if !assigned.insert(u.var.as_str()) {
                    return Err(SketchError::Semantic {
                        pos: c.pos,
                        msg: format!("`{}` updated twice in one branch", u.var),
                    });
                }
                known(&u.expr, c.pos)?;
            }
        }
    }
    for c in &prog.constraints {
        if let Some(v) = c
            .formula
            .variables()
            .into_iter()
            .find(|v| prog.option_named(v).is_none())
        {
            return Err(SketchError::UnknownIdentifier {
                name: v,
                pos: c.pos,
            });
        }
        if let Some(h) = c
            .formula
            .holes()
            .into_iter()
            .find(|h| !holes.contains(h.as_str()))
        {
            return Err(SketchError::UnknownIdentifier {
                name: format!("@{h}@"),
                pos: c.pos,
            });
        }
    }
    Ok(())
}
