use std::fmt;

use super::SketchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    HoleRef(String),
    Int(i64),
    /// Decimal literal, kept as written.
    Decimal(String),
    Kw(Kw),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Hole,
    Either,
    Is,
    Cost,
    Constraint,
    Module,
    EndModule,
    Init,
    True,
    False,
}

impl Kw {
    fn from_word(w: &str) -> Option<Kw> {
        Some(match w {
            "hole" => Kw::Hole,
            "either" => Kw::Either,
            "is" => Kw::Is,
            "cost" => Kw::Cost,
            "constraint" => Kw::Constraint,
            "module" => Kw::Module,
            "endmodule" => Kw::EndModule,
            "init" => Kw::Init,
            "true" => Kw::True,
            "false" => Kw::False,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kw::Hole => "hole",
            Kw::Either => "either",
            Kw::Is => "is",
            Kw::Cost => "cost",
            Kw::Constraint => "constraint",
            Kw::Module => "module",
            Kw::EndModule => "endmodule",
            Kw::Init => "init",
            Kw::True => "true",
            Kw::False => "false",
        }
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::HoleRef(s) => write!(f, "`@{s}@`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Decimal(d) => write!(f, "`{d}`"),
            Tok::Kw(k) => write!(f, "`{}`", k.as_str()),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

// longest first
const SYMBOLS: &[&str] = &[
    "<=>", "->", "=>", "<=", ">=", "!=", "..", "(", ")", "[", "]", "{", "}", ",", ";", ":", "'",
    "=", "<", ">", "+", "-", "*", "/", "&", "|", "!",
];

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, SketchError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let bump = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                {
                    let ch = chars[i];
                    bump(&mut i, &mut line, &mut col, ch);
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                {
                    let ch = chars[i];
                    bump(&mut i, &mut line, &mut col, ch);
                }
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match Kw::from_word(&word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        if c == '@' {
            bump(&mut i, &mut line, &mut col, c);
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                {
                    let ch = chars[i];
                    bump(&mut i, &mut line, &mut col, ch);
                }
            }
            if i == start || chars.get(i) != Some(&'@') {
                return Err(SketchError::Lex {
                    pos,
                    msg: "hole reference must look like @name@".into(),
                });
            }
            let name: String = chars[start..i].iter().collect();
            bump(&mut i, &mut line, &mut col, '@');
            out.push((Tok::HoleRef(name), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                {
                    let ch = chars[i];
                    bump(&mut i, &mut line, &mut col, ch);
                }
            }
            // `0..4` is a range, not a decimal
            let is_decimal =
                chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
            if is_decimal {
                bump(&mut i, &mut line, &mut col, '.');
                while i < chars.len() && chars[i].is_ascii_digit() {
                    {
                        let ch = chars[i];
                        bump(&mut i, &mut line, &mut col, ch);
                    }
                }
                if matches!(chars.get(i), Some('e') | Some('E')) {
                    let save = (i, line, col);
                    bump(&mut i, &mut line, &mut col, 'e');
                    if matches!(chars.get(i), Some('+') | Some('-')) {
                        {
                            let ch = chars[i];
                            bump(&mut i, &mut line, &mut col, ch);
                        }
                    }
                    if chars.get(i).is_some_and(|d| d.is_ascii_digit()) {
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            {
                                let ch = chars[i];
                                bump(&mut i, &mut line, &mut col, ch);
                            }
                        }
                    } else {
                        (i, line, col) = save;
                    }
                }
                out.push((Tok::Decimal(chars[start..i].iter().collect()), pos));
            } else {
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<i64>().map_err(|_| SketchError::Lex {
                    pos,
                    msg: format!("integer literal {text} out of range"),
                })?;
                out.push((Tok::Int(v), pos));
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                for ch in sym.chars() {
                    bump(&mut i, &mut line, &mut col, ch);
                }
                out.push((Tok::Sym(sym), pos));
            }
            None => {
                return Err(SketchError::Lex {
                    pos,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
