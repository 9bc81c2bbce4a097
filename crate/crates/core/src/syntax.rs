//! Tokenizer and expression parser shared by the `.bip`, invariant and OLP
//! front ends.

use std::fmt;

use crate::expr::{BinOp, Expr, UnOp};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(i64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

// Longest first, so that `:=` wins over `:` and so on.
const PUNCT: &[&str] = &[
    ":=", "==", "!=", "<=", ">=", "&&", "||", "->", "{", "}", "(", ")", "[", "]", ";", ",", ":",
    "=", "<", ">", "+", "-", "*", "!", "?", "@", ".",
];

/// Split `src` into tokens. `//`, `#` and `/* */` comments are skipped.
pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize, chars: &[char]| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1, &chars);
        } else if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col, 2, &chars);
            loop {
                if i + 1 >= chars.len() {
                    return Err(SyntaxError {
                        pos,
                        message: "unterminated comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2, &chars);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| SyntaxError {
                pos,
                message: format!("integer literal `{text}` too large"),
            })?;
            out.push((Tok::Num(n), pos));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else {
            let p = PUNCT.iter().find(|p| {
                p.chars()
                    .enumerate()
                    .all(|(k, pc)| chars.get(i + k) == Some(&pc))
            });
            match p {
                Some(p) => {
                    advance(&mut i, &mut line, &mut col, p.len(), &chars);
                    out.push((Tok::Punct(p), pos));
                }
                None => {
                    return Err(SyntaxError {
                        pos,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// A cursor over a token stream with the usual expect/accept helpers.
pub struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    /// Accept `a -> b` as sugar for `!a || b`.
    pub implication: bool,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Cursor {
            toks: tokenize(src)?,
            at: 0,
            implication: false,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos: self.pos(),
            message: message.into(),
        })
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn accept_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn accept_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.accept_punct(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.peek()))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.accept_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.error(format!("expected identifier, found {t}")),
        }
    }

    pub fn expect_num(&mut self) -> Result<i64, SyntaxError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            t => self.error(format!("expected number, found {t}")),
        }
    }

    /// Optionally signed integer literal.
    pub fn expect_int(&mut self) -> Result<i64, SyntaxError> {
        if self.accept_punct("-") {
            Ok(-self.expect_num()?)
        } else {
            self.expect_num()
        }
    }

    /// Parse an expression; `atom` parses a variable reference starting at
    /// an identifier (or `@`-style construct) and returns the finished node.
    pub fn expr<V>(
        &mut self,
        atom: &mut dyn FnMut(&mut Cursor) -> Result<Expr<V>, SyntaxError>,
    ) -> Result<Expr<V>, SyntaxError> {
        let cond = self.implies(atom)?;
        if self.accept_punct("?") {
            let t = self.expr(atom)?;
            self.expect_punct(":")?;
            let e = self.expr(atom)?;
            Ok(Expr::ite(cond, t, e))
        } else {
            Ok(cond)
        }
    }

    fn implies<V>(
        &mut self,
        atom: &mut dyn FnMut(&mut Cursor) -> Result<Expr<V>, SyntaxError>,
    ) -> Result<Expr<V>, SyntaxError> {
        let lhs = self.binary(0, atom)?;
        if self.implication && self.accept_punct("->") {
            let rhs = self.implies(atom)?;
            Ok(Expr::bin(BinOp::Or, Expr::not(lhs), rhs))
        } else {
            Ok(lhs)
        }
    }

    fn binary<V>(
        &mut self,
        level: usize,
        atom: &mut dyn FnMut(&mut Cursor) -> Result<Expr<V>, SyntaxError>,
    ) -> Result<Expr<V>, SyntaxError> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[
                ("<=", BinOp::Le),
                (">=", BinOp::Ge),
                ("<", BinOp::Lt),
                (">", BinOp::Gt),
            ],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul)],
        ];
        if level == LEVELS.len() {
            return self.unary(atom);
        }
        let mut lhs = self.binary(level + 1, atom)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.accept_punct(sym) {
                    let rhs = self.binary(level + 1, atom)?;
                    lhs = Expr::bin(*op, lhs, rhs);
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary<V>(
        &mut self,
        atom: &mut dyn FnMut(&mut Cursor) -> Result<Expr<V>, SyntaxError>,
    ) -> Result<Expr<V>, SyntaxError> {
        if self.accept_punct("!") {
            return Ok(Expr::not(self.unary(atom)?));
        }
        if self.accept_punct("-") {
            if let Tok::Num(n) = *self.peek() {
                self.bump();
                return Ok(Expr::Int(-n));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary(atom)?)));
        }
        self.primary(atom)
    }

    fn primary<V>(
        &mut self,
        atom: &mut dyn FnMut(&mut Cursor) -> Result<Expr<V>, SyntaxError>,
    ) -> Result<Expr<V>, SyntaxError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr(atom)?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => atom(self),
            t => self.error(format!("expected expression, found {t}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Expr<String> {
        let mut c = Cursor::new(src).unwrap();
        c.implication = true;
        let e = c
            .expr(&mut |c: &mut Cursor| Ok(Expr::Var(c.expect_ident()?)))
            .unwrap();
        assert!(c.at_eof());
        e
    }

    #[test]
    fn precedence() {
        assert_eq!(
            parse("a || b && c == d + e * f").to_string(),
            "a || (b && (c == (d + (e * f))))"
        );
        assert_eq!(parse("c ? 1 : d ? 2 : 3").to_string(), "c ? 1 : d ? 2 : 3");
        assert_eq!(parse("a -> b").to_string(), "!a || b");
        assert_eq!(parse("x - -1").to_string(), "x - -1");
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("a // x\n/* y\n */ b # z\n:=").unwrap();
        assert_eq!(toks[1].1, Pos { line: 3, col: 5 });
        assert_eq!(toks[2].0, Tok::Punct(":="));
    }
}
