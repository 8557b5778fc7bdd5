use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{BinaryOp, Branch, CmpOp, Comparison, Condition, Constant, Expr, Func, FunctionDef, Operand};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 0-based byte offset of the offending token.
    pub position: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: expected ", self.position)?;
        for (i, e) in self.expected.iter().enumerate() {
            if i > 0 {
                f.write_str(if i + 1 == self.expected.len() { " or " } else { ", " })?;
            }
            write!(f, "`{e}`")?;
        }
        write!(f, ", found {}", self.found)
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Colon,
    Semi,
    Comma,
    Cmp(CmpOp),
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => alloc::format!("number {v}"),
            Tok::Ident(s) => alloc::format!("`{s}`"),
            Tok::Cmp(op) => alloc::format!("`{}`", op.symbol()),
            Tok::End => "end of input".to_owned(),
            other => alloc::format!("`{}`", punct(other)),
        }
    }
}

fn punct(t: &Tok<'_>) -> &'static str {
    match t {
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Caret => "^",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Colon => ":",
        Tok::Semi => ";",
        Tok::Comma => ",",
        _ => "?",
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok<'_>)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = |next: u8| bytes.get(i + 1) == Some(&next);
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'{' => Tok::LBrace,
            b'}' => Tok::RBrace,
            b':' => Tok::Colon,
            b';' => Tok::Semi,
            b',' => Tok::Comma,
            b'<' if two(b'=') => Tok::Cmp(CmpOp::Le),
            b'<' => Tok::Cmp(CmpOp::Lt),
            b'>' if two(b'=') => Tok::Cmp(CmpOp::Ge),
            b'>' => Tok::Cmp(CmpOp::Gt),
            b'=' if two(b'=') => Tok::Cmp(CmpOp::Eq),
            b'!' if two(b'=') => Tok::Cmp(CmpOp::Ne),
            b'0'..=b'9' | b'.' => {
                let end = number_end(bytes, i);
                let lexeme = &text[i..end];
                let value: f64 = lexeme.parse().map_err(|_| ParseError {
                    position: start,
                    expected: vec!["number"],
                    found: alloc::format!("`{lexeme}`"),
                })?;
                i = end;
                out.push((start, Tok::Num(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = i;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                out.push((start, Tok::Ident(&text[i..end])));
                i = end;
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    position: start,
                    expected: vec!["token"],
                    found: alloc::format!("`{ch}`"),
                });
            }
        };
        i += match tok {
            Tok::Cmp(CmpOp::Le | CmpOp::Ge | CmpOp::Eq | CmpOp::Ne) => 2,
            _ => 1,
        };
        out.push((start, tok));
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

/// digits [ "." digits ] [ ("e" | "E") [sign] digits ]; the exponent is only
/// consumed when digits follow, so `2e` lexes as `2` then `e`.
fn number_end(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i < b.len() && b[i] == b'.' {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
}

const ATOM_START: &[&str] = &["number", "x", "pi", "e", "function", "(", "-"];
const OPERAND_START: &[&str] = &["number", "x", "pi", "e", "-"];

impl<'a> Parser<'a> {
    fn peek(&self) -> Tok<'a> {
        self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok<'a> {
        let t = self.peek();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError { position: self.offset(), expected: expected.to_vec(), found: self.peek().describe() }
    }

    fn expect(&mut self, tok: Tok<'static>, name: &'static str) -> Result<(), ParseError> {
        if self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn def(&mut self) -> Result<FunctionDef, ParseError> {
        let def = if self.peek() == Tok::Ident("piecewise") {
            self.bump();
            FunctionDef::Piecewise(self.piecewise()?)
        } else {
            FunctionDef::Expr(self.expr()?)
        };
        if self.peek() != Tok::End {
            let expected: &[&str] = match def {
                FunctionDef::Expr(_) => &["+", "-", "*", "/", "^", "end of input"],
                FunctionDef::Piecewise(_) => &["end of input"],
            };
            return Err(self.error(expected));
        }
        Ok(def)
    }

    fn piecewise(&mut self) -> Result<Vec<Branch>, ParseError> {
        self.expect(Tok::LBrace, "{")?;
        let mut branches = vec![self.branch()?];
        loop {
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                    branches.push(self.branch()?);
                }
                Tok::RBrace => {
                    self.bump();
                    return Ok(branches);
                }
                _ => return Err(self.error(&[";", "}"])),
            }
        }
    }

    fn branch(&mut self) -> Result<Branch, ParseError> {
        let condition = self.condition()?;
        self.expect(Tok::Colon, ":")?;
        Ok(Branch { condition, expr: self.expr()? })
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let mut comparisons = Vec::new();
        loop {
            let mut lhs = self.operand()?;
            let Tok::Cmp(_) = self.peek() else {
                return Err(self.error(&["<", "<=", ">", ">=", "==", "!="]));
            };
            while let Tok::Cmp(op) = self.peek() {
                self.bump();
                let rhs = self.operand()?;
                comparisons.push(Comparison { lhs, op, rhs });
                lhs = rhs;
            }
            if self.peek() == Tok::Ident("and") {
                self.bump();
            } else {
                return Ok(Condition { comparisons });
            }
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek() {
            Tok::Ident("x") => {
                self.bump();
                Ok(Operand::X)
            }
            Tok::Ident("pi") => {
                self.bump();
                Ok(Operand::Const(Constant::Pi))
            }
            Tok::Ident("e") => {
                self.bump();
                Ok(Operand::Const(Constant::E))
            }
            Tok::Num(v) => {
                self.bump();
                Ok(Operand::Number(v))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Num(v) => Ok(Operand::Number(-v)),
                    Tok::Ident("pi") => Ok(Operand::Neg(Constant::Pi)),
                    Tok::Ident("e") => Ok(Operand::Neg(Constant::E)),
                    _ => {
                        self.pos -= 1;
                        Err(self.error(&["number", "pi", "e"]))
                    }
                }
            }
            _ => Err(self.error(OPERAND_START)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Number(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, ")")?;
                Ok(e)
            }
            Tok::Ident("x") => {
                self.bump();
                Ok(Expr::X)
            }
            Tok::Ident("pi") => {
                self.bump();
                Ok(Expr::Const(Constant::Pi))
            }
            Tok::Ident("e") => {
                self.bump();
                Ok(Expr::Const(Constant::E))
            }
            Tok::Ident(name) => match Func::from_name(name) {
                Some(func) => {
                    self.bump();
                    self.expect(Tok::LParen, "(")?;
                    let mut args = vec![self.expr()?];
                    while args.len() < func.arity() {
                        self.expect(Tok::Comma, ",")?;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, ")")?;
                    Ok(Expr::Call(func, args))
                }
                None => Err(self.error(ATOM_START)),
            },
            _ => Err(self.error(ATOM_START)),
        }
    }
}

/// Parses a single function definition.
pub fn parse(text: &str) -> Result<FunctionDef, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.def()
}
