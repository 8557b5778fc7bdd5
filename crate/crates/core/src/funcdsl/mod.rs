//! A small language for real functions of `x`, with piecewise definitions.
//!
//! ```text
//! def       := expr | piecewise
//! piecewise := "piecewise" "{" branch (";" branch)* "}"
//! branch    := cond ":" expr
//! cond      := chain ("and" chain)*
//! chain     := operand (cmp operand)+          e.g. 0 < x <= 1
//! cmp       := "<" | "<=" | ">" | ">=" | "==" | "!="
//! expr      := term (("+" | "-") term)*
//! term      := unary (("*" | "/") unary)*
//! unary     := "-" unary | power
//! power     := atom ("^" unary)?               right-associative
//! atom      := number | "x" | "pi" | "e" | call | "(" expr ")"
//! ```
//!
//! Branches are tried in order and the first matching one wins.

mod catalog;
mod eval;
mod parser;

use alloc::boxed::Box;
use alloc::vec::Vec;

pub use catalog::{catalog, catalog_entry, CatalogEntry, Oracle, UnknownCatalogName, CATALOG_NAMES};
pub use parser::{parse, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 10] =
        [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt, Func::Abs, Func::Sign, Func::Min, Func::Max];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => core::f64::consts::PI,
            Constant::E => core::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Non-negative finite literal; signs are [`Expr::Neg`].
    Number(f64),
    X,
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

/// Comparison operand: the variable or a (possibly negated) literal/constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operand {
    X,
    Number(f64),
    Const(Constant),
    Neg(Constant),
}

impl Operand {
    fn value(self, x: f64) -> f64 {
        match self {
            Operand::X => x,
            Operand::Number(v) => v,
            Operand::Const(c) => c.value(),
            Operand::Neg(c) => -c.value(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

/// Conjunction of comparisons; a chain `a < x <= b` becomes two entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub comparisons: Vec<Comparison>,
}

impl Condition {
    pub fn holds(&self, x: f64) -> bool {
        self.comparisons.iter().all(|c| c.op.holds(c.lhs.value(x), c.rhs.value(x)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub condition: Condition,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionDef {
    Expr(Expr),
    Piecewise(Vec<Branch>),
}

impl FunctionDef {
    /// `None` means undefined: a domain error, division by zero, overflow, or
    /// no matching branch.
    pub fn eval(&self, x: f64) -> Option<f64> {
        eval::eval_def(self, x)
    }

    /// Canonical text; [`parse`] of the result yields an identical tree.
    pub fn render(&self) -> alloc::string::String {
        eval::render_def(self)
    }
}

impl crate::model::RealFunction for FunctionDef {
    fn eval(&self, x: f64) -> Option<f64> {
        FunctionDef::eval(self, x)
    }
}
