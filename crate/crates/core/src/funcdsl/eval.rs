use alloc::string::String;
use core::fmt::Write;

use super::{BinaryOp, Condition, Constant, Expr, Func, FunctionDef, Operand};

pub(super) fn eval_def(def: &FunctionDef, x: f64) -> Option<f64> {
    match def {
        FunctionDef::Expr(e) => eval_expr(e, x),
        FunctionDef::Piecewise(branches) => {
            branches.iter().find(|b| b.condition.holds(x)).and_then(|b| eval_expr(&b.expr, x))
        }
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub(crate) fn eval_expr(e: &Expr, x: f64) -> Option<f64> {
    match e {
        Expr::Number(v) => finite(*v),
        Expr::X => finite(x),
        Expr::Const(c) => Some(c.value()),
        Expr::Neg(inner) => eval_expr(inner, x).map(|v| -v),
        Expr::Binary(op, l, r) => {
            let (a, b) = (eval_expr(l, x)?, eval_expr(r, x)?);
            binary(*op, a, b)
        }
        Expr::Call(func, args) => {
            let a = eval_expr(&args[0], x)?;
            let b = match args.get(1) {
                Some(arg) => Some(eval_expr(arg, x)?),
                None => None,
            };
            call(*func, a, b)
        }
    }
}

fn binary(op: BinaryOp, a: f64, b: f64) -> Option<f64> {
    match op {
        BinaryOp::Add => finite(a + b),
        BinaryOp::Sub => finite(a - b),
        BinaryOp::Mul => finite(a * b),
        BinaryOp::Div if b == 0.0 => None,
        BinaryOp::Div => finite(a / b),
        BinaryOp::Pow => {
            if a < 0.0 && libm::trunc(b) != b {
                return None;
            }
            if a == 0.0 && b < 0.0 {
                return None;
            }
            finite(libm::pow(a, b))
        }
    }
}

fn call(func: Func, a: f64, b: Option<f64>) -> Option<f64> {
    let v = match func {
        Func::Sin => libm::sin(a),
        Func::Cos => libm::cos(a),
        Func::Tan => libm::tan(a),
        Func::Exp => libm::exp(a),
        Func::Log if a <= 0.0 => return None,
        Func::Log => libm::log(a),
        Func::Sqrt if a < 0.0 => return None,
        Func::Sqrt => libm::sqrt(a),
        Func::Abs => libm::fabs(a),
        Func::Sign => {
            if a > 0.0 {
                1.0
            } else if a < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Func::Min => libm::fmin(a, b?),
        Func::Max => libm::fmax(a, b?),
    };
    finite(v)
}

pub(super) fn render_def(def: &FunctionDef) -> String {
    let mut out = String::new();
    match def {
        FunctionDef::Expr(e) => render_expr(e, &mut out),
        FunctionDef::Piecewise(branches) => {
            out.push_str("piecewise{ ");
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" ; ");
                }
                render_condition(&b.condition, &mut out);
                out.push_str(" : ");
                render_expr(&b.expr, &mut out);
            }
            out.push_str(" }");
        }
    }
    out
}

fn constant_name(c: Constant) -> &'static str {
    match c {
        Constant::Pi => "pi",
        Constant::E => "e",
    }
}

fn render_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Number(v) => {
            let _ = write!(out, "{v:?}");
        }
        Expr::X => out.push('x'),
        Expr::Const(c) => out.push_str(constant_name(*c)),
        Expr::Neg(inner) => {
            out.push_str("(-");
            render_expr(inner, out);
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            out.push('(');
            render_expr(l, out);
            let _ = write!(out, " {} ", op.symbol());
            render_expr(r, out);
            out.push(')');
        }
        Expr::Call(func, args) => {
            out.push_str(func.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_expr(a, out);
            }
            out.push(')');
        }
    }
}

fn render_operand(o: Operand, out: &mut String) {
    match o {
        Operand::X => out.push('x'),
        Operand::Number(v) => {
            let _ = write!(out, "{v:?}");
        }
        Operand::Const(c) => out.push_str(constant_name(c)),
        Operand::Neg(c) => {
            out.push('-');
            out.push_str(constant_name(c));
        }
    }
}

/// Chains are not re-formed: `a < x <= b` renders as `a < x and x <= b`,
/// which parses back to the same comparison list.
fn render_condition(c: &Condition, out: &mut String) {
    for (i, cmp) in c.comparisons.iter().enumerate() {
        if i > 0 {
            out.push_str(" and ");
        }
        render_operand(cmp.lhs, out);
        let _ = write!(out, " {} ", cmp.op.symbol());
        render_operand(cmp.rhs, out);
    }
}
