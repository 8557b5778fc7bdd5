//! Number and verdict formatting shared by the three output formats.

use gauge_core::{ConvergenceVerdict, Sign};
use serde_json::{json, Map, Value};

const EXACT_INT: f64 = 9_007_199_254_740_992.0;

fn integral(x: f64) -> Option<i64> {
    (x.is_finite() && x.fract() == 0.0 && x.abs() < EXACT_INT).then_some(x as i64)
}

/// Integral values print as integers, other finite values in shortest
/// round-trip form, non-finite values as `null`.
pub fn num(x: f64) -> Value {
    match integral(x) {
        Some(i) => Value::from(i),
        None if x.is_finite() => Value::from(x),
        None => Value::Null,
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn csv_num(x: f64) -> String {
    match integral(x) {
        Some(i) => i.to_string(),
        None if x.is_finite() => format!("{x:?}"),
        None => String::new(),
    }
}

/// `%g` with six significant digits.
pub fn g6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-4..6).contains(&exp) {
        let fixed = format!("{x:.*}", (5 - exp) as usize);
        trim_fraction(&fixed).to_owned()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Positive => "+",
        Sign::Negative => "-",
    }
}

pub fn verdict_json(v: &ConvergenceVerdict) -> Value {
    match v {
        ConvergenceVerdict::Converged { value, error_estimate, depth, accelerated } => json!({
            "kind": "converged",
            "value": num(*value),
            "error_estimate": num(*error_estimate),
            "depth": depth,
            "accelerated": accelerated,
        }),
        ConvergenceVerdict::Diverged { sign, depth } => json!({
            "kind": "diverged",
            "sign": sign_name(*sign),
            "depth": depth,
        }),
        ConvergenceVerdict::Inconclusive { trace, diagnostic } => {
            let mut obj = Map::new();
            obj.insert("kind".into(), "inconclusive".into());
            obj.insert("diagnostic".into(), diagnostic.clone().map_or(Value::Null, Value::from));
            obj.insert("depths".into(), Value::from(trace.len()));
            obj.insert("last".into(), opt_num(trace.last().map(|t| t.value)));
            Value::Object(obj)
        }
    }
}

/// `kind,value,depth` cells.
pub fn verdict_cells(v: &ConvergenceVerdict) -> [String; 3] {
    match v {
        ConvergenceVerdict::Converged { value, depth, .. } => ["converged".into(), csv_num(*value), depth.to_string()],
        ConvergenceVerdict::Diverged { sign, depth } => {
            ["diverged".into(), format!("{}inf", sign_name(*sign)), depth.to_string()]
        }
        ConvergenceVerdict::Inconclusive { .. } => ["inconclusive".into(), String::new(), String::new()],
    }
}

pub fn verdict_text(v: &ConvergenceVerdict) -> String {
    match v {
        ConvergenceVerdict::Converged { value, error_estimate, depth, accelerated } => {
            let how = if *accelerated { ", accelerated" } else { "" };
            format!("converged to {} (± {}, depth {depth}{how})", g6(*value), g6(*error_estimate))
        }
        ConvergenceVerdict::Diverged { sign, depth } => format!("diverges to {}∞ (depth {depth})", sign_name(*sign)),
        ConvergenceVerdict::Inconclusive { trace, diagnostic } => {
            let last = trace.last().map_or(String::from("none"), |t| g6(t.value));
            match diagnostic {
                Some(d) => format!("inconclusive after {} depths, last {last}: {d}", trace.len()),
                None => format!("inconclusive after {} depths, last {last}", trace.len()),
            }
        }
    }
}

pub fn csv_line(cells: &[String]) -> String {
    let quoted: Vec<String> = cells
        .iter()
        .map(|c| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect();
    quoted.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_numbers_print_without_fraction() {
        assert_eq!(num(1.0).to_string(), "1");
        assert_eq!(num(-0.0).to_string(), "0");
        assert_eq!(num(0.25).to_string(), "0.25");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(csv_num(1e-300), "1e-300");
        assert_eq!(csv_num(3.0), "3");
    }

    #[test]
    fn percent_g() {
        assert_eq!(g6(1.0), "1");
        assert_eq!(g6(1.682941969615793), "1.68294");
        assert_eq!(g6(123456.7), "123457");
        assert_eq!(g6(1234567.0), "1.23457e+06");
        assert_eq!(g6(0.0001), "0.0001");
        assert_eq!(g6(0.00001234), "1.234e-05");
        assert_eq!(g6(-2.5e-9), "-2.5e-09");
        assert_eq!(g6(999999.5), "1e+06");
    }
}
