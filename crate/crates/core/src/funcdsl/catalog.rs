use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

use super::parse;
use crate::model::SingularFunctionModel;
use crate::partition::Interval;
use crate::verdict::Sign;

/// Closed-form value of one limit process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Value(f64),
    Diverges(Sign),
    /// Bounded but without a limit.
    Oscillates,
}

impl Oracle {
    pub fn value(self) -> Option<f64> {
        match self {
            Oracle::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// A built-in model together with its analytic decomposition
/// `ℑ = A + ℜ` and the per-point residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub primitive: &'static str,
    pub derivative: &'static str,
    pub exceptional: &'static [f64],
    pub span: (f64, f64),
    pub total: f64,
    pub kh: Oracle,
    pub basic_sum: Oracle,
    pub residuals: &'static [Oracle],
    pub description: &'static str,
}

impl CatalogEntry {
    pub fn model(&self) -> SingularFunctionModel {
        let primitive = parse(self.primitive).expect("catalog primitive parses");
        let derivative = parse(self.derivative).expect("catalog derivative parses");
        let span = Interval::new(self.span.0, self.span.1).expect("catalog span is valid");
        SingularFunctionModel::new(
            Arc::new(primitive),
            Arc::new(derivative),
            self.exceptional,
            span,
            format!("catalog:{}", self.name),
        )
        .expect("catalog exceptional set is interior")
    }
}

const TWO_SIN_ONE: f64 = 1.682941969615793;

static ENTRIES: [CatalogEntry; 7] = [
    CatalogEntry {
        name: "heaviside",
        primitive: "piecewise{ x <= 0 : 0 ; 0 < x : 1 }",
        derivative: "0",
        exceptional: &[0.0],
        span: (-1.0, 1.0),
        total: 1.0,
        kh: Oracle::Value(0.0),
        basic_sum: Oracle::Value(1.0),
        residuals: &[Oracle::Value(1.0)],
        description: "unit step; the whole integral is carried by the jump",
    },
    CatalogEntry {
        name: "reciprocal",
        primitive: "1/x",
        derivative: "-1/x^2",
        exceptional: &[0.0],
        span: (-1.0, 2.0),
        total: 1.5,
        kh: Oracle::Diverges(Sign::Negative),
        basic_sum: Oracle::Diverges(Sign::Positive),
        residuals: &[Oracle::Diverges(Sign::Positive)],
        description: "pole at 0; total is (a - b)/(ab) while f is not integrable",
    },
    CatalogEntry {
        name: "sqrt_singular",
        primitive: "sign(x)*sqrt(abs(x))",
        derivative: "1/(2*sqrt(abs(x)))",
        exceptional: &[0.0],
        span: (-1.0, 1.0),
        total: 2.0,
        kh: Oracle::Value(2.0),
        basic_sum: Oracle::Value(0.0),
        residuals: &[Oracle::Value(0.0)],
        description: "integrable blow-up of f with continuous F",
    },
    CatalogEntry {
        name: "parabola",
        primitive: "x^2",
        derivative: "2*x",
        exceptional: &[0.5],
        span: (0.0, 1.0),
        total: 1.0,
        kh: Oracle::Value(1.0),
        basic_sum: Oracle::Value(0.0),
        residuals: &[Oracle::Value(0.0)],
        description: "smooth control with a removable exceptional point",
    },
    CatalogEntry {
        name: "staircase3",
        primitive: "piecewise{ x < 0.5 : 0 ; x < 1.5 : 0.5 ; x < 2.5 : 1.5 ; x <= 3 : 1.25 }",
        derivative: "0",
        exceptional: &[0.5, 1.5, 2.5],
        span: (0.0, 3.0),
        total: 1.25,
        kh: Oracle::Value(0.0),
        basic_sum: Oracle::Value(1.25),
        residuals: &[Oracle::Value(0.5), Oracle::Value(1.0), Oracle::Value(-0.25)],
        description: "locally constant with jumps 0.5, 1, -0.25",
    },
    CatalogEntry {
        name: "osc_sin_inv",
        primitive: "sin(1/x)",
        derivative: "-cos(1/x)/x^2",
        exceptional: &[0.0],
        span: (-1.0, 1.0),
        total: TWO_SIN_ONE,
        kh: Oracle::Oscillates,
        basic_sum: Oracle::Oscillates,
        residuals: &[Oracle::Oscillates],
        description: "essential oscillation; s_n = 2 sin(1/r_n) has no limit",
    },
    CatalogEntry {
        name: "jump_linear",
        primitive: "piecewise{ x < 1 : x ; x > 1 : x + 2 }",
        derivative: "1",
        exceptional: &[1.0],
        span: (0.0, 2.0),
        total: 4.0,
        kh: Oracle::Value(2.0),
        basic_sum: Oracle::Value(2.0),
        residuals: &[Oracle::Value(2.0)],
        description: "linear with a jump of 2 at 1",
    },
];

pub const CATALOG_NAMES: [&str; 7] =
    ["heaviside", "reciprocal", "sqrt_singular", "parabola", "staircase3", "osc_sin_inv", "jump_linear"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownCatalogName(pub String);

impl fmt::Display for UnknownCatalogName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown catalog function `{}` (known: {})", self.0, CATALOG_NAMES.join(", "))
    }
}

impl core::error::Error for UnknownCatalogName {}

pub fn catalog_entry(name: &str) -> Result<&'static CatalogEntry, UnknownCatalogName> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| UnknownCatalogName(name.into()))
}

pub fn catalog(name: &str) -> Result<SingularFunctionModel, UnknownCatalogName> {
    catalog_entry(name).map(CatalogEntry::model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_match_entries() {
        for (name, entry) in CATALOG_NAMES.iter().zip(&ENTRIES) {
            assert_eq!(*name, entry.name);
            let m = catalog(name).unwrap();
            assert_eq!(m.exceptional().points(), entry.exceptional);
            assert_eq!(entry.residuals.len(), entry.exceptional.len());
        }
        assert!(catalog("nope").is_err());
    }

    #[test]
    fn totals_match_endpoints() {
        for entry in &ENTRIES {
            let m = entry.model();
            let span = m.span();
            let total = m.increment(&span).unwrap();
            assert!((total - entry.total).abs() <= 1e-15, "{}", entry.name);
        }
    }

    #[test]
    fn documented_models() {
        let h = catalog("heaviside").unwrap();
        assert_eq!(h.primitive(-1.0), Ok(0.0));
        assert_eq!(h.primitive(1e-9), Ok(1.0));
        let r = catalog("reciprocal").unwrap();
        assert_eq!((r.span().lo(), r.span().hi()), (-1.0, 2.0));
        assert_eq!(r.derivative(2.0), Ok(-0.25));
        let p = catalog("parabola").unwrap();
        assert_eq!(p.exceptional().points(), &[0.5]);
        assert_eq!(p.primitive(0.75), Ok(0.5625));
    }
}
