//! The singular function model: `F`, its derivative `f` off `E`, and the zero
//! extensions `F_ex`, `D_ex F`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builder::RefinementSchedule;
use crate::partition::{contains_point, Interval};
use crate::verdict::{Classifier, ConvergenceVerdict, DepthValue, SequenceOptions};

/// A real function that may be undefined at some points.
pub trait RealFunction: Send + Sync {
    fn eval(&self, x: f64) -> Option<f64>;
}

impl<F> RealFunction for F
where
    F: Fn(f64) -> Option<f64> + Send + Sync,
{
    fn eval(&self, x: f64) -> Option<f64> {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Primitive,
    Derivative,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::Primitive => "F",
            Which::Derivative => "f",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalError {
    /// `F` or `f` is undefined or non-finite at a point outside `E`.
    Undefined { which: Which, x: f64 },
    OutsideSpan { x: f64 },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Undefined { which, x } => {
                write!(f, "{which} is undefined at x = {x}, which is not a declared exceptional point")
            }
            EvalError::OutsideSpan { x } => write!(f, "x = {x} lies outside the span"),
        }
    }
}

impl core::error::Error for EvalError {}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    NotInterior { point: f64 },
    Duplicate { point: f64 },
    NonFinite { point: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NotInterior { point } => {
                write!(f, "exceptional point {point} must lie strictly inside the span")
            }
            ModelError::Duplicate { point } => write!(f, "exceptional point {point} listed twice"),
            ModelError::NonFinite { point } => write!(f, "exceptional point {point} is not finite"),
        }
    }
}

impl core::error::Error for ModelError {}

/// Strictly increasing finite set of interior points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExceptionalSet {
    points: Vec<f64>,
}

impl ExceptionalSet {
    pub fn new(points: &[f64], span: &Interval) -> Result<Self, ModelError> {
        let mut sorted = points.to_vec();
        for &p in &sorted {
            if !p.is_finite() {
                return Err(ModelError::NonFinite { point: p });
            }
            if !(span.lo() < p && p < span.hi()) {
                return Err(ModelError::NotInterior { point: p });
            }
        }
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::Duplicate { point: w[0] });
        }
        Ok(ExceptionalSet { points: sorted })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn contains(&self, x: f64) -> bool {
        contains_point(&self.points, x)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `F`, `f = F'` on `span ∖ E`, and the finite exceptional set `E`.
#[derive(Clone)]
pub struct SingularFunctionModel {
    primitive: Arc<dyn RealFunction>,
    derivative: Arc<dyn RealFunction>,
    exceptional: ExceptionalSet,
    span: Interval,
    provenance: String,
}

impl fmt::Debug for SingularFunctionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SingularFunctionModel")
            .field("exceptional", &self.exceptional.points)
            .field("span", &self.span)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl SingularFunctionModel {
    pub fn new(
        primitive: Arc<dyn RealFunction>,
        derivative: Arc<dyn RealFunction>,
        exceptional: &[f64],
        span: Interval,
        provenance: impl Into<String>,
    ) -> Result<Self, ModelError> {
        Ok(SingularFunctionModel {
            primitive,
            derivative,
            exceptional: ExceptionalSet::new(exceptional, &span)?,
            span,
            provenance: provenance.into(),
        })
    }

    /// Convenience constructor from closures returning plain `f64`;
    /// non-finite results count as undefined.
    pub fn from_fns(
        primitive: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        exceptional: &[f64],
        span: Interval,
        provenance: impl Into<String>,
    ) -> Result<Self, ModelError> {
        Self::new(
            Arc::new(move |x: f64| Some(primitive(x))),
            Arc::new(move |x: f64| Some(derivative(x))),
            exceptional,
            span,
            provenance,
        )
    }

    pub fn span(&self) -> Interval {
        self.span
    }

    pub fn exceptional(&self) -> &ExceptionalSet {
        &self.exceptional
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Same functions on a different span.
    pub fn with_span(&self, span: Interval) -> Result<Self, ModelError> {
        Ok(SingularFunctionModel {
            exceptional: ExceptionalSet::new(self.exceptional.points(), &span)?,
            span,
            ..self.clone()
        })
    }

    /// The model `(c·F, c·f, E)`.
    pub fn scaled(&self, c: f64) -> Self {
        let (p, d) = (self.primitive.clone(), self.derivative.clone());
        SingularFunctionModel {
            primitive: Arc::new(move |x: f64| p.eval(x).map(|v| c * v)),
            derivative: Arc::new(move |x: f64| d.eval(x).map(|v| c * v)),
            provenance: format!("{} * ({})", c, self.provenance),
            ..self.clone()
        }
    }

    /// The model `(F + c, f, E)`.
    pub fn shifted(&self, c: f64) -> Self {
        let p = self.primitive.clone();
        SingularFunctionModel {
            primitive: Arc::new(move |x: f64| p.eval(x).map(|v| v + c)),
            provenance: format!("({}) + {}", self.provenance, c),
            ..self.clone()
        }
    }

    pub fn is_exceptional(&self, x: f64) -> bool {
        self.exceptional.contains(x)
    }

    fn check_span(&self, x: f64) -> Result<(), EvalError> {
        if self.span.contains(x) {
            Ok(())
        } else {
            Err(EvalError::OutsideSpan { x })
        }
    }

    /// `F(x)` for `x ∉ E`. Points of `E` are never passed to `F`.
    pub fn primitive(&self, x: f64) -> Result<f64, EvalError> {
        self.check_span(x)?;
        if self.is_exceptional(x) {
            return Err(EvalError::Undefined { which: Which::Primitive, x });
        }
        finite(self.primitive.eval(x), Which::Primitive, x)
    }

    /// `f(x)` for `x ∉ E`.
    pub fn derivative(&self, x: f64) -> Result<f64, EvalError> {
        self.check_span(x)?;
        if self.is_exceptional(x) {
            return Err(EvalError::Undefined { which: Which::Derivative, x });
        }
        finite(self.derivative.eval(x), Which::Derivative, x)
    }

    /// `f(x)` without the exceptional-set short circuit, as a raw integrand.
    pub fn derivative_raw(&self, x: f64) -> Result<f64, EvalError> {
        self.check_span(x)?;
        finite(self.derivative.eval(x), Which::Derivative, x)
    }

    /// `F_ex(x)`: zero on `E`, `F(x)` elsewhere.
    pub fn primitive_ex(&self, x: f64) -> Result<f64, EvalError> {
        self.check_span(x)?;
        if self.is_exceptional(x) {
            return Ok(0.0);
        }
        finite(self.primitive.eval(x), Which::Primitive, x)
    }

    /// `D_ex F(x)`: zero on `E`, `f(x)` elsewhere.
    pub fn derivative_ex(&self, x: f64) -> Result<f64, EvalError> {
        self.check_span(x)?;
        if self.is_exceptional(x) {
            return Ok(0.0);
        }
        finite(self.derivative.eval(x), Which::Derivative, x)
    }

    /// `(F_ex(x), D_ex F(x))`.
    pub fn evaluate_extended(&self, x: f64) -> Result<(f64, f64), EvalError> {
        Ok((self.primitive_ex(x)?, self.derivative_ex(x)?))
    }

    /// Associated interval function of `F_ex`: `F_ex(hi) − F_ex(lo)`.
    pub fn increment(&self, interval: &Interval) -> Result<f64, EvalError> {
        Ok(self.primitive_ex(interval.hi())? - self.primitive_ex(interval.lo())?)
    }
}

fn finite(v: Option<f64>, which: Which, x: f64) -> Result<f64, EvalError> {
    match v {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(EvalError::Undefined { which, x }),
    }
}

/// Bracket increments `F(e + r_n) − F(e − r_n)` and their verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEstimate {
    pub point: f64,
    pub sequence: Vec<DepthValue>,
    pub verdict: ConvergenceVerdict,
}

/// Estimates the residual `R(e)` as the limit of `F(e + r_n) − F(e − r_n)`.
pub fn residual_estimate(
    model: &SingularFunctionModel,
    e: f64,
    schedule: &RefinementSchedule,
    opts: &SequenceOptions,
) -> ResidualEstimate {
    residual_estimate_skewed(model, e, schedule, opts, 0, 0)
}

/// Like [`residual_estimate`], but the left bracket uses `r_{n+left_shift}` and
/// the right uses `r_{n+right_shift}`, to probe one-sided behaviour.
pub fn residual_estimate_skewed(
    model: &SingularFunctionModel,
    e: f64,
    schedule: &RefinementSchedule,
    opts: &SequenceOptions,
    left_shift: usize,
    right_shift: usize,
) -> ResidualEstimate {
    let mut classifier = Classifier::new(*opts);
    if !model.is_exceptional(e) {
        let diagnostic = format!("{e} is not an exceptional point of the model");
        return ResidualEstimate { point: e, sequence: Vec::new(), verdict: classifier.finish(Some(diagnostic)) };
    }
    let span = model.span();
    let mut diagnostic = None;
    for n in 0..=opts.max_depth {
        let lo = e - schedule.anchor_radius(n + left_shift);
        let hi = e + schedule.anchor_radius(n + right_shift);
        if lo == e || hi == e {
            diagnostic = Some(format!("bracket collapsed onto {e} at depth {n}"));
            break;
        }
        if !(span.lo() <= lo && hi <= span.hi()) || brackets_other_points(model, e, lo, hi) {
            diagnostic = Some(format!("bracket [{lo}, {hi}] leaves the isolated neighbourhood of {e}"));
            break;
        }
        let value = match (model.primitive(hi), model.primitive(lo)) {
            (Ok(a), Ok(b)) => a - b,
            (Err(err), _) | (_, Err(err)) => {
                diagnostic = Some(format!("depth {n}: {err}"));
                break;
            }
        };
        if let Some(v) = classifier.observe(DepthValue { depth: n, value }) {
            let sequence = classifier.trace().to_vec();
            return ResidualEstimate { point: e, sequence, verdict: v };
        }
    }
    let sequence = classifier.trace().to_vec();
    ResidualEstimate { point: e, sequence, verdict: classifier.finish(diagnostic) }
}

fn brackets_other_points(model: &SingularFunctionModel, e: f64, lo: f64, hi: f64) -> bool {
    model.exceptional().points().iter().any(|&p| p != e && lo <= p && p <= hi)
}

/// A sample where `f` disagrees with a central difference of `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyWarning {
    pub x: f64,
    pub derivative: f64,
    pub central_difference: f64,
    pub relative_mismatch: f64,
}

pub const CONSISTENCY_TOLERANCE: f64 = 1e-3;

/// Compares `f` with `(F(x+h) − F(x−h)) / 2h`, `h = 10⁻⁶·(b−a)`, at
/// `sample_count` seeded points at distance at least `r₀` from `E`.
///
/// Points where either side cannot be evaluated are reported with NaN fields.
pub fn consistency_check(model: &SingularFunctionModel, sample_count: usize, seed: u64) -> Vec<ConsistencyWarning> {
    let span = model.span();
    let h = 1e-6 * span.length();
    let keep_out = RefinementSchedule::for_model(model).anchor_radius(0);
    let (lo, hi) = (span.lo() + h, span.hi() - h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut taken = 0usize;
    let mut attempts = 0usize;
    while taken < sample_count && attempts < sample_count.saturating_mul(64).max(64) {
        attempts += 1;
        let x = lo + unit_f64(&mut rng) * (hi - lo);
        if model.exceptional().points().iter().any(|&e| (x - e).abs() < keep_out) {
            continue;
        }
        taken += 1;
        let sampled = (model.derivative(x), model.primitive(x + h), model.primitive(x - h));
        let (d, fd) = match sampled {
            (Ok(d), Ok(up), Ok(down)) => (d, (up - down) / (2.0 * h)),
            _ => {
                warnings.push(ConsistencyWarning {
                    x,
                    derivative: f64::NAN,
                    central_difference: f64::NAN,
                    relative_mismatch: f64::NAN,
                });
                continue;
            }
        };
        let scale = d.abs().max(fd.abs());
        if scale < 1e-12 {
            continue;
        }
        let rel = (d - fd).abs() / scale;
        if rel > CONSISTENCY_TOLERANCE {
            warnings.push(ConsistencyWarning { x, derivative: d, central_difference: fd, relative_mismatch: rel });
        }
    }
    warnings
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
