//! Construction of tagged partitions.
//!
//! Three builders are provided:
//!
//! * [`build_anchored`]: every exceptional point tags its own anchor interval
//!   `[e − r, e + r]`; the gaps are cut into equal left-tagged cells of width
//!   at most `h`.
//! * [`build_straddle_verified`]: like the anchored builder, but each off-E
//!   cell is halved until the one-sided straddle inequality
//!   `|F(x + w) − F(x) − f(x)·w| ≤ ε·w` holds at its left-endpoint tag. This is
//!   the constructive stand-in for the gauge of the total integral; no explicit
//!   δ is ever written down.
//! * [`build_cousin`]: bisection until each piece is δ-fine for some candidate
//!   tag (constructive Cousin's lemma).

use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{unit_f64, EvalError, SingularFunctionModel};
use crate::partition::{Gauge, Interval, TaggedPair, TaggedPartition, ValidationReport};

/// Depth-indexed `(h_n, r_n, ε_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthParams {
    pub mesh: f64,
    pub anchor_radius: f64,
    pub epsilon: f64,
}

/// `h_n = h₀·2⁻ⁿ`, `r_n = r₀·2⁻ⁿ`, `ε_n = ε₀·4⁻ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementSchedule {
    pub mesh0: f64,
    pub radius0: f64,
    pub epsilon0: f64,
    /// Halvings of `ε` per depth; the default 2 gives `ε_n = ε₀·4⁻ⁿ`.
    pub epsilon_decay: u32,
}

pub const DEFAULT_EPSILON0: f64 = 1e-2;

impl RefinementSchedule {
    /// Defaults for `span` and the exceptional points `points`:
    /// `h₀ = b − a`, `r₀ = min(0.05·(b − a), ½·min gap of E ∪ {a, b})`, `ε₀ = 10⁻²`.
    pub fn for_points(span: &Interval, points: &[f64]) -> Self {
        RefinementSchedule {
            mesh0: span.length(),
            radius0: default_radius(span, points),
            epsilon0: DEFAULT_EPSILON0,
            epsilon_decay: 2,
        }
    }

    pub fn for_model(model: &SingularFunctionModel) -> Self {
        Self::for_points(&model.span(), model.exceptional().points())
    }

    pub fn with_radius(mut self, radius0: f64) -> Self {
        self.radius0 = radius0;
        self
    }

    pub fn with_epsilon(mut self, epsilon0: f64) -> Self {
        self.epsilon0 = epsilon0;
        self
    }

    pub fn with_epsilon_decay(mut self, halvings_per_depth: u32) -> Self {
        self.epsilon_decay = halvings_per_depth.max(1);
        self
    }

    pub fn mesh(&self, n: usize) -> f64 {
        scale2(self.mesh0, n, 1)
    }

    pub fn anchor_radius(&self, n: usize) -> f64 {
        scale2(self.radius0, n, 1)
    }

    pub fn epsilon(&self, n: usize) -> f64 {
        scale2(self.epsilon0, n, self.epsilon_decay as i32)
    }

    pub fn at(&self, n: usize) -> DepthParams {
        DepthParams { mesh: self.mesh(n), anchor_radius: self.anchor_radius(n), epsilon: self.epsilon(n) }
    }
}

fn scale2(x: f64, n: usize, per_step: i32) -> f64 {
    let k = i32::try_from(n).unwrap_or(i32::MAX / 4).saturating_mul(per_step);
    libm::ldexp(x, -k)
}

fn default_radius(span: &Interval, points: &[f64]) -> f64 {
    let mut nodes: Vec<f64> = Vec::with_capacity(points.len() + 2);
    nodes.push(span.lo());
    nodes.extend_from_slice(points);
    nodes.push(span.hi());
    nodes.sort_by(f64::total_cmp);
    let min_gap = nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    (0.05 * span.length()).min(0.5 * min_gap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildLimits {
    pub max_pairs: usize,
    pub max_halvings: u32,
    /// Smallest admissible cell width as a fraction of `b − a`.
    pub min_relative_width: f64,
}

impl Default for BuildLimits {
    fn default() -> Self {
        BuildLimits { max_pairs: 10_000_000, max_halvings: 80, min_relative_width: libm::ldexp(1.0, -60) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Pairs { limit: usize },
    Width { at: f64, width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuildError {
    AnchorOverlap { left: f64, right: f64 },
    AnchorOutsideSpan { point: f64, radius: f64 },
    ExceptionalOutsideSpan { point: f64 },
    InvalidParameter { name: &'static str, value: f64 },
    /// No width down to the limits satisfied the straddle inequality at `tag`.
    StraddleFailure { tag: f64, width: f64, error: f64, allowed: f64 },
    BudgetExceeded(Budget),
    NonPositiveGauge { x: f64, value: f64 },
    Evaluation(EvalError),
    Invalid(ValidationReport),
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::AnchorOverlap { left, right } => {
                write!(f, "anchor intervals around {left} and {right} overlap")
            }
            BuildError::AnchorOutsideSpan { point, radius } => {
                write!(f, "anchor [{p} - {radius}, {p} + {radius}] leaves the span", p = point)
            }
            BuildError::ExceptionalOutsideSpan { point } => {
                write!(f, "exceptional point {point} is not inside the span")
            }
            BuildError::InvalidParameter { name, value } => write!(f, "{name} must be positive and finite, got {value}"),
            BuildError::StraddleFailure { tag, width, error, allowed } => write!(
                f,
                "straddle check failed at x = {tag}: error {error:e} > {allowed:e} at minimum width {width:e}"
            ),
            BuildError::BudgetExceeded(Budget::Pairs { limit }) => {
                write!(f, "partition exceeded the budget of {limit} pairs")
            }
            BuildError::BudgetExceeded(Budget::Width { at, width }) => {
                write!(f, "cell width {width:e} at {at} fell below the minimum width")
            }
            BuildError::NonPositiveGauge { x, value } => write!(f, "gauge value {value} at {x} is not positive"),
            BuildError::Evaluation(e) => write!(f, "{e}"),
            BuildError::Invalid(r) => match r.violations.first() {
                Some(v) => write!(f, "builder produced an invalid partition: {v}"),
                None => write!(f, "builder produced an invalid partition"),
            },
        }
    }
}

impl core::error::Error for BuildError {}

impl From<EvalError> for BuildError {
    fn from(e: EvalError) -> Self {
        BuildError::Evaluation(e)
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, BuildError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BuildError::InvalidParameter { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Anchor {
    pub lo: f64,
    pub point: f64,
    pub hi: f64,
}

/// Anchor intervals for `points` (sorted on return). Closed anchors may touch
/// each other or the span ends but may not overlap.
pub(crate) fn anchor_layout(span: &Interval, points: &[f64], radius: f64) -> Result<Vec<Anchor>, BuildError> {
    let radius = positive("anchor radius", radius)?;
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut anchors: Vec<Anchor> = Vec::with_capacity(sorted.len());
    for &point in &sorted {
        if !(span.lo() < point && point < span.hi()) {
            return Err(BuildError::ExceptionalOutsideSpan { point });
        }
        let (mut lo, hi) = (point - radius, point + radius);
        if lo < span.lo() || hi > span.hi() {
            return Err(BuildError::AnchorOutsideSpan { point, radius });
        }
        if let Some(prev) = anchors.last() {
            if lo < prev.hi {
                // r₀ = half the gap can land a few ulps past the neighbour.
                if prev.hi - lo <= 4.0 * f64::EPSILON * prev.hi.abs().max(lo.abs()) {
                    lo = prev.hi;
                } else {
                    return Err(BuildError::AnchorOverlap { left: prev.point, right: point });
                }
            }
        }
        anchors.push(Anchor { lo, point, hi });
    }
    Ok(anchors)
}

/// Off-anchor segments in order, each followed by the anchor that closes it
/// (`None` for the last segment).
fn segments(span: &Interval, anchors: &[Anchor]) -> Vec<(f64, f64, Option<Anchor>)> {
    let mut out = Vec::with_capacity(anchors.len() + 1);
    let mut start = span.lo();
    for a in anchors {
        out.push((start, a.lo, Some(*a)));
        start = a.hi;
    }
    out.push((start, span.hi(), None));
    out
}

fn interval(lo: f64, hi: f64) -> Result<Interval, BuildError> {
    Interval::new(lo, hi).map_err(|_| BuildError::BudgetExceeded(Budget::Width { at: lo, width: hi - lo }))
}

fn anchor_pair(a: &Anchor) -> Result<TaggedPair, BuildError> {
    Ok(TaggedPair::new(interval(a.lo, a.hi)?, a.point))
}

fn finish(span: Interval, pairs: Vec<TaggedPair>) -> Result<TaggedPartition, BuildError> {
    TaggedPartition::from_sorted(span, pairs).map_err(BuildError::Invalid)
}

/// Anchored partition: each `e ∈ E` tags `[e − r, e + r]`, all other cells are
/// equal subdivisions of the gaps with width `≤ h`, tagged at the left endpoint.
///
/// The result is δ-fine for `δ = 2h` off `E` and `δ(e) = 2r` (see
/// [`anchored_gauge`]).
pub fn build_anchored(span: Interval, points: &[f64], radius: f64, mesh: f64) -> Result<TaggedPartition, BuildError> {
    let mesh = positive("mesh", mesh)?;
    let limits = BuildLimits::default();
    let anchors = if points.is_empty() { Vec::new() } else { anchor_layout(&span, points, radius)? };
    let mut pairs = Vec::new();
    for (u, v, closing) in segments(&span, &anchors) {
        if v > u {
            let cells = libm::ceil((v - u) / mesh);
            if cells > limits.max_pairs as f64 {
                return Err(BuildError::BudgetExceeded(Budget::Pairs { limit: limits.max_pairs }));
            }
            let k = (cells as usize).max(1);
            let len = v - u;
            let mut left = u;
            for i in 1..=k {
                let right = if i == k { v } else { u + len * (i as f64) / (k as f64) };
                pairs.push(TaggedPair::new(interval(left, right)?, left));
                left = right;
            }
        }
        if let Some(a) = closing {
            pairs.push(anchor_pair(&a)?);
        }
        if pairs.len() > limits.max_pairs {
            return Err(BuildError::BudgetExceeded(Budget::Pairs { limit: limits.max_pairs }));
        }
    }
    finish(span, pairs)
}

/// The gauge for which [`build_anchored`] output is fine.
pub fn anchored_gauge(points: &[f64], radius: f64, mesh: f64) -> Gauge {
    Gauge::anchored(mesh, points.iter().map(|&e| (e, radius)).collect(), false)
}

/// Data computed while accepting a straddle-verified cell `[x, x + w]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StraddleStep {
    /// `f(x)` at the left-endpoint tag.
    pub slope: f64,
    /// `F(x + w) − F(x)`.
    pub increment: f64,
}

impl StraddleStep {
    /// `|F(x + w) − F(x) − f(x)·w|`.
    pub fn error(&self, width: f64) -> f64 {
        (self.increment - self.slope * width).abs()
    }
}

/// Streams the straddle-verified partition pair by pair without storing it.
/// `visit` receives `None` for anchor pairs. Returns the pair count.
pub fn walk_straddle_verified(
    model: &SingularFunctionModel,
    radius: f64,
    mesh: f64,
    epsilon: f64,
    limits: &BuildLimits,
    mut visit: impl FnMut(&TaggedPair, Option<StraddleStep>),
) -> Result<usize, BuildError> {
    let span = model.span();
    let mesh = positive("mesh", mesh)?;
    let epsilon = positive("epsilon", epsilon)?;
    let points = model.exceptional().points();
    let anchors = if points.is_empty() { Vec::new() } else { anchor_layout(&span, points, radius)? };
    let min_width = limits.min_relative_width * span.length();
    let mut count = 0usize;
    let bump = |count: &mut usize| -> Result<(), BuildError> {
        *count += 1;
        if *count > limits.max_pairs {
            Err(BuildError::BudgetExceeded(Budget::Pairs { limit: limits.max_pairs }))
        } else {
            Ok(())
        }
    };

    for (u, v, closing) in segments(&span, &anchors) {
        let mut x = u;
        let mut carried: Option<f64> = None;
        while x < v {
            let fx = match carried.take() {
                Some(f) => f,
                None => model.primitive(x)?,
            };
            let slope = model.derivative(x)?;
            let mut hi = if mesh >= v - x { v } else { x + mesh };
            let mut halvings = 0u32;
            let increment = loop {
                let w = hi - x;
                let allowed = epsilon * w;
                let error = match model.primitive(hi) {
                    Ok(fh) => Some((fh, (fh - fx - slope * w).abs())),
                    Err(_) => None,
                };
                if let Some((fh, err)) = error {
                    if err <= allowed {
                        carried = Some(fh);
                        break fh - fx;
                    }
                }
                let half = x + 0.5 * w;
                if halvings >= limits.max_halvings || 0.5 * w < min_width || !(half > x) {
                    return Err(BuildError::StraddleFailure {
                        tag: x,
                        width: w,
                        error: error.map_or(f64::INFINITY, |e| e.1),
                        allowed,
                    });
                }
                hi = half;
                halvings += 1;
            };
            let pair = TaggedPair::new(interval(x, hi)?, x);
            bump(&mut count)?;
            visit(&pair, Some(StraddleStep { slope, increment }));
            x = hi;
        }
        if let Some(a) = closing {
            let pair = anchor_pair(&a)?;
            bump(&mut count)?;
            visit(&pair, None);
        }
    }
    Ok(count)
}

/// Straddle-verified partition of the model's span with fixed anchor radius
/// `radius`, mesh cap `mesh` and straddle tolerance `epsilon`.
pub fn build_straddle_verified(
    model: &SingularFunctionModel,
    radius: f64,
    mesh: f64,
    epsilon: f64,
    limits: &BuildLimits,
) -> Result<TaggedPartition, BuildError> {
    let mut pairs = Vec::new();
    walk_straddle_verified(model, radius, mesh, epsilon, limits, |p, _| pairs.push(*p))?;
    finish(model.span(), pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagPolicy {
    Left,
    Midpoint,
    Random(u64),
}

/// δ-fine partition of `span` by recursive bisection, with default limits.
pub fn build_cousin(span: Interval, gauge: &Gauge, policy: TagPolicy) -> Result<TaggedPartition, BuildError> {
    build_cousin_with(span, gauge, policy, &BuildLimits::default())
}

/// An interval is accepted as soon as one candidate tag `x` (the policy's
/// choice, then midpoint, lo, hi) has `[u, v] ⊂ (x − δ(x), x + δ(x))`;
/// otherwise it is bisected.
pub fn build_cousin_with(
    span: Interval,
    gauge: &Gauge,
    policy: TagPolicy,
    limits: &BuildLimits,
) -> Result<TaggedPartition, BuildError> {
    let min_width = limits.min_relative_width * span.length();
    let mut rng = match policy {
        TagPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut pairs = Vec::new();
    let mut stack = alloc::vec![(span.lo(), span.hi())];
    while let Some((u, v)) = stack.pop() {
        let mid = u + 0.5 * (v - u);
        let first = match (policy, rng.as_mut()) {
            (TagPolicy::Left, _) => u,
            (TagPolicy::Random(_), Some(rng)) => (u + unit_f64(rng) * (v - u)).clamp(u, v),
            _ => mid,
        };
        let mut accepted = None;
        for x in [first, mid, u, v] {
            let d = gauge.at(x);
            if d.is_nan() || d < 0.0 {
                return Err(BuildError::NonPositiveGauge { x, value: d });
            }
            if d > 0.0 && x - d < u && v < x + d {
                accepted = Some(x);
                break;
            }
        }
        match accepted {
            Some(tag) => {
                pairs.push(TaggedPair::new(interval(u, v)?, tag));
                if pairs.len() > limits.max_pairs {
                    return Err(BuildError::BudgetExceeded(Budget::Pairs { limit: limits.max_pairs }));
                }
            }
            None => {
                if v - u < 2.0 * min_width || !(u < mid && mid < v) {
                    return Err(BuildError::BudgetExceeded(Budget::Width { at: u, width: v - u }));
                }
                stack.push((mid, v));
                stack.push((u, mid));
            }
        }
    }
    finish(span, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn anchored_single_point() {
        let p = build_anchored(iv(-1.0, 1.0), &[0.0], 0.25, 0.5).unwrap();
        assert!(p.pairs().iter().any(|q| q.lo() == -0.25 && q.hi() == 0.25 && q.tag == 0.0));
        assert!(p.is_fine(&anchored_gauge(&[0.0], 0.25, 0.5)));
        for q in p.pairs().iter().filter(|q| q.tag != 0.0) {
            assert!(q.width() <= 0.5);
            assert_eq!(q.tag, q.lo());
        }
    }

    #[test]
    fn anchored_without_points_is_uniform() {
        let p = build_anchored(iv(0.0, 1.0), &[], 0.1, 0.25).unwrap();
        let cells: Vec<(f64, f64, f64)> = p.pairs().iter().map(|q| (q.lo(), q.hi(), q.tag)).collect();
        assert_eq!(cells, [(0.0, 0.25, 0.0), (0.25, 0.5, 0.25), (0.5, 0.75, 0.5), (0.75, 1.0, 0.75)]);
    }

    #[test]
    fn anchored_overlap_rejected() {
        let err = build_anchored(iv(-1.0, 1.0), &[-0.9, -0.8], 0.1, 0.5).unwrap_err();
        assert_eq!(err, BuildError::AnchorOverlap { left: -0.9, right: -0.8 });
        let err = build_anchored(iv(-1.0, 1.0), &[0.95], 0.1, 0.5).unwrap_err();
        assert!(matches!(err, BuildError::AnchorOutsideSpan { .. }));
    }

    #[test]
    fn anchored_is_deterministic() {
        let a = build_anchored(iv(0.0, 3.0), &[0.5, 1.5, 2.5], 0.15, 0.07).unwrap();
        let b = build_anchored(iv(0.0, 3.0), &[2.5, 0.5, 1.5], 0.15, 0.07).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schedule_formulas() {
        let s = RefinementSchedule::for_points(&iv(-1.0, 1.0), &[0.0]);
        assert_eq!(s.at(0), DepthParams { mesh: 2.0, anchor_radius: 0.1, epsilon: 1e-2 });
        assert_eq!(s.at(3), DepthParams { mesh: 0.25, anchor_radius: 0.1 / 8.0, epsilon: 1e-2 / 64.0 });
        for n in 0..40 {
            let (a, b) = (s.at(n), s.at(n + 1));
            assert!(b.mesh < a.mesh && b.anchor_radius < a.anchor_radius && b.epsilon < a.epsilon);
        }
        // Tight gaps bind the radius.
        let s = RefinementSchedule::for_points(&iv(0.0, 10.0), &[1.0, 1.2]);
        assert!((s.radius0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn half_gap_radius_touches_but_builds() {
        let span = iv(0.0, 1.0);
        let s = RefinementSchedule::for_points(&span, &[0.1, 0.3]);
        let p = build_anchored(span, &[0.1, 0.3], s.radius0, 0.1).unwrap();
        assert_eq!(p.restrict(&[0.1, 0.3]).on.len(), 2);
    }

    fn parabola() -> SingularFunctionModel {
        SingularFunctionModel::from_fns(|x| x * x, |x| 2.0 * x, &[0.5], iv(0.0, 1.0), "x^2").unwrap()
    }

    #[test]
    fn straddle_smooth() {
        let m = parabola();
        let eps = 1e-3;
        let p = build_straddle_verified(&m, 0.05, 1.0, eps, &BuildLimits::default()).unwrap();
        let mut total = 0.0;
        for q in p.pairs() {
            if q.tag == 0.5 {
                assert_eq!((q.lo(), q.hi()), (0.45, 0.55));
                continue;
            }
            let err = (q.hi() * q.hi() - q.lo() * q.lo() - 2.0 * q.tag * q.width()).abs();
            assert!(err <= eps * q.width());
            total += err;
        }
        assert!(total <= eps);
    }

    #[test]
    fn straddle_reciprocal_width_profile() {
        let m = SingularFunctionModel::from_fns(|x| 1.0 / x, |x| -1.0 / (x * x), &[0.0], iv(-1.0, 2.0), "1/x")
            .unwrap();
        let eps = 1e-3;
        let p = build_straddle_verified(&m, 0.05, 3.0, eps, &BuildLimits::default()).unwrap();
        // Per-pair error is w²/(x²·|x + w|); halving keeps w within a factor 2
        // of the largest admissible width, which is about ε·|x|³ near the pole.
        for q in p.pairs().iter().filter(|q| q.tag > 0.05 && q.tag < 0.2 && q.hi() < 2.0) {
            let x = q.tag;
            let w = q.width();
            let closed = w * w / (x * x * (x + w));
            assert!(closed <= eps * w * (1.0 + 1e-6));
            let largest = eps * x * x * x;
            assert!(w <= 1.01 * largest / (1.0 - eps * x * x) && w >= 0.45 * largest, "x={x} w={w}");
        }
        assert!(p.len() < 10_000_000);
    }

    #[test]
    fn straddle_detects_wrong_derivative() {
        let m = SingularFunctionModel::from_fns(|x: f64| x.abs(), |_| 1.0, &[], iv(-1.0, 1.0), "|x|").unwrap();
        match build_straddle_verified(&m, 0.1, 2.0, 1e-3, &BuildLimits::default()) {
            Err(BuildError::StraddleFailure { tag, .. }) => assert!(tag < 0.0),
            other => panic!("expected straddle failure, got {other:?}"),
        }
    }

    #[test]
    fn straddle_budget() {
        let m = parabola();
        let limits = BuildLimits { max_pairs: 100, ..BuildLimits::default() };
        assert_eq!(
            build_straddle_verified(&m, 0.05, 1.0, 1e-6, &limits).unwrap_err(),
            BuildError::BudgetExceeded(Budget::Pairs { limit: 100 })
        );
    }

    #[test]
    fn cousin_huge_gauge_is_single_pair() {
        for policy in [TagPolicy::Left, TagPolicy::Midpoint, TagPolicy::Random(3)] {
            let p = build_cousin(iv(0.0, 1.0), &Gauge::constant(1.0), policy).unwrap();
            assert_eq!(p.len(), 1);
        }
    }

    #[test]
    fn cousin_variable_gauge() {
        let g = Gauge::from_fn(|x: f64| x.abs().max(0.1));
        let p = build_cousin(iv(-1.0, 1.0), &g, TagPolicy::Random(11)).unwrap();
        assert!(p.is_fine(&g));
    }

    #[test]
    fn cousin_underflowing_gauge_exhausts_budget() {
        let g = Gauge::constant(1e-300 * 1e-100);
        assert!(matches!(
            build_cousin(iv(0.0, 1.0), &g, TagPolicy::Midpoint),
            Err(BuildError::BudgetExceeded(Budget::Width { .. }))
        ));
        let g = Gauge::constant(-1.0);
        assert!(matches!(build_cousin(iv(0.0, 1.0), &g, TagPolicy::Left), Err(BuildError::NonPositiveGauge { .. })));
    }
}
