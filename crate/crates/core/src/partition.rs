//! Intervals, tagged partitions and gauges.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

/// A non-degenerate compact interval `[lo, hi]` with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalError {
    NonFinite { lo: f64, hi: f64 },
    Degenerate { lo: f64, hi: f64 },
}

impl fmt::Display for IntervalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalError::NonFinite { lo, hi } => {
                write!(f, "interval endpoints must be finite, got [{lo}, {hi}]")
            }
            IntervalError::Degenerate { lo, hi } => {
                write!(f, "interval must satisfy lo < hi, got [{lo}, {hi}]")
            }
        }
    }
}

impl core::error::Error for IntervalError {}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(IntervalError::NonFinite { lo, hi });
        }
        if !(lo < hi) {
            return Err(IntervalError::Degenerate { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Lebesgue measure `hi − lo`.
    #[inline]
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// An interval-point pair `([a_i, b_i], x_i)`.
///
/// The tag is not checked on construction so that malformed inputs can be
/// reported by [`validate`]; [`TaggedPartition`] only ever holds valid pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedPair {
    pub interval: Interval,
    pub tag: f64,
}

impl TaggedPair {
    pub fn new(interval: Interval, tag: f64) -> Self {
        TaggedPair { interval, tag }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.interval.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.interval.hi
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.interval.length()
    }
}

/// Which partition rule a pair breaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// The partition has no pairs.
    Empty,
    /// `tag ∉ [lo, hi]`.
    TagOutside { tag: f64 },
    /// First pair does not start at `span.lo`.
    StartMismatch { expected: f64, found: f64 },
    /// Last pair does not end at `span.hi`.
    EndMismatch { expected: f64, found: f64 },
    /// `pairs[k].hi < pairs[k+1].lo`.
    Gap { from: f64, to: f64 },
    /// `pairs[k].hi > pairs[k+1].lo`.
    Overlap { from: f64, to: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Index of the offending pair (for `Gap`/`Overlap`, the left pair).
    pub index: usize,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Rule::Empty => write!(f, "partition has no pairs"),
            Rule::TagOutside { tag } => write!(f, "pair {}: tag {tag} outside interval", self.index),
            Rule::StartMismatch { expected, found } => {
                write!(f, "pair {}: starts at {found}, span starts at {expected}", self.index)
            }
            Rule::EndMismatch { expected, found } => {
                write!(f, "pair {}: ends at {found}, span ends at {expected}", self.index)
            }
            Rule::Gap { from, to } => write!(f, "pair {}: gap {from}..{to}", self.index),
            Rule::Overlap { from, to } => write!(f, "pair {}: overlap {to}..{from}", self.index),
        }
    }
}

/// Outcome of [`validate`]. Violations are data, never errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every partition rule for `pairs` (in the given order) against `span`.
///
/// Contiguity uses exact binary64 equality of shared endpoints.
pub fn validate(pairs: &[TaggedPair], span: &Interval) -> ValidationReport {
    let mut violations = Vec::new();
    let Some(first) = pairs.first() else {
        violations.push(Violation { index: 0, rule: Rule::Empty });
        return ValidationReport { violations };
    };
    if first.lo() != span.lo() {
        violations.push(Violation {
            index: 0,
            rule: Rule::StartMismatch { expected: span.lo(), found: first.lo() },
        });
    }
    for (index, pair) in pairs.iter().enumerate() {
        if !pair.interval.contains(pair.tag) {
            violations.push(Violation { index, rule: Rule::TagOutside { tag: pair.tag } });
        }
    }
    for (index, w) in pairs.windows(2).enumerate() {
        let (from, to) = (w[0].hi(), w[1].lo());
        if from < to {
            violations.push(Violation { index, rule: Rule::Gap { from, to } });
        } else if from > to {
            violations.push(Violation { index, rule: Rule::Overlap { from, to } });
        }
    }
    let last = pairs.len() - 1;
    if pairs[last].hi() != span.hi() {
        violations.push(Violation {
            index: last,
            rule: Rule::EndMismatch { expected: span.hi(), found: pairs[last].hi() },
        });
    }
    ValidationReport { violations }
}

/// An ordered chain of tagged pairs covering `span`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPartition {
    pairs: Vec<TaggedPair>,
    span: Interval,
}

impl TaggedPartition {
    /// Sorts `pairs` by left endpoint and validates them against `span`.
    pub fn new(span: Interval, mut pairs: Vec<TaggedPair>) -> Result<Self, ValidationReport> {
        pairs.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
        let report = validate(&pairs, &span);
        if report.is_ok() {
            Ok(TaggedPartition { pairs, span })
        } else {
            Err(report)
        }
    }

    /// For builders that emit pairs already in order; still validated.
    pub(crate) fn from_sorted(span: Interval, pairs: Vec<TaggedPair>) -> Result<Self, ValidationReport> {
        let report = validate(&pairs, &span);
        if report.is_ok() {
            Ok(TaggedPartition { pairs, span })
        } else {
            Err(report)
        }
    }

    pub fn pairs(&self) -> &[TaggedPair] {
        &self.pairs
    }

    pub fn span(&self) -> Interval {
        self.span
    }

    /// Pair count ν.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn restrict(&self, points: &[f64]) -> Restriction {
        restrict(self, points)
    }

    pub fn is_fine(&self, gauge: &Gauge) -> bool {
        is_fine(self, gauge)
    }
}

/// The split of a partition by whether each tag lies in a point set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Restriction {
    /// `P|_E`: pairs whose tag is in the set.
    pub on: Vec<TaggedPair>,
    /// `P|_{[a,b]∖E}`.
    pub off: Vec<TaggedPair>,
}

pub(crate) fn contains_point(sorted: &[f64], x: f64) -> bool {
    sorted.binary_search_by(|p| p.total_cmp(&x)).is_ok()
}

pub fn restrict(partition: &TaggedPartition, points: &[f64]) -> Restriction {
    let mut sorted: Vec<f64> = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Restriction::default();
    for pair in &partition.pairs {
        if contains_point(&sorted, pair.tag) {
            out.on.push(*pair);
        } else {
            out.off.push(*pair);
        }
    }
    out
}

/// True iff every `[lo, hi] ⊂ (tag − δ(tag), tag + δ(tag))`, strictly at both ends.
pub fn is_fine(partition: &TaggedPartition, gauge: &Gauge) -> bool {
    partition.pairs.iter().all(|p| pair_is_fine(p, gauge))
}

#[inline]
pub(crate) fn pair_is_fine(pair: &TaggedPair, gauge: &Gauge) -> bool {
    let d = gauge.at(pair.tag);
    d > 0.0 && pair.tag - d < pair.lo() && pair.hi() < pair.tag + d
}

/// Structured parameters of a gauge built from a mesh and anchor radii.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeDescriptor {
    /// Base mesh `h`; off the anchors δ(x) = 2h.
    pub mesh: f64,
    /// `(e, r_e)`: δ(e) = 2·r_e.
    pub anchors: Vec<(f64, f64)>,
    /// When set, δ(x) off the anchors is also capped by the distance to the
    /// nearest anchor point, which forces anchor points to be tags.
    pub isolated: bool,
}

impl GaugeDescriptor {
    fn eval(&self, x: f64) -> f64 {
        let mut nearest = f64::INFINITY;
        for &(e, r) in &self.anchors {
            if x == e {
                return 2.0 * r;
            }
            nearest = nearest.min((x - e).abs());
        }
        if self.isolated {
            (2.0 * self.mesh).min(nearest)
        } else {
            2.0 * self.mesh
        }
    }
}

/// A width function δ: [a, b] → ℝ₊.
pub struct Gauge {
    repr: GaugeRepr,
}

enum GaugeRepr {
    Descriptor(GaugeDescriptor),
    Function(Box<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Gauge {
    pub fn from_fn(delta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Gauge { repr: GaugeRepr::Function(Box::new(delta)) }
    }

    pub fn constant(delta: f64) -> Self {
        Gauge::from_fn(move |_| delta)
    }

    /// δ(x) = 2h off the anchors, δ(e) = 2r_e on them.
    pub fn anchored(mesh: f64, anchors: Vec<(f64, f64)>, isolated: bool) -> Self {
        Gauge { repr: GaugeRepr::Descriptor(GaugeDescriptor { mesh, anchors, isolated }) }
    }

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        match &self.repr {
            GaugeRepr::Descriptor(d) => d.eval(x),
            GaugeRepr::Function(f) => f(x),
        }
    }

    pub fn descriptor(&self) -> Option<&GaugeDescriptor> {
        match &self.repr {
            GaugeRepr::Descriptor(d) => Some(d),
            GaugeRepr::Function(_) => None,
        }
    }
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            GaugeRepr::Descriptor(d) => f.debug_tuple("Gauge").field(d).finish(),
            GaugeRepr::Function(_) => f.write_str("Gauge(<fn>)"),
        }
    }
}
