//! The sum functionals `Ξ_f(P) = Σ f(x_i)·|b_i − a_i|` and
//! `Σ_Φ(P) = Σ [Φ(b_i) − Φ(a_i)]` with `Φ` the interval function of `F_ex`,
//! plus the E-restricted basic-sum sequence.

use alloc::format;
use alloc::vec::Vec;
use core::ops::AddAssign;

use crate::builder::{anchor_layout, RefinementSchedule};
use crate::model::{EvalError, SingularFunctionModel};
use crate::partition::{Interval, TaggedPair, TaggedPartition};
use crate::verdict::{Classifier, ConvergenceVerdict, DepthValue, SequenceOptions};

/// Kahan-Babuška-Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s += x;
        }
        s
    }
}

/// A sum split by whether each pair's tag lies in `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumBreakdown {
    pub total: f64,
    pub on_exceptional: f64,
    pub off_exceptional: f64,
    /// ν
    pub pairs: usize,
    /// ν_E
    pub exceptional_pairs: usize,
}

/// `Ξ` over `partition` split on/off `E`. With `use_extension` the integrand is
/// `D_ex F`, so the on-E part is exactly zero; otherwise the raw `f` is
/// evaluated at every tag.
pub fn riemann_sum(
    model: &SingularFunctionModel,
    partition: &TaggedPartition,
    use_extension: bool,
) -> Result<SumBreakdown, EvalError> {
    riemann_sum_of(partition.pairs(), |x| {
        if use_extension {
            model.derivative_ex(x)
        } else {
            model.derivative_raw(x)
        }
    }, |x| model.is_exceptional(x))
}

/// `Ξ_g` for an arbitrary integrand `g`, split by `in_set(tag)`.
pub fn riemann_sum_of(
    pairs: &[TaggedPair],
    mut integrand: impl FnMut(f64) -> Result<f64, EvalError>,
    in_set: impl Fn(f64) -> bool,
) -> Result<SumBreakdown, EvalError> {
    let (mut on, mut off) = (NeumaierSum::new(), NeumaierSum::new());
    let mut exceptional_pairs = 0;
    for p in pairs {
        let term = integrand(p.tag)? * p.width();
        if in_set(p.tag) {
            on += term;
            exceptional_pairs += 1;
        } else {
            off += term;
        }
    }
    let (on, off) = (on.value(), off.value());
    Ok(SumBreakdown {
        total: on + off,
        on_exceptional: on,
        off_exceptional: off,
        pairs: pairs.len(),
        exceptional_pairs,
    })
}

/// Pairwise `Σ_Φ` over an arbitrary collection of pairs (typically a
/// restriction), with compensated accumulation.
pub fn increment_sum(model: &SingularFunctionModel, pairs: &[TaggedPair]) -> Result<f64, EvalError> {
    let mut acc = NeumaierSum::new();
    for p in pairs {
        acc += model.increment(&p.interval)?;
    }
    Ok(acc.value())
}

/// `Σ_Φ(P)` for a full partition: the telescoped value `F_ex(b) − F_ex(a)`.
pub fn partition_increment(model: &SingularFunctionModel, partition: &TaggedPartition) -> Result<f64, EvalError> {
    model.increment(&partition.span())
}

/// One depth of the basic-sum sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicSumTerm {
    pub depth: usize,
    pub anchor_radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicSumOutcome {
    pub sequence: Vec<BasicSumTerm>,
    pub verdict: ConvergenceVerdict,
}

/// `s_n = Σ_{e ∈ E} [F_ex(e + r_n) − F_ex(e − r_n)]`, the E-restricted increment
/// sum of any anchored partition at depth `n`, classified as `n` grows.
pub fn basic_sum_sequence(
    model: &SingularFunctionModel,
    schedule: &RefinementSchedule,
    opts: &SequenceOptions,
) -> BasicSumOutcome {
    let mut classifier = Classifier::new(*opts);
    let mut sequence = Vec::new();
    let points = model.exceptional().points();
    let span = model.span();
    let mut diagnostic = None;
    for n in 0..=opts.max_depth {
        let r = schedule.anchor_radius(n);
        let anchors = match anchor_layout(&span, points, r) {
            Ok(a) => a,
            Err(e) => {
                diagnostic = Some(format!("depth {n}: {e}"));
                break;
            }
        };
        if anchors.iter().any(|a| a.lo == a.point || a.hi == a.point) {
            diagnostic = Some(format!("depth {n}: anchor radius {r:e} below the resolution of E"));
            break;
        }
        let mut acc = NeumaierSum::new();
        let mut failed = None;
        for a in &anchors {
            match Interval::new(a.lo, a.hi).map(|i| model.increment(&i)) {
                Ok(Ok(v)) => acc += v,
                Ok(Err(e)) => failed = Some(format!("depth {n}: {e}")),
                Err(e) => failed = Some(format!("depth {n}: {e}")),
            }
        }
        if failed.is_some() {
            diagnostic = failed;
            break;
        }
        let value = acc.value();
        sequence.push(BasicSumTerm { depth: n, anchor_radius: r, value });
        if let Some(v) = classifier.observe(DepthValue { depth: n, value }) {
            return BasicSumOutcome { sequence, verdict: v };
        }
    }
    BasicSumOutcome { sequence, verdict: classifier.finish(diagnostic) }
}
