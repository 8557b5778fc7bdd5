//! Classification of depth-indexed limit sequences.
//!
//! Every limit process in the crate (plain KH sums, basic sums, residual
//! brackets) yields a sequence `s_0, s_1, …` and is summarised as a
//! [`ConvergenceVerdict`].

use alloc::string::String;
use alloc::vec::Vec;

/// Consecutive in-tolerance deltas required for convergence.
pub const CONVERGENCE_RUN: usize = 3;
/// Depths of strictly increasing magnitude required for divergence.
pub const DIVERGENCE_RUN: usize = 5;
/// Largest contraction ratio `|Δs_n / Δs_{n−1}|` accepted by the Δ² step.
pub const MAX_ACCELERATION_RATIO: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthValue {
    pub depth: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceVerdict {
    Converged {
        value: f64,
        error_estimate: f64,
        depth: usize,
        /// The value came from the Δ²-accelerated sequence.
        accelerated: bool,
    },
    Diverged {
        sign: Sign,
        depth: usize,
    },
    Inconclusive {
        trace: Vec<DepthValue>,
        diagnostic: Option<String>,
    },
}

impl ConvergenceVerdict {
    pub fn value(&self) -> Option<f64> {
        match self {
            ConvergenceVerdict::Converged { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, ConvergenceVerdict::Converged { .. })
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, ConvergenceVerdict::Diverged { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, ConvergenceVerdict::Inconclusive { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConvergenceVerdict::Converged { .. } => "converged",
            ConvergenceVerdict::Diverged { .. } => "diverged",
            ConvergenceVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Depth range and thresholds shared by all limit sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceOptions {
    /// Last depth evaluated (inclusive).
    pub max_depth: usize,
    pub tol: f64,
    pub div_threshold: f64,
    /// Also test the Aitken Δ² transform of the sequence for convergence.
    pub accelerate: bool,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        SequenceOptions { max_depth: 20, tol: 1e-6, div_threshold: 1e12, accelerate: true }
    }
}

impl SequenceOptions {
    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }
}

/// Raw classification of a finished sequence: the first prefix with three
/// consecutive deltas within `tol` converges, the first prefix whose last five
/// magnitudes strictly increase and end above `div_threshold` diverges.
pub fn classify(sequence: &[DepthValue], tol: f64, div_threshold: f64) -> ConvergenceVerdict {
    classify_with(
        sequence,
        &SequenceOptions { max_depth: usize::MAX, tol, div_threshold, accelerate: false },
    )
}

pub fn classify_with(sequence: &[DepthValue], opts: &SequenceOptions) -> ConvergenceVerdict {
    let mut c = Classifier::new(*opts);
    for dv in sequence {
        if let Some(v) = c.observe(*dv) {
            return v;
        }
    }
    c.finish(None)
}

/// Incremental form of [`classify_with`], so producers can stop at the first
/// decided depth.
#[derive(Debug, Clone)]
pub struct Classifier {
    opts: SequenceOptions,
    trace: Vec<DepthValue>,
    accelerated: Vec<Option<f64>>,
}

impl Classifier {
    pub fn new(opts: SequenceOptions) -> Self {
        Classifier { opts, trace: Vec::new(), accelerated: Vec::new() }
    }

    pub fn trace(&self) -> &[DepthValue] {
        &self.trace
    }

    pub fn observe(&mut self, dv: DepthValue) -> Option<ConvergenceVerdict> {
        self.trace.push(dv);
        let k = self.trace.len() - 1;
        let accel = self.aitken(k);
        self.accelerated.push(accel);

        if let Some(err) = self.raw_run(k) {
            return Some(ConvergenceVerdict::Converged {
                value: dv.value,
                error_estimate: err,
                depth: dv.depth,
                accelerated: false,
            });
        }
        if self.diverges(k) {
            return Some(ConvergenceVerdict::Diverged { sign: Sign::of(dv.value), depth: dv.depth });
        }
        if self.opts.accelerate {
            if let Some((value, err)) = self.accelerated_run(k) {
                return Some(ConvergenceVerdict::Converged {
                    value,
                    error_estimate: err,
                    depth: dv.depth,
                    accelerated: true,
                });
            }
        }
        None
    }

    pub fn finish(self, diagnostic: Option<String>) -> ConvergenceVerdict {
        ConvergenceVerdict::Inconclusive { trace: self.trace, diagnostic }
    }

    fn raw_run(&self, k: usize) -> Option<f64> {
        if k < CONVERGENCE_RUN {
            return None;
        }
        let mut worst = 0.0f64;
        for j in (k + 1 - CONVERGENCE_RUN)..=k {
            let d = (self.trace[j].value - self.trace[j - 1].value).abs();
            if !(d <= self.opts.tol) {
                return None;
            }
            worst = worst.max(d);
        }
        Some(worst)
    }

    fn diverges(&self, k: usize) -> bool {
        if k + 1 < DIVERGENCE_RUN {
            return false;
        }
        let last = self.trace[k].value.abs();
        if !(last > self.opts.div_threshold) {
            return false;
        }
        ((k + 2 - DIVERGENCE_RUN)..=k)
            .all(|j| self.trace[j].value.abs() > self.trace[j - 1].value.abs())
    }

    fn aitken(&self, k: usize) -> Option<f64> {
        if k < 2 {
            return None;
        }
        let (s0, s1, s2) = (self.trace[k - 2].value, self.trace[k - 1].value, self.trace[k].value);
        let d1 = s1 - s0;
        let d2 = s2 - s1;
        if d2 == 0.0 {
            return Some(s2);
        }
        if d1 == 0.0 {
            return None;
        }
        let ratio = d2 / d1;
        if !(ratio.abs() <= MAX_ACCELERATION_RATIO) {
            return None;
        }
        let v = s2 - d2 * d2 / (d2 - d1);
        v.is_finite().then_some(v)
    }

    fn accelerated_run(&self, k: usize) -> Option<(f64, f64)> {
        if k < CONVERGENCE_RUN + 2 {
            return None;
        }
        let mut worst = 0.0f64;
        for j in (k + 1 - CONVERGENCE_RUN)..=k {
            let (a, b) = (self.accelerated[j]?, self.accelerated[j - 1]?);
            let d = (a - b).abs();
            if !(d <= self.opts.tol) {
                return None;
            }
            worst = worst.max(d);
        }
        Some((self.accelerated[k]?, worst))
    }
}

/// Numbers `values` as depths 0, 1, 2, ...
pub fn trace_of(values: &[f64]) -> Vec<DepthValue> {
    values.iter().enumerate().map(|(depth, &value)| DepthValue { depth, value }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_converges_at_depth_three() {
        let v = classify(&trace_of(&[1.0, 1.0, 1.0, 1.0]), 1e-6, 1e12);
        assert_eq!(
            v,
            ConvergenceVerdict::Converged { value: 1.0, error_estimate: 0.0, depth: 3, accelerated: false }
        );
    }

    #[test]
    fn powers_of_ten_diverge_past_threshold() {
        let values: Vec<f64> = (1..=15).map(|k| libm::pow(10.0, k as f64)).collect();
        match classify(&trace_of(&values), 1e-6, 1e12) {
            ConvergenceVerdict::Diverged { sign, depth } => {
                assert_eq!(sign, Sign::Positive);
                // 10^13 is the first value above the threshold.
                assert_eq!(depth, 12);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn negative_growth_diverges_with_negative_sign() {
        let values: Vec<f64> = (0..40).map(|k| -libm::pow(2.0, k as f64)).collect();
        assert!(matches!(
            classify(&trace_of(&values), 1e-6, 1e9),
            ConvergenceVerdict::Diverged { sign: Sign::Negative, .. }
        ));
    }

    #[test]
    fn oscillating_closed_form_is_inconclusive() {
        // 2·sin(1/r_n) with r_n = 0.1·2^-n.
        let values: Vec<f64> = (0..=48).map(|n| 2.0 * libm::sin(1.0 / (0.1 * libm::ldexp(1.0, -n)))).collect();
        let opts = SequenceOptions { max_depth: 48, ..SequenceOptions::default() };
        let v = classify_with(&trace_of(&values), &opts);
        match v {
            ConvergenceVerdict::Inconclusive { trace, .. } => assert_eq!(trace.len(), 49),
            other => panic!("expected inconclusive, got {other:?}"),
        }
    }

    #[test]
    fn short_sequence_is_inconclusive() {
        assert!(classify(&trace_of(&[1.0, 1.0]), 1e-6, 1e12).is_inconclusive());
    }

    #[test]
    fn geometric_tail_needs_acceleration() {
        // s_n = 2 − 0.3·(1/√2)^n: raw deltas stay above 1e-6 for 40 depths.
        let values: Vec<f64> = (0..=20).map(|n| 2.0 - 0.3 * libm::pow(0.5f64.sqrt(), n as f64)).collect();
        let raw = classify(&trace_of(&values), 1e-6, 1e12);
        assert!(raw.is_inconclusive());
        let acc = classify_with(&trace_of(&values), &SequenceOptions::default());
        match acc {
            ConvergenceVerdict::Converged { value, accelerated, .. } => {
                assert!(accelerated);
                assert!((value - 2.0).abs() < 1e-12);
            }
            other => panic!("expected accelerated convergence, got {other:?}"),
        }
    }

    #[test]
    fn expanding_sequence_is_never_accelerated() {
        // Δ² maps c·2^n to 0; the ratio guard must refuse it.
        let values: Vec<f64> = (0..=20).map(|n| libm::ldexp(1.0, n)).collect();
        let v = classify_with(&trace_of(&values), &SequenceOptions::default());
        assert!(v.is_inconclusive());
    }
}
