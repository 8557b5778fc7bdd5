//! Top-level limit processes.
//!
//! * [`total_kh`]: the total integral `ℑ` with per-ε verification of
//!   `|Ξ_{D_ex F}(P) − Σ_Φ(P|_{[a,b]∖E})| ≤ ε·(b − a)` on straddle-verified
//!   partitions, `Φ` being the interval function of `F_ex`.
//! * [`plain_kh`]: the ordinary KH integral `A` of `D_ex F`, estimated from
//!   Riemann sums as both `ε_n` and `r_n` shrink.
//! * [`decompose`]: `ℑ`, `A`, the basic sum `ℜ`, the residual table and the gap
//!   `|ℑ − (A + ℜ)|`.
//! * [`residue_check`]: `F(b) − F(a) = Σ_{e∈E} R(e)` for models whose
//!   derivative vanishes off `E`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::builder::{build_straddle_verified, walk_straddle_verified, BuildError, BuildLimits, DepthParams, RefinementSchedule};
use crate::model::{residual_estimate, EvalError, ResidualEstimate, SingularFunctionModel};
use crate::summation::{
    basic_sum_sequence, increment_sum, partition_increment, riemann_sum, BasicSumOutcome, NeumaierSum,
};
use crate::verdict::{Classifier, ConvergenceVerdict, DepthValue, SequenceOptions};

pub const DEFAULT_EPSILONS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Anchor sequences are cheap closed-form evaluations, so they run deeper
/// than the Riemann-sum sequence: with `r_n = r₀·2⁻ⁿ` a pole `1/x` needs
/// `n ≈ 37` before `2/r_n` passes the default divergence threshold.
pub const DEFAULT_ANCHOR_DEPTH: usize = 48;
pub const DEFAULT_KH_EPSILON_DECAY: u32 = 1;
/// Stratified samples used to check `f ≡ 0` off `E`.
pub const LOCAL_CONSTANCY_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TotalOptions {
    pub epsilons: Vec<f64>,
    /// Fixed anchor radius; defaults to the schedule's `r₀`.
    pub anchor_radius: Option<f64>,
    /// Cell width cap; defaults to `b − a`.
    pub mesh: Option<f64>,
    pub limits: BuildLimits,
}

impl Default for TotalOptions {
    fn default() -> Self {
        TotalOptions {
            epsilons: DEFAULT_EPSILONS.to_vec(),
            anchor_radius: None,
            mesh: None,
            limits: BuildLimits::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowStats {
    /// `|Ξ_{D_ex F}(P) − Σ_Φ(P|_{[a,b]∖E})|`.
    pub residual: f64,
    /// `Σ` over off-E pairs of `|F(b_i) − F(a_i) − f(x_i)(b_i − a_i)|`.
    pub straddle_error: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    pub epsilon: f64,
    /// `ε·(b − a)`.
    pub bound: f64,
    pub anchor_radius: f64,
    pub outcome: Result<RowStats, BuildError>,
}

impl VerificationRow {
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(s) if s.residual <= self.bound)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalReport {
    /// `ℑ = F_ex(b) − F_ex(a)`.
    pub total: f64,
    pub rows: Vec<VerificationRow>,
    pub verified: bool,
}

/// Total KH integral of `D_ex F` with per-ε verification.
pub fn total_kh(model: &SingularFunctionModel, opts: &TotalOptions) -> Result<TotalReport, EvalError> {
    let span = model.span();
    let total = model.increment(&span)?;
    let radius = opts.anchor_radius.unwrap_or_else(|| RefinementSchedule::for_model(model).radius0);
    let mesh = opts.mesh.unwrap_or(span.length());
    let rows: Vec<VerificationRow> = opts
        .epsilons
        .iter()
        .map(|&epsilon| VerificationRow {
            epsilon,
            bound: epsilon * span.length(),
            anchor_radius: radius,
            outcome: verify_row(model, radius, mesh, epsilon, &opts.limits, total),
        })
        .collect();
    let verified = !rows.is_empty() && rows.iter().all(VerificationRow::passed);
    Ok(TotalReport { total, rows, verified })
}

fn verify_row(
    model: &SingularFunctionModel,
    radius: f64,
    mesh: f64,
    epsilon: f64,
    limits: &BuildLimits,
    total: f64,
) -> Result<RowStats, BuildError> {
    let partition = build_straddle_verified(model, radius, mesh, epsilon, limits)?;
    // Σ_Φ(P) telescopes to ℑ for every partition.
    debug_assert_eq!(partition_increment(model, &partition), Ok(total));
    let xi = riemann_sum(model, &partition, true)?;
    let restricted = partition.restrict(model.exceptional().points());
    let sigma_off = increment_sum(model, &restricted.off)?;
    let mut straddle = NeumaierSum::new();
    for p in &restricted.off {
        let err = model.increment(&p.interval)? - model.derivative_ex(p.tag)? * p.width();
        straddle += err.abs();
    }
    Ok(RowStats {
        residual: (xi.total - sigma_off).abs(),
        straddle_error: straddle.value(),
        pairs: partition.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlainKhTerm {
    pub depth: usize,
    pub params: DepthParams,
    pub value: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlainKhOutcome {
    pub sequence: Vec<PlainKhTerm>,
    pub verdict: ConvergenceVerdict,
}

/// `Ξ_{D_ex F}(P_n)` over straddle-verified partitions at `(h_n, r_n, ε_n)`.
///
/// A build failure ends the sequence; if no verdict was reached by then the
/// result is inconclusive and carries the failure as its diagnostic.
pub fn plain_kh(
    model: &SingularFunctionModel,
    schedule: &RefinementSchedule,
    opts: &SequenceOptions,
    limits: &BuildLimits,
) -> PlainKhOutcome {
    let mut classifier = Classifier::new(*opts);
    let mut sequence = Vec::new();
    let mut diagnostic = None;
    for n in 0..=opts.max_depth {
        let params = schedule.at(n);
        let mut xi = NeumaierSum::new();
        let walked = walk_straddle_verified(
            model,
            params.anchor_radius,
            params.mesh,
            params.epsilon,
            limits,
            |pair, step| {
                // D_ex F vanishes on the anchor tags.
                if let Some(step) = step {
                    xi += step.slope * pair.width();
                }
            },
        );
        let pairs = match walked {
            Ok(p) => p,
            Err(e) => {
                diagnostic = Some(format!("depth {n}: {e}"));
                break;
            }
        };
        let value = xi.value();
        sequence.push(PlainKhTerm { depth: n, params, value, pairs });
        if let Some(v) = classifier.observe(DepthValue { depth: n, value }) {
            return PlainKhOutcome { sequence, verdict: v };
        }
    }
    PlainKhOutcome { sequence, verdict: classifier.finish(diagnostic) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    pub total: TotalOptions,
    /// Defaults to [`RefinementSchedule::for_model`].
    pub schedule: Option<RefinementSchedule>,
    /// Sequence options for the Riemann sums behind `A`.
    pub kh: SequenceOptions,
    /// `ε` halvings per depth for the partitions behind `A`, replacing the
    /// schedule's own rate. One halving keeps `ε_n` in step with `h_n` and
    /// `r_n`, so the leading error terms share a ratio and the pair count
    /// doubles rather than quadruples per depth.
    pub kh_epsilon_decay: u32,
    /// Sequence options for `ℜ` and the residuals `R(e)`.
    pub anchors: SequenceOptions,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            total: TotalOptions::default(),
            schedule: None,
            kh: SequenceOptions::default(),
            kh_epsilon_decay: DEFAULT_KH_EPSILON_DECAY,
            anchors: SequenceOptions::default().with_max_depth(DEFAULT_ANCHOR_DEPTH),
        }
    }
}

impl DecomposeOptions {
    pub fn schedule_for(&self, model: &SingularFunctionModel) -> RefinementSchedule {
        self.schedule.unwrap_or_else(|| RefinementSchedule::for_model(model))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub total: TotalReport,
    /// `A`.
    pub kh: PlainKhOutcome,
    /// `ℜ`.
    pub basic_sum: BasicSumOutcome,
    pub residuals: Vec<ResidualEstimate>,
    /// `|ℑ − (A + ℜ)|` when both `A` and `ℜ` converged.
    pub identity_gap: Option<f64>,
    /// `tol_A + tol_ℜ` plus both error estimates.
    pub identity_tolerance: Option<f64>,
    /// `|Σ R(e) − ℜ|` when every residual and `ℜ` converged.
    pub residual_sum_gap: Option<f64>,
    /// Inconsistencies between the verdicts, reported rather than hidden.
    pub flags: Vec<String>,
}

impl DecompositionReport {
    pub fn identity_holds(&self) -> Option<bool> {
        Some(self.identity_gap? <= self.identity_tolerance?)
    }
}

fn error_estimate(v: &ConvergenceVerdict) -> f64 {
    match v {
        ConvergenceVerdict::Converged { error_estimate, .. } => *error_estimate,
        _ => 0.0,
    }
}

pub fn decompose(model: &SingularFunctionModel, opts: &DecomposeOptions) -> Result<DecompositionReport, EvalError> {
    let schedule = opts.schedule_for(model);
    let total = total_kh(model, &opts.total)?;
    let kh_schedule = schedule.with_epsilon_decay(opts.kh_epsilon_decay);
    let kh = plain_kh(model, &kh_schedule, &opts.kh, &opts.total.limits);
    let basic_sum = basic_sum_sequence(model, &schedule, &opts.anchors);
    let residuals: Vec<ResidualEstimate> = model
        .exceptional()
        .points()
        .iter()
        .map(|&e| residual_estimate(model, e, &schedule, &opts.anchors))
        .collect();

    let mut flags = Vec::new();
    let (identity_gap, identity_tolerance) = match (kh.verdict.value(), basic_sum.verdict.value()) {
        (Some(a), Some(r)) => (
            Some((total.total - (a + r)).abs()),
            Some(opts.kh.tol + opts.anchors.tol + error_estimate(&kh.verdict) + error_estimate(&basic_sum.verdict)),
        ),
        _ => (None, None),
    };
    if let (Some(gap), Some(tol)) = (identity_gap, identity_tolerance) {
        if gap > tol {
            flags.push(format!("identity gap {gap:e} exceeds combined tolerance {tol:e}"));
        }
    }
    match (&kh.verdict, &basic_sum.verdict) {
        (ConvergenceVerdict::Converged { .. }, ConvergenceVerdict::Diverged { .. })
        | (ConvergenceVerdict::Diverged { .. }, ConvergenceVerdict::Converged { .. }) => flags.push(String::from(
            "exactly one of the plain integral and the basic sum converged",
        )),
        _ => {}
    }

    let residual_sum_gap = match basic_sum.verdict.value() {
        Some(r) if !residuals.is_empty() => {
            let values: Option<NeumaierSum> = residuals.iter().map(|e| e.verdict.value()).collect();
            values.map(|s| (s.value() - r).abs())
        }
        _ => None,
    };
    if let Some(gap) = residual_sum_gap {
        let tol = opts.anchors.tol * (residuals.len() as f64 + 1.0);
        if gap > tol {
            flags.push(format!("sum of residuals differs from the basic sum by {gap:e}"));
        }
    }

    Ok(DecompositionReport { total, kh, basic_sum, residuals, identity_gap, identity_tolerance, residual_sum_gap, flags })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueReport {
    /// `F(b) − F(a)`.
    pub lhs: f64,
    /// `Σ R(e)` when every residual converged.
    pub rhs: Option<f64>,
    pub gap: Option<f64>,
    pub residuals: Vec<ResidualEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResidueError {
    /// `f(x) ≠ 0` at a sampled point off `E`.
    NotLocallyConstant { x: f64, derivative: f64 },
    Evaluation(EvalError),
}

impl fmt::Display for ResidueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResidueError::NotLocallyConstant { x, derivative } => {
                write!(f, "f({x}) = {derivative} is not zero; the residue identity needs f = 0 off E")
            }
            ResidueError::Evaluation(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ResidueError {}

impl From<EvalError> for ResidueError {
    fn from(e: EvalError) -> Self {
        ResidueError::Evaluation(e)
    }
}

/// Stratified sample points strictly between consecutive nodes of `E ∪ {a, b}`.
pub fn stratified_samples(model: &SingularFunctionModel, count: usize) -> Vec<f64> {
    let span = model.span();
    let mut nodes = Vec::with_capacity(model.exceptional().len() + 2);
    nodes.push(span.lo());
    nodes.extend_from_slice(model.exceptional().points());
    nodes.push(span.hi());
    let segments = nodes.len() - 1;
    let per = (count / segments).max(1);
    let mut out = Vec::with_capacity(per * segments);
    for w in nodes.windows(2) {
        let (u, v) = (w[0], w[1]);
        for k in 0..per {
            let x = u + (v - u) * ((k as f64 + 0.5) / per as f64);
            if u < x && x < v {
                out.push(x);
            }
        }
    }
    out
}

pub fn residue_check(model: &SingularFunctionModel, opts: &DecomposeOptions) -> Result<ResidueReport, ResidueError> {
    for x in stratified_samples(model, LOCAL_CONSTANCY_SAMPLES) {
        let d = model.derivative(x)?;
        if d != 0.0 {
            return Err(ResidueError::NotLocallyConstant { x, derivative: d });
        }
    }
    let schedule = opts.schedule_for(model);
    let lhs = model.increment(&model.span())?;
    let residuals: Vec<ResidualEstimate> = model
        .exceptional()
        .points()
        .iter()
        .map(|&e| residual_estimate(model, e, &schedule, &opts.anchors))
        .collect();
    let rhs: Option<NeumaierSum> = residuals.iter().map(|r| r.verdict.value()).collect();
    let rhs = rhs.map(|s| s.value());
    Ok(ResidueReport { lhs, rhs, gap: rhs.map(|r| (lhs - r).abs()), residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Interval;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn heaviside() -> SingularFunctionModel {
        SingularFunctionModel::from_fns(|x| if x <= 0.0 { 0.0 } else { 1.0 }, |_| 0.0, &[0.0], iv(-1.0, 1.0), "H")
            .unwrap()
    }

    fn parabola() -> SingularFunctionModel {
        SingularFunctionModel::from_fns(|x| x * x, |x| 2.0 * x, &[0.5], iv(0.0, 1.0), "x^2").unwrap()
    }

    #[test]
    fn heaviside_total_has_zero_residual() {
        let r = total_kh(&heaviside(), &TotalOptions::default()).unwrap();
        assert_eq!(r.total, 1.0);
        assert!(r.verified);
        for row in &r.rows {
            assert_eq!(row.outcome.as_ref().unwrap().residual, 0.0);
        }
    }

    #[test]
    fn parabola_total_is_one() {
        let r = total_kh(&parabola(), &TotalOptions::default()).unwrap();
        assert_eq!(r.total, 1.0);
        assert!(r.verified, "{r:?}");
        for row in &r.rows {
            let s = row.outcome.as_ref().unwrap();
            assert!(s.straddle_error <= row.bound);
        }
    }

    #[test]
    fn failed_row_does_not_hide_others() {
        let m = parabola();
        let opts = TotalOptions {
            epsilons: alloc::vec![1e-2, 1e-9],
            limits: BuildLimits { max_pairs: 10_000, ..BuildLimits::default() },
            ..TotalOptions::default()
        };
        let r = total_kh(&m, &opts).unwrap();
        assert!(r.rows[0].passed());
        assert!(matches!(r.rows[1].outcome, Err(BuildError::BudgetExceeded(_))));
        assert!(!r.verified);
    }

    #[test]
    fn heaviside_plain_sum_is_exactly_zero() {
        let m = heaviside();
        let out = plain_kh(&m, &RefinementSchedule::for_model(&m), &SequenceOptions::default(), &BuildLimits::default());
        assert!(out.sequence.iter().all(|t| t.value == 0.0));
        assert_eq!(out.verdict.value(), Some(0.0));
    }

    #[test]
    fn residue_precondition() {
        let err = residue_check(&parabola(), &DecomposeOptions::default()).unwrap_err();
        assert!(matches!(err, ResidueError::NotLocallyConstant { .. }));
        let ok = residue_check(&heaviside(), &DecomposeOptions::default()).unwrap();
        assert_eq!((ok.lhs, ok.rhs, ok.gap), (1.0, Some(1.0), Some(0.0)));
    }

    #[test]
    fn stratified_samples_avoid_exceptional_points() {
        let m = SingularFunctionModel::from_fns(|_| 0.0, |_| 0.0, &[0.5, 1.5, 2.5], iv(0.0, 3.0), "0").unwrap();
        let s = stratified_samples(&m, LOCAL_CONSTANCY_SAMPLES);
        assert_eq!(s.len(), LOCAL_CONSTANCY_SAMPLES);
        assert!(s.iter().all(|x| !m.is_exceptional(*x) && m.span().contains(*x)));
    }
}
