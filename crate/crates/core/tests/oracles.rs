//! Catalog models against their closed-form decompositions.

use gauge_core::funcdsl::{catalog, catalog_entry, Oracle, CATALOG_NAMES};
use gauge_core::integrator::ResidueError;
use gauge_core::model::{consistency_check, residual_estimate};
use gauge_core::summation::basic_sum_sequence;
use gauge_core::{
    decompose, plain_kh, residue_check, total_kh, BuildLimits, ConvergenceVerdict, DecomposeOptions,
    RefinementSchedule, SequenceOptions, Sign, TotalOptions,
};

fn anchors() -> SequenceOptions {
    DecomposeOptions::default().anchors
}

/// Plain KH traces against `∫ f` over the span minus the anchors, which the
/// straddle bound pins to within `ε_n·(b − a)`.
fn check_kh_trace(name: &str, depth: usize, off_anchor_integral: impl Fn(f64) -> f64) {
    let m = catalog(name).unwrap();
    let schedule = RefinementSchedule::for_model(&m).with_epsilon_decay(1);
    let out = plain_kh(&m, &schedule, &SequenceOptions::default().with_max_depth(depth), &BuildLimits::default());
    assert!(!out.sequence.is_empty());
    let len = m.span().length();
    for t in &out.sequence {
        let expected = off_anchor_integral(t.params.anchor_radius);
        let slack = t.params.epsilon * len + 1e-12 * (1.0 + expected.abs());
        assert!((t.value - expected).abs() <= slack, "{name} depth {}: {} vs {expected}", t.depth, t.value);
    }
}

#[test]
fn plain_kh_traces() {
    check_kh_trace("parabola", 6, |r| 1.0 - 2.0 * r);
    check_kh_trace("jump_linear", 8, |r| 2.0 - 2.0 * r);
    check_kh_trace("sqrt_singular", 5, |r| 2.0 - 2.0 * r.sqrt());
    check_kh_trace("reciprocal", 2, |r| 1.5 - 2.0 / r);
    check_kh_trace("heaviside", 6, |_| 0.0);
}

#[test]
fn reciprocal_plain_kh_grows_like_the_anchor_scale() {
    let m = catalog("reciprocal").unwrap();
    let out = plain_kh(&m, &RefinementSchedule::for_model(&m), &SequenceOptions::default(), &BuildLimits::default());
    let values: Vec<f64> = out.sequence.iter().map(|t| t.value).collect();
    assert!(values.len() >= 3);
    assert!(values.windows(2).all(|w| w[1] < w[0] && (w[1] - 1.5) / (w[0] - 1.5) > 1.9));
    match &out.verdict {
        ConvergenceVerdict::Diverged { sign, .. } => assert_eq!(*sign, Sign::Negative),
        ConvergenceVerdict::Inconclusive { diagnostic, .. } => {
            assert!(diagnostic.as_deref().unwrap_or("").contains("budget"))
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn totals_are_verified_for_every_catalog_model() {
    for name in CATALOG_NAMES {
        let entry = catalog_entry(name).unwrap();
        let m = entry.model();
        let opts = if name == "osc_sin_inv" {
            // The default radius leaves cells near 0 where F(x + w) − F(x)
            // is pure rounding noise.
            TotalOptions { anchor_radius: Some(0.1), ..TotalOptions::default() }
        } else {
            TotalOptions::default()
        };
        let report = total_kh(&m, &opts).unwrap();
        assert_eq!(report.total, entry.total, "{name}");
        assert!(report.verified, "{name}: {:?}", report.rows);
        for row in &report.rows {
            let stats = row.outcome.as_ref().unwrap();
            assert!(stats.residual <= stats.straddle_error * (1.0 + 1e-12) + 1e-15, "{name}");
            assert!(stats.straddle_error <= row.bound, "{name}");
        }
    }
}

#[test]
fn basic_sums_and_residuals_match_the_catalog() {
    for name in CATALOG_NAMES {
        let entry = catalog_entry(name).unwrap();
        let m = entry.model();
        let schedule = RefinementSchedule::for_model(&m);
        let basic = basic_sum_sequence(&m, &schedule, &anchors());
        check_oracle(name, &basic.verdict, entry.basic_sum);
        for (e, oracle) in entry.exceptional.iter().zip(entry.residuals) {
            let r = residual_estimate(&m, *e, &schedule, &anchors());
            check_oracle(name, &r.verdict, *oracle);
        }
    }
}

fn check_oracle(name: &str, verdict: &ConvergenceVerdict, oracle: Oracle) {
    match (oracle, verdict) {
        (Oracle::Value(v), ConvergenceVerdict::Converged { value, .. }) => {
            assert!((value - v).abs() <= 1e-9, "{name}: {value} vs {v}")
        }
        (Oracle::Diverges(s), ConvergenceVerdict::Diverged { sign, .. }) => assert_eq!(*sign, s, "{name}"),
        (Oracle::Oscillates, ConvergenceVerdict::Inconclusive { .. }) => {}
        _ => panic!("{name}: {verdict:?} against {oracle:?}"),
    }
}

#[test]
fn oscillating_brackets_follow_the_sine() {
    let m = catalog("osc_sin_inv").unwrap();
    let schedule = RefinementSchedule::for_model(&m);
    let out = basic_sum_sequence(&m, &schedule, &anchors());
    assert!(out.sequence.len() > 20);
    for t in &out.sequence {
        let expected = 2.0 * libm::sin(1.0 / t.anchor_radius);
        assert!((t.value - expected).abs() <= 1e-12, "depth {}", t.depth);
    }
}

#[test]
fn decompositions_of_the_cheap_oracles() {
    for (name, a, rr) in [("heaviside", 0.0, 1.0), ("jump_linear", 2.0, 2.0), ("staircase3", 0.0, 1.25), ("parabola", 1.0, 0.0)] {
        let m = catalog(name).unwrap();
        let report = decompose(&m, &DecomposeOptions::default()).unwrap();
        assert!(report.flags.is_empty(), "{name}: {:?}", report.flags);
        assert!((report.kh.verdict.value().unwrap() - a).abs() <= 1e-5, "{name}");
        assert!((report.basic_sum.verdict.value().unwrap() - rr).abs() <= 1e-9, "{name}");
        assert!(report.identity_gap.unwrap() <= 1e-5, "{name}");
        assert_eq!(report.identity_holds(), Some(true), "{name}");
        assert!(report.residual_sum_gap.unwrap() <= 1e-9, "{name}");
    }
}

#[test]
fn continuous_shift_leaves_the_decomposition_alone() {
    let m = catalog("parabola").unwrap();
    let base = decompose(&m, &DecomposeOptions::default()).unwrap();
    let shifted = decompose(&m.shifted(3.25), &DecomposeOptions::default()).unwrap();
    assert_eq!(shifted.total.total, base.total.total);
    let a = |r: &gauge_core::DecompositionReport| r.kh.verdict.value().unwrap();
    let rr = |r: &gauge_core::DecompositionReport| r.basic_sum.verdict.value().unwrap();
    assert!((a(&shifted) - a(&base)).abs() <= 1e-9);
    assert!((rr(&shifted) - rr(&base)).abs() <= 1e-9);
}

#[test]
fn residue_identity_on_step_functions() {
    let opts = DecomposeOptions::default();
    for name in ["heaviside", "staircase3"] {
        let report = residue_check(&catalog(name).unwrap(), &opts).unwrap();
        assert_eq!(report.gap, Some(0.0), "{name}");
    }
    let staircase = residue_check(&catalog("staircase3").unwrap(), &opts).unwrap();
    assert_eq!(staircase.lhs, 1.25);
    let values: Vec<f64> = staircase.residuals.iter().map(|r| r.verdict.value().unwrap()).collect();
    assert_eq!(values, [0.5, 1.0, -0.25]);

    for name in ["parabola", "jump_linear", "reciprocal"] {
        match residue_check(&catalog(name).unwrap(), &opts) {
            Err(ResidueError::NotLocallyConstant { derivative, .. }) => assert_ne!(derivative, 0.0),
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn catalog_derivatives_are_consistent() {
    // sin(1/x) oscillates faster than any sampling step near 0.
    for name in CATALOG_NAMES.into_iter().filter(|n| *n != "osc_sin_inv") {
        let warnings = consistency_check(&catalog(name).unwrap(), 200, 7);
        assert!(warnings.is_empty(), "{name}: {warnings:?}");
    }
}
