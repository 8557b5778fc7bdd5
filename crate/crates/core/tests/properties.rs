use gauge_core::builder::{anchored_gauge, build_anchored, build_cousin, build_straddle_verified, walk_straddle_verified};
use gauge_core::funcdsl::catalog;
use gauge_core::partition::validate;
use gauge_core::summation::{increment_sum, partition_increment, riemann_sum, riemann_sum_of};
use gauge_core::{
    total_kh, BuildLimits, Gauge, Interval, SingularFunctionModel, TagPolicy, TaggedPair, TaggedPartition,
    TotalOptions,
};
use proptest::prelude::*;

fn smooth_model(span: Interval, points: &[f64]) -> SingularFunctionModel {
    SingularFunctionModel::from_fns(
        |x| libm::sin(3.0 * x) + 0.5 * x * x,
        |x| 3.0 * libm::cos(3.0 * x) + x,
        points,
        span,
        "sin 3x + x^2/2",
    )
    .unwrap()
}

/// A valid partition of `[a, a + len]` from sorted cut fractions and tag
/// fractions; every exceptional point is placed as a cut and as a tag.
fn partition_strategy() -> impl Strategy<Value = (TaggedPartition, Vec<f64>)> {
    (
        -10.0f64..10.0,
        0.01f64..20.0,
        prop::collection::vec(0.0f64..1.0, 1..60),
        prop::collection::vec(0.0f64..=1.0, 60),
        0usize..4,
    )
        .prop_map(|(a, len, mut cuts, tags, n_exc)| {
            let b = a + len;
            cuts.sort_by(f64::total_cmp);
            let mut nodes = vec![a];
            for c in cuts {
                let x = a + c * len;
                if x > *nodes.last().unwrap() && x < b {
                    nodes.push(x);
                }
            }
            nodes.push(b);
            let interior: Vec<f64> = nodes[1..nodes.len() - 1].to_vec();
            let exceptional: Vec<f64> = interior.iter().step_by(3).take(n_exc).copied().collect();
            let pairs = nodes
                .windows(2)
                .zip(tags.iter().cycle())
                .map(|(w, &t)| {
                    let tag = if exceptional.contains(&w[0]) {
                        w[0]
                    } else {
                        let t = (w[0] + t * (w[1] - w[0])).clamp(w[0], w[1]);
                        if exceptional.contains(&t) { 0.5 * (w[0] + w[1]) } else { t }
                    };
                    TaggedPair::new(Interval::new(w[0], w[1]).unwrap(), tag)
                })
                .collect();
            let span = Interval::new(a, b).unwrap();
            (TaggedPartition::new(span, pairs).unwrap(), exceptional)
        })
}

fn abs_sum(model: &SingularFunctionModel, pairs: &[TaggedPair]) -> f64 {
    pairs.iter().map(|p| model.increment(&p.interval).unwrap().abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn increment_sum_telescopes((p, e) in partition_strategy()) {
        let m = smooth_model(p.span(), &e);
        let pairwise = increment_sum(&m, p.pairs()).unwrap();
        let closed = m.primitive_ex(p.span().hi()).unwrap() - m.primitive_ex(p.span().lo()).unwrap();
        prop_assert_eq!(partition_increment(&m, &p).unwrap(), closed);
        let tol = 1e-13 * (1.0 + abs_sum(&m, p.pairs()));
        prop_assert!((pairwise - closed).abs() <= tol, "{} vs {}", pairwise, closed);
    }

    #[test]
    fn restriction_is_additive((p, e) in partition_strategy()) {
        let m = smooth_model(p.span(), &e);
        let r = p.restrict(&e);
        prop_assert_eq!(r.on.len() + r.off.len(), p.len());
        prop_assert_eq!(r.on.len(), e.len());
        prop_assert!(r.on.iter().all(|q| e.contains(&q.tag)));
        prop_assert!(r.off.iter().all(|q| !e.contains(&q.tag)));

        let whole = increment_sum(&m, p.pairs()).unwrap();
        let parts = increment_sum(&m, &r.on).unwrap() + increment_sum(&m, &r.off).unwrap();
        let tol = 1e-13 * (1.0 + abs_sum(&m, p.pairs()));
        prop_assert!((whole - parts).abs() <= tol);

        let xi = riemann_sum(&m, &p, true).unwrap();
        prop_assert_eq!(xi.on_exceptional, 0.0);
        prop_assert_eq!(xi.exceptional_pairs, e.len());
        prop_assert_eq!(xi.total, xi.off_exceptional);
    }

    #[test]
    fn riemann_sum_is_linear((p, _e) in partition_strategy(), alpha in -5.0f64..5.0, beta in -5.0f64..5.0) {
        let f = |x: f64| libm::cos(x);
        let g = |x: f64| x * x - 1.0;
        let sum = |h: &dyn Fn(f64) -> f64| riemann_sum_of(p.pairs(), |x| Ok(h(x)), |_| false).unwrap().total;
        let combined = sum(&|x| alpha * f(x) + beta * g(x));
        let separate = alpha * sum(&f) + beta * sum(&g);
        let scale = 1.0 + sum(&|x| (alpha * f(x)).abs() + (beta * g(x)).abs());
        prop_assert!((combined - separate).abs() <= 1e-12 * scale);
    }

    #[test]
    fn fineness_is_monotone_in_the_gauge((p, _e) in partition_strategy(), d in 1e-3f64..30.0, k in 1.0f64..4.0) {
        let small = Gauge::constant(d);
        let large = Gauge::constant(d * k);
        if p.is_fine(&small) {
            prop_assert!(p.is_fine(&large));
        }
        let widest = p.pairs().iter().map(|q| q.width()).fold(0.0, f64::max);
        prop_assert!(p.is_fine(&Gauge::constant(2.0 * widest + 1.0)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cousin_builds_are_fine(seed in any::<u64>()) {
        let span = Interval::new(-1.0, 1.0).unwrap();
        let gauge = Gauge::from_fn(|x: f64| x.abs().max(0.1));
        for policy in [TagPolicy::Random(seed), TagPolicy::Left, TagPolicy::Midpoint] {
            let p = build_cousin(span, &gauge, policy).unwrap();
            prop_assert!(validate(p.pairs(), &span).is_ok());
            prop_assert!(p.is_fine(&gauge));
        }
    }

    #[test]
    fn cousin_builds_follow_rough_gauges(seed in any::<u64>(), freq in 1.0f64..50.0) {
        let span = Interval::new(0.0, 3.0).unwrap();
        let gauge = Gauge::from_fn(move |x: f64| 1e-3 + 0.05 * (1.0 + libm::sin(freq * x)));
        let p = build_cousin(span, &gauge, TagPolicy::Random(seed)).unwrap();
        prop_assert!(validate(p.pairs(), &span).is_ok());
        prop_assert!(p.is_fine(&gauge));
    }

    #[test]
    fn anchored_builds_isolate_anchors(seed in any::<u64>()) {
        let mut rng = seed;
        let mut next = move || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        let span = Interval::new(-2.0, 3.0).unwrap();
        let mut points: Vec<f64> = (0..1 + (seed % 4) as usize).map(|_| -1.9 + 4.8 * next()).collect();
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() < 0.05);
        let gaps = points.windows(2).map(|w| w[1] - w[0]).chain([points[0] + 2.0, 3.0 - points[points.len() - 1]]);
        let r = 0.4 * gaps.fold(f64::INFINITY, f64::min);
        let h = 1e-3 + 0.2 * next();
        let p = build_anchored(span, &points, r, h).unwrap();
        prop_assert!(validate(p.pairs(), &span).is_ok());
        prop_assert!(p.is_fine(&anchored_gauge(&points, r, h)));
        for e in &points {
            let holders: Vec<&TaggedPair> = p.pairs().iter().filter(|q| q.lo() <= *e && *e <= q.hi()).collect();
            prop_assert_eq!(holders.len(), 1);
            prop_assert_eq!(holders[0].tag, *e);
        }
        prop_assert_eq!(build_anchored(span, &points, r, h).unwrap(), p);
    }

    #[test]
    fn straddle_builds_meet_their_bound(name in prop::sample::select(vec!["parabola", "sqrt_singular", "reciprocal", "jump_linear"]), k in 1u32..4, anchor in 0.2f64..0.45) {
        let m = catalog(name).unwrap();
        let span = m.span();
        let eps = 10f64.powi(-(k as i32));
        let r = anchor.min(0.45 * span.length());
        let p = build_straddle_verified(&m, r, span.length(), eps, &BuildLimits::default()).unwrap();
        prop_assert!(validate(p.pairs(), &span).is_ok());
        let rewalk: f64 = p
            .pairs()
            .iter()
            .filter(|q| !m.is_exceptional(q.tag))
            .map(|q| {
                let inc = m.primitive(q.hi()).unwrap() - m.primitive(q.lo()).unwrap();
                (inc - m.derivative(q.tag).unwrap() * q.width()).abs()
            })
            .sum();
        prop_assert!(rewalk <= eps * span.length(), "{} > {}", rewalk, eps * span.length());

        let mut streamed = 0.0;
        let count = walk_straddle_verified(&m, r, span.length(), eps, &BuildLimits::default(), |q, step| {
            if let Some(s) = step {
                streamed += s.error(q.width());
            }
        })
        .unwrap();
        prop_assert_eq!(count, p.len());
        prop_assert_eq!(streamed, rewalk);
    }
}

#[test]
fn total_is_scale_equivariant() {
    let m = catalog("reciprocal").unwrap();
    let base = total_kh(&m, &TotalOptions { anchor_radius: Some(0.1), ..TotalOptions::default() }).unwrap();
    for c in [2.0, -3.0, 0.125, 7.5] {
        let scaled = m.scaled(c);
        let opts = TotalOptions {
            anchor_radius: Some(0.1),
            epsilons: base.rows.iter().map(|row| row.epsilon * c.abs()).collect(),
            ..TotalOptions::default()
        };
        let report = total_kh(&scaled, &opts).unwrap();
        assert!((report.total - c * base.total).abs() <= f64::EPSILON * (c * base.total).abs());
        assert!(report.verified);
        // Power-of-two factors scale every straddle check exactly.
        if libm::log2(c.abs()).fract() == 0.0 {
            for (row, base_row) in report.rows.iter().zip(&base.rows) {
                let (s, b) = (row.outcome.as_ref().unwrap(), base_row.outcome.as_ref().unwrap());
                assert_eq!(s.pairs, b.pairs, "c = {c}");
                assert_eq!(s.residual, c.abs() * b.residual, "c = {c}");
            }
        }
    }
}

#[test]
fn total_ignores_constant_shifts() {
    let m = catalog("parabola").unwrap();
    let base = total_kh(&m, &TotalOptions::default()).unwrap().total;
    for c in [2.0, -0.5, 1024.0] {
        assert_eq!(total_kh(&m.shifted(c), &TotalOptions::default()).unwrap().total, base);
    }
    for c in [0.1, -3.7, 1e3 / 7.0] {
        let shifted = total_kh(&m.shifted(c), &TotalOptions::default()).unwrap().total;
        assert!((shifted - base).abs() <= 4.0 * f64::EPSILON * (1.0 + c.abs()));
    }
}

#[test]
fn total_does_not_depend_on_the_partition() {
    let m = catalog("jump_linear").unwrap();
    let values: Vec<u64> = [0.01, 0.1, 0.3, 0.9]
        .into_iter()
        .map(|r| total_kh(&m, &TotalOptions { anchor_radius: Some(r), ..TotalOptions::default() }).unwrap().total.to_bits())
        .collect();
    assert!(values.windows(2).all(|w| w[0] == w[1]));
}
