use std::sync::Arc;

use fraclog_core::verify::{pnp_gaps, scalar_inequality_gap, t_monotonicity_pairing};
use fraclog_core::*;
use proptest::prelude::*;

fn interval(a: f64, b: f64, n: usize) -> Arc<Grid> {
    Arc::new(build_grid(DomainSpec::Interval { a, b }, n).unwrap())
}

fn weights(grid: Arc<Grid>, s: f64, p: f64) -> KernelWeights {
    let dim = grid.dim() as i64;
    let n = dim as f64;
    let r = 1.5 + 0.5 * (n * p / (n - p * s) - 1.5);
    let params = validate_params(RawParams { dim, s, p, q: 1.5, r }).unwrap();
    assemble(grid, &params).unwrap()
}

fn func(grid: &Arc<Grid>, vals: &[f64]) -> DiscreteFunction {
    DiscreteFunction::new(grid.clone(), vals[..grid.len()].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cell_measures_sum_to_domain(
        a in -5.0f64..5.0, len in 0.01f64..10.0, h in 0.01f64..10.0, n in 1usize..40, planar in any::<bool>()
    ) {
        let domain = if planar {
            DomainSpec::Rectangle { x0: a, x1: a + len, y0: -a, y1: -a + h }
        } else {
            DomainSpec::Interval { a, b: a + len }
        };
        let g = build_grid(domain, n).unwrap();
        let total = g.total_measure();
        prop_assert!((total - domain.measure()).abs() <= 1e-12 * domain.measure());
    }

    #[test]
    fn weights_symmetric_nonnegative_with_positive_exterior(s in 0.05f64..0.45, n in 1usize..24, len in 0.1f64..4.0) {
        let kw = weights(interval(0.0, len, n), s, 2.0);
        for i in 0..n {
            prop_assert_eq!(kw.w(i, i), 0.0);
            prop_assert!(kw.v()[i] > 0.0);
            for j in 0..n {
                prop_assert!(kw.w(i, j) >= 0.0);
                prop_assert_eq!(kw.w(i, j), kw.w(j, i));
            }
        }
    }

    #[test]
    fn weights_follow_the_scaling_law(s in 0.05f64..0.45, c in 0.2f64..5.0, n in 2usize..20) {
        let base = weights(interval(0.0, 1.0, n), s, 2.0);
        let scaled = weights(interval(0.0, c, n), s, 2.0);
        let f = c.powf(1.0 - 2.0 * s);
        for i in 0..n {
            let v = base.v()[i] * f;
            prop_assert!((scaled.v()[i] - v).abs() <= 1e-10 * v);
            for j in 0..n {
                let w = base.w(i, j) * f;
                prop_assert!((scaled.w(i, j) - w).abs() <= 1e-10 * w.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn pnp_and_t_monotonicity(
        u in prop::collection::vec(-5.0f64..5.0, 24),
        v in prop::collection::vec(-5.0f64..5.0, 24),
        p3 in any::<bool>(),
    ) {
        let (s, p) = if p3 { (0.3, 3.0) } else { (0.4, 2.0) };
        let g = interval(0.0, 1.0, 24);
        let kw = weights(g.clone(), s, p);
        let (u, v) = (func(&g, &u), func(&g, &v));
        let scale = gagliardo_energy(&u, &kw, p).unwrap() + gagliardo_energy(&v, &kw, p).unwrap();
        let [a, b] = pnp_gaps(&u, &kw, p).unwrap();
        prop_assert!(a >= -1e-11 * scale && b >= -1e-11 * scale);
        let t = t_monotonicity_pairing(&u, &v, &kw, p).unwrap();
        let positive_part = u.values().iter().zip(v.values()).any(|(x, y)| x > y);
        if positive_part {
            prop_assert!(t > 0.0);
        } else {
            prop_assert_eq!(t, 0.0);
        }
    }

    #[test]
    fn scalar_inequality(a in -50.0f64..50.0, x in -50.0f64..50.0, y in -50.0f64..50.0, p in 2.0f64..4.0) {
        let (b, c) = if x >= y { (x, y) } else { (y, x) };
        let scale = ((a - b).abs() + (a - c).abs() + (b - c).abs()).powf(p - 1.0);
        prop_assert!(scalar_inequality_gap(a, b, c, p) >= -1e-12 * scale);
    }

    #[test]
    fn operator_is_homogeneous(u in prop::collection::vec(-3.0f64..3.0, 16), t in 0.01f64..100.0, p in 2.0f64..3.2) {
        let g = interval(0.0, 1.0, 16);
        let kw = weights(g.clone(), 0.3, p);
        let u = func(&g, &u);
        let lu = apply_operator(&u, &kw, p).unwrap();
        let ltu = apply_operator(&u.map(|x| t * x), &kw, p).unwrap();
        let f = t.powf(p - 1.0);
        let norm = lu.sup_norm();
        for (a, b) in ltu.values().iter().zip(lu.values()) {
            prop_assert!((a - f * b).abs() <= 1e-12 * f * norm);
        }
    }

    #[test]
    fn reaction_continuous_at_breakpoints(lambda in 0.1f64..20.0, q in 1.1f64..3.0, dr in 0.1f64..3.0, anchor in 0.01f64..5.0) {
        let params = validate_params(RawParams { dim: 1, s: 0.49, p: 2.0, q, r: q + dr }).unwrap();
        let lp = LogisticParams::new(lambda, &params).unwrap();
        let g = interval(0.0, 1.0, 1);
        let a = DiscreteFunction::constant(g, anchor);
        let lower = TruncatedReaction::new(TruncationKind::Lower, a.clone(), lp).unwrap();
        let upper = TruncatedReaction::new(TruncationKind::Upper, a, lp).unwrap();
        for k in 1..=40 {
            let eps = 0.5f64.powi(k);
            // at zero
            prop_assert!(reaction(&lp, eps).abs() <= 2.0 * (lambda * eps.powf(q - 1.0) + eps.powf(q + dr - 1.0)));
            prop_assert_eq!(reaction(&lp, -eps), 0.0);
            // at the knees
            for tr in [&lower, &upper] {
                let jump = truncated_reaction(tr, 0, anchor + eps * anchor) - truncated_reaction(tr, 0, anchor - eps * anchor);
                let lip = lambda * (q - 1.0) * (2.0 * anchor).powf(q - 2.0).max((0.5 * anchor).powf(q - 2.0))
                    + (q + dr - 1.0) * (2.0 * anchor).powf(q + dr - 2.0);
                prop_assert!(jump.abs() <= 2.0 * eps * anchor * lip + 1e-12);
            }
        }
    }

    #[test]
    fn primitive_bounded_above(lambda in 0.1f64..20.0, q in 1.1f64..3.0, dr in 0.1f64..3.0) {
        let params = validate_params(RawParams { dim: 1, s: 0.49, p: 2.0, q, r: q + dr }).unwrap();
        let lp = LogisticParams::new(lambda, &params).unwrap();
        let sup_on = |top: f64| (0..=4000).map(|k| reaction_primitive(&lp, top * k as f64 / 4000.0)).fold(f64::NEG_INFINITY, f64::max);
        let root = lp.reaction_root();
        // the maximum sits at the root and later windows never exceed it
        let peak = reaction_primitive(&lp, root);
        for mult in [2.0, 8.0, 64.0] {
            prop_assert!(sup_on(mult * root) <= peak * (1.0 + 1e-12));
        }
    }

    #[test]
    fn reaction_increases_with_lambda(l1 in 0.1f64..20.0, dl in 0.001f64..5.0, t in 1e-6f64..50.0) {
        let params = validate_params(RawParams { dim: 1, s: 0.49, p: 2.0, q: 1.5, r: 3.0 }).unwrap();
        let a = LogisticParams::new(l1, &params).unwrap();
        let b = LogisticParams::new(l1 + dl, &params).unwrap();
        prop_assert!(reaction(&b, t) > reaction(&a, t));
    }

    #[test]
    fn principal_eigenpair_positive(s in 0.1f64..0.45, n in 1usize..24, len in 0.2f64..3.0) {
        let kw = weights(interval(0.0, len, n), s, 2.0);
        let e = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap();
        prop_assert!(e.lambda1 > 0.0);
        prop_assert!(e.u1.min_value() > 0.0);
    }

    #[test]
    fn converged_reports_satisfy_contract(lambda in 0.05f64..30.0, seed in 0u64..1000, random in any::<bool>()) {
        let g = interval(0.0, 1.0, 24);
        let params = validate_params(RawParams { dim: 1, s: 0.4, p: 2.0, q: 1.5, r: 3.0 }).unwrap();
        let kw = assemble(g, &params).unwrap();
        let initial = if random { Initial::RandomPositive } else { Initial::ReactionRoot };
        let r = solve(&kw, &params, lambda, &SolveOptions { initial, seed, ..SolveOptions::default() }).unwrap();
        prop_assert_eq!(r.status, Status::Converged);
        prop_assert!(r.residual <= 1e-8);
        prop_assert!(r.u.min_value() >= 0.0);
        prop_assert!(r.energy <= r.initial_energy);
    }
}

#[test]
fn checks_are_bit_reproducible() {
    let cfg = verify::SuiteConfig { n: 32, trials: 3, scalar_samples: 1000, structure_samples: 20, ..Default::default() };
    let groups = [verify::SuiteGroup::Sub, verify::SuiteGroup::Equi, verify::SuiteGroup::Structure];
    let a = verify::run_suite(&groups, &cfg).unwrap();
    let b = verify::run_suite(&groups, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|c| c.passed()), "{:?}", a.iter().filter(|c| !c.passed()).collect::<Vec<_>>());
}
