use std::sync::Arc;

use fraclog_core::{
    assemble, build_grid, principal_eigenpair, rayleigh_quotient, validate_params, DiscreteFunction,
    DomainSpec, EigenOptions, KernelWeights, RawParams,
};
use nalgebra::{DMatrix, SymmetricEigen};

fn weights(dom: DomainSpec, n: usize, dim: i64, s: f64, p: f64) -> KernelWeights {
    let params = validate_params(RawParams { dim, s, p, q: 1.5, r: 3.0 }).unwrap();
    assemble(Arc::new(build_grid(dom, n).unwrap()), &params).unwrap()
}

/// Smallest eigenvalue of `M^-1/2 A M^-1/2` with `A` the quadratic form of the energy.
fn dense_oracle(kw: &KernelWeights) -> f64 {
    let m = kw.len();
    let mass = &kw.grid().measures;
    let a = DMatrix::from_fn(m, m, |i, j| {
        let raw = if i == j {
            2.0 * (0..m).map(|k| kw.w(i, k)).sum::<f64>() + 2.0 * kw.v()[i]
        } else {
            -2.0 * kw.w(i, j)
        };
        raw / (mass[i] * mass[j]).sqrt()
    });
    SymmetricEigen::new(a).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn linear_case_matches_dense_eigensolver() {
    for (dom, n, dim) in [
        (DomainSpec::Interval { a: 0.0, b: 1.0 }, 64, 1),
        (DomainSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 8, 2),
    ] {
        let kw = weights(dom, n, dim, 0.4, 2.0);
        let e = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap();
        let oracle = dense_oracle(&kw);
        assert!((e.lambda1 - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", e.lambda1);
    }
}

#[test]
fn restarts_agree_for_p_three() {
    let kw = weights(DomainSpec::Interval { a: 0.0, b: 1.0 }, 64, 1, 0.3, 3.0);
    let opts = EigenOptions { restarts: 5, seed: 17, ..EigenOptions::default() };
    let e = principal_eigenpair(&kw, 3.0, &opts).unwrap();
    assert_eq!(e.restart_lambdas.len(), 5);
    for a in &e.restart_lambdas {
        for b in &e.restart_lambdas {
            assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
        }
    }
    assert_eq!(e.discarded, 0);
}

#[test]
fn quotient_bounded_below_by_eigenvalue() {
    let kw = weights(DomainSpec::Interval { a: 0.0, b: 1.0 }, 40, 1, 0.4, 2.0);
    let e = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap();
    for k in 1..6 {
        let u = DiscreteFunction::from_fn(kw.grid().clone(), |x| (x[0] * (1.0 - x[0])).powf(0.2 * k as f64) + 0.01 * k as f64);
        assert!(rayleigh_quotient(&u, &kw, 2.0).unwrap() >= e.lambda1 * (1.0 - 1e-12));
    }
}
