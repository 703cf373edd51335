use std::sync::Arc;

use fraclog_core::solver::Functional;
use fraclog_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(n: usize) -> Arc<Grid> {
    Arc::new(build_grid(DomainSpec::Interval { a: 0.0, b: 1.0 }, n).unwrap())
}

fn setup(n: usize, p: f64, q: f64, r: f64) -> (ProblemParams, KernelWeights) {
    let params = validate_params(RawParams { dim: 1, s: 0.4, p, q, r }).unwrap();
    let kw = assemble(unit(n), &params).unwrap();
    (params, kw)
}

fn sup_dist(a: &DiscreteFunction, b: &DiscreteFunction) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn assert_converged_invariants(r: &SolveReport, tol: f64) {
    assert_eq!(r.status, Status::Converged);
    assert!(r.residual <= tol, "residual {}", r.residual);
    assert!(r.u.min_value() >= 0.0);
    assert!(r.energy <= r.initial_energy, "{} > {}", r.energy, r.initial_energy);
}

#[test]
fn subdiffusive_minimum_is_negative_and_beats_the_eigen_ray() {
    let (params, kw) = setup(64, 2.0, 1.5, 3.0);
    let r = solve(&kw, &params, 1.0, &SolveOptions::default()).unwrap();
    assert_converged_invariants(&r, 1e-8);
    assert!(r.energy < 0.0);
    // coarse search over tau * u1
    let e = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap();
    let lp = LogisticParams::new(1.0, &params).unwrap();
    let ray_min = (1..=400)
        .map(|k| energy_phi(&e.u1.map(|x| x * k as f64 * 0.0025), &kw, &lp).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(ray_min < 0.0);
    assert!(r.energy <= ray_min + 1e-12 * ray_min.abs());
}

#[test]
fn equidiffusive_below_eigenvalue_collapses() {
    let (params, kw) = setup(64, 2.0, 2.0, 3.0);
    let l1 = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap().lambda1;
    let r = solve(&kw, &params, 0.9 * l1, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, Status::Collapsed);
    assert!(r.sup_norm() <= 1e-6);
}

#[test]
fn exact_critical_point_takes_no_iterations() {
    let (params, kw) = setup(32, 2.0, 1.5, 3.0);
    let first = solve(&kw, &params, 1.0, &SolveOptions::default()).unwrap();
    let again = SolveOptions { initial: Initial::WarmStart(first.u.clone()), ..SolveOptions::default() };
    let r = solve(&kw, &params, 1.0, &again).unwrap();
    assert_eq!(r.iterations, 0);
    assert_eq!(r.status, Status::Converged);
    assert_eq!(r.u, first.u);

    let b = solve_branch_point(1.0, Some((1.0, &first.u)), &params, &kw, &SolveOptions::default()).unwrap();
    assert_eq!(b.iterations, 0);
    assert_eq!(b.u, first.u);
}

#[test]
fn warm_branch_points_are_ordered() {
    let (params, kw) = setup(64, 2.0, 1.5, 3.0);
    let opts = SolveOptions::default();
    let lo = solve(&kw, &params, 1.0, &opts).unwrap();
    let hi = solve_branch_point(1.5, Some((1.0, &lo.u)), &params, &kw, &opts).unwrap();
    assert_converged_invariants(&hi, 1e-8);
    let interior_gap = hi
        .u
        .values()
        .iter()
        .zip(lo.u.values())
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    assert!(interior_gap > 0.0);
    // the untruncated solve lands on the same solution
    let cold = solve(&kw, &params, 1.5, &opts).unwrap();
    assert!(sup_dist(&cold.u, &hi.u) < 1e-6);

    let bad = solve_branch_point(0.5, Some((1.0, &lo.u)), &params, &kw, &opts);
    assert!(matches!(bad, Err(Error::Precondition(_))));
}

#[test]
fn superdiffusive_large_lambda_is_nontrivial() {
    let (params, kw) = setup(64, 2.0, 3.0, 4.0);
    let l1 = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap().lambda1;
    let l0 = lower_bound_lambda0(&params, l1).unwrap();
    let r = solve_branch_point(10.0 * l0, None, &params, &kw, &SolveOptions::default()).unwrap();
    assert_converged_invariants(&r, 1e-8);
    let lp = LogisticParams::new(10.0 * l0, &params).unwrap();
    // some multiple of the eigenfunction already has negative energy
    let e = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap();
    let neg = (1..200).any(|k| energy_phi(&e.u1.map(|x| x * k as f64 * 0.05), &kw, &lp).unwrap() < 0.0);
    assert!(neg);
}

#[test]
fn lower_bound_closed_form() {
    let params = validate_params(RawParams { dim: 1, s: 0.4, p: 2.0, q: 3.0, r: 4.0 }).unwrap();
    assert!((lower_bound_lambda0(&params, 25.0).unwrap() - 10.0).abs() < 1e-12);
    // numerical minimization of lambda1 t^(p-q) + t^(r-q)
    for l1 in [0.3, 4.0, 25.0, 1e3] {
        let direct = (1..200_000)
            .map(|k| {
                let t = 10f64.powf(-4.0 + 8.0 * k as f64 / 200_000.0);
                l1 / t + t
            })
            .fold(f64::INFINITY, f64::min);
        let b = lower_bound_lambda0(&params, l1).unwrap();
        assert!(b > 0.0);
        assert!(b <= direct && direct - b < 1e-6 * b, "{b} vs {direct}");
        assert!(lower_bound_lambda0(&params, 2.0 * l1).unwrap() > b);
    }
    let sub = validate_params(RawParams { dim: 1, s: 0.4, p: 2.0, q: 1.5, r: 3.0 }).unwrap();
    assert!(lower_bound_lambda0(&sub, 25.0).is_err());
}

#[test]
fn threshold_report_contract() {
    let (params, kw) = setup(64, 2.0, 3.0, 4.0);
    let topts = ThresholdOptions::default();
    let th = detect_threshold(&params, &kw, &topts, &SolveOptions::default()).unwrap();
    assert!(th.lambda_0 > 0.0);
    assert!(th.lambda_star_h >= th.lambda_0);
    assert!(th.bracket_width <= topts.bracket_tol * th.lambda_star_h);
    assert!(th.lambda_no < th.lambda_star_h);
    assert_eq!(th.u_star.status, Status::Converged);
    // accepted solutions come in decreasing lambda with nonincreasing sup-norm
    for w in th.accepted.windows(2) {
        assert!(w[1].0 < w[0].0);
        assert!(w[1].1.sup_norm() <= w[0].1.sup_norm());
    }

    let low = ThresholdOptions { lambda_high: Some(0.5 * th.lambda_0), ..ThresholdOptions::default() };
    let err = detect_threshold(&params, &kw, &low, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NoSolvableStart { .. }));

    let (sub, kws) = setup(16, 2.0, 1.5, 3.0);
    assert!(detect_threshold(&sub, &kws, &topts, &SolveOptions::default()).is_err());
}

#[test]
fn mountain_pass_geometry_and_result() {
    let (params, kw) = setup(64, 2.0, 3.0, 4.0);
    let th = detect_threshold(&params, &kw, &ThresholdOptions::default(), &SolveOptions::default()).unwrap();
    let lambda = 1.5 * th.lambda_star_h;
    let ul = solve(&kw, &params, lambda, &SolveOptions::default()).unwrap();
    let lp = LogisticParams::new(lambda, &params).unwrap();
    let tr = TruncatedReaction::new(TruncationKind::Upper, ul.u.clone(), lp).unwrap();

    // the truncation is inactive at its own anchor
    let a = truncated_energy(&ul.u, &kw, &tr).unwrap();
    let b = energy_phi(&ul.u, &kw, &lp).unwrap();
    assert!((a - b).abs() <= 1e-12 * b.abs());

    // zero is a strict local minimizer
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = kw.len();
    for _ in 0..100 {
        let delta = 1e-3;
        let u = DiscreteFunction::new(kw.grid().clone(), (0..m).map(|_| delta * rng.random_range(0.0..1.0)).collect())
            .unwrap();
        assert!(truncated_energy(&u, &kw, &tr).unwrap() > 0.0);
    }

    let mp = mountain_pass(&params, &kw, lambda, &ul, &MountainPassOptions::default()).unwrap();
    let v = &mp.solution;
    assert_eq!(v.status, Status::Converged, "{:?}", mp.note);
    assert!(v.residual <= 1e-6);
    assert!(v.sup_norm() > 1e-4 && v.sup_norm() < ul.sup_norm());
    assert!(v.u.values().iter().zip(ul.u.values()).all(|(x, y)| x <= y));
    assert!(sup_dist(&v.u, &ul.u) > 1e-4);
    // a saddle sits above the minimizer
    assert!(v.energy > ul.energy);
}

#[test]
fn mountain_pass_rejects_unconverged_anchor() {
    let (params, kw) = setup(16, 2.0, 3.0, 4.0);
    let zero = SolveReport {
        u: DiscreteFunction::zeros(kw.grid().clone()),
        energy: 0.0,
        residual: 0.0,
        iterations: 0,
        status: Status::Collapsed,
        initial_energy: 0.0,
    };
    assert!(mountain_pass(&params, &kw, 100.0, &zero, &MountainPassOptions::default()).is_err());
}

#[test]
fn torsion_is_unique_positive_and_solves_the_equation() {
    let (params, kw) = setup(64, 2.0, 1.5, 3.0);
    let a = torsion_solve(&kw, params.p, &SolveOptions { initial: Initial::Zero, ..SolveOptions::default() }).unwrap();
    let b = torsion_solve(
        &kw,
        params.p,
        &SolveOptions { initial: Initial::RandomPositive, seed: 9, ..SolveOptions::default() },
    )
    .unwrap();
    assert_converged_invariants(&a, 1e-8);
    assert!(sup_dist(&a.u, &b.u) <= 1e-6);
    assert!(a.u.min_value() > 0.0);
    let lv = apply_operator(&a.u, &kw, params.p).unwrap();
    let res: Vec<f64> = lv.values().iter().map(|x| x - 1.0).collect();
    assert!(mass_norm(kw.grid(), &res) <= 1e-8);
    // the same holds for p = 3
    let p3 = validate_params(RawParams { dim: 1, s: 0.3, p: 3.0, q: 1.5, r: 4.0 }).unwrap();
    let kw3 = assemble(unit(32), &p3).unwrap();
    let c = torsion_solve(&kw3, 3.0, &SolveOptions::default()).unwrap();
    assert_converged_invariants(&c, 1e-8);
    assert!(c.u.min_value() > 0.0);
}

#[test]
fn sweeps_cold_and_warm() {
    let (params, kw) = setup(32, 2.0, 1.5, 3.0);
    let lambdas = [0.5, 1.0, 2.0, 4.0];
    let cold = sweep(&kw, &params, &lambdas, &SolveOptions::default(), false).unwrap();
    let warm = sweep(&kw, &params, &lambdas, &SolveOptions::default(), true).unwrap();
    assert_eq!(cold.points.len(), 4);
    for (c, w) in cold.solutions.iter().zip(&warm.solutions) {
        assert!(sup_dist(c, w) < 1e-6);
    }
    for w in cold.points.windows(2) {
        assert!(w[1].sup_norm > w[0].sup_norm);
    }
    let again = sweep(&kw, &params, &lambdas, &SolveOptions::default(), false).unwrap();
    assert_eq!(again.points, cold.points);
}

#[test]
fn planar_solve_converges() {
    let params = validate_params(RawParams { dim: 2, s: 0.3, p: 2.0, q: 1.5, r: 2.5 }).unwrap();
    let grid = Arc::new(build_grid(DomainSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, 8).unwrap());
    let kw = assemble(grid, &params).unwrap();
    let r = solve(&kw, &params, 2.0, &SolveOptions::default()).unwrap();
    assert_converged_invariants(&r, 1e-8);
    assert!(r.u.min_value() > 0.0);
}

#[test]
fn minimize_rejects_foreign_start() {
    let (params, kw) = setup(16, 2.0, 1.5, 3.0);
    let lp = LogisticParams::new(1.0, &params).unwrap();
    let f = solver::PhiFunctional { kw: &kw, lp };
    assert_eq!(f.grid().len(), 16);
    let other = DiscreteFunction::zeros(unit(8));
    assert!(minimize(&f, &other, &SolveOptions::default()).is_err());
    let bad = SolveOptions { shrink: 1.5, ..SolveOptions::default() };
    assert!(minimize(&f, &DiscreteFunction::zeros(kw.grid().clone()), &bad).is_err());
}
