//! Single solves, warm-started continuation in `lambda` and threshold detection.

use rayon::prelude::*;
use serde::Serialize;

use super::{minimize, random_positive, Initial, PhiFunctional, SolveOptions, SolveReport, Status, TruncatedFunctional};
use crate::eigen::{principal_eigenpair, EigenOptions, EigenPair};
use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::logistic::{energy_phi, grad_phi, LogisticParams, TruncatedReaction, TruncationKind};
use crate::operator::{check_weights, DiscreteFunction};
use crate::params::ProblemParams;

/// Starting point for a solve of `Phi_lambda`.
pub fn initial_guess(
    kw: &KernelWeights,
    params: &ProblemParams,
    lambda: f64,
    initial: &Initial,
    seed: u64,
) -> Result<DiscreteFunction> {
    let lp = LogisticParams::new(lambda, params)?;
    let grid = kw.grid().clone();
    Ok(match initial {
        Initial::Zero => DiscreteFunction::zeros(grid),
        Initial::Constant(c) => DiscreteFunction::constant(grid, *c),
        Initial::ReactionRoot => DiscreteFunction::constant(grid, lp.reaction_root()),
        Initial::RandomPositive => {
            let m = grid.len();
            DiscreteFunction::new(grid, random_positive(m, lp.reaction_root(), seed))?
        }
        Initial::WarmStart(u) => {
            check_weights(u, kw)?;
            u.clone()
        }
        Initial::ScaledEigen(tau) => {
            let e = principal_eigenpair(kw, params.p, &EigenOptions { seed, ..EigenOptions::default() })?;
            e.u1.map(|x| tau * x)
        }
    })
}

/// Minimizes `Phi_lambda` from `opts.initial`.
pub fn solve(kw: &KernelWeights, params: &ProblemParams, lambda: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let lp = LogisticParams::new(lambda, params)?;
    let u0 = initial_guess(kw, params, lambda, &opts.initial, opts.seed)?;
    minimize(&PhiFunctional { kw, lp }, &u0, opts)
}

/// Solve at `lambda`. With `warm = (mu, u_mu)`, `mu <= lambda`, the reaction is
/// frozen below `u_mu`, which forces `u >= u_mu`.
pub fn solve_branch_point(
    lambda: f64,
    warm: Option<(f64, &DiscreteFunction)>,
    params: &ProblemParams,
    kw: &KernelWeights,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let Some((mu, anchor)) = warm else {
        return solve(kw, params, lambda, opts);
    };
    check_weights(anchor, kw)?;
    if !(mu <= lambda) {
        return Err(Error::Precondition(format!(
            "warm start must come from a parameter no larger than lambda (mu = {mu}, lambda = {lambda})"
        )));
    }
    let lp = LogisticParams::new(lambda, params)?;
    let tr = TruncatedReaction::new(TruncationKind::Lower, anchor.clone(), lp)?;
    let report = minimize(&TruncatedFunctional { kw, tr: &tr }, anchor, opts)?;
    let slack = 1e-9 * anchor.sup_norm();
    if let Some((cell, violation)) = report
        .u
        .values()
        .iter()
        .zip(anchor.values())
        .map(|(u, a)| u - a)
        .enumerate()
        .find(|(_, d)| *d < -slack)
    {
        return Err(Error::AnchorViolation { cell, violation });
    }
    // above the anchor the truncation is inactive
    let g = grad_phi(&report.u, kw, &lp)?;
    let residual = super::projected_residual(kw.grid(), report.u.values(), g.values());
    let energy = energy_phi(&report.u, kw, &lp)?;
    let initial_energy = energy_phi(anchor, kw, &lp)?;
    Ok(SolveReport { residual, energy, initial_energy, ..report })
}

/// Largest `lambda` with `lambda t^(q-1) - t^(r-1) <= lambda1 t^(p-1)` for all `t > 0`.
pub fn lower_bound_lambda0(params: &ProblemParams, lambda1: f64) -> Result<f64> {
    let (p, q, r) = (params.p, params.q, params.r);
    if q <= p {
        return Err(Error::Precondition(format!(
            "the bound needs q > p (q = {q}, p = {p})"
        )));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::Precondition(format!("lambda1 = {lambda1} must be positive")));
    }
    let t = (lambda1 * (q - p) / (r - q)).powf(1.0 / (r - p));
    Ok(lambda1 * t.powf(p - q) + t.powf(r - q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub sup_norm: f64,
    pub energy: f64,
    pub residual: f64,
    pub status: Status,
    pub iterations: usize,
}

impl BranchPoint {
    fn from_report(lambda: f64, r: &SolveReport) -> Self {
        BranchPoint {
            lambda,
            sup_norm: r.sup_norm(),
            energy: r.energy,
            residual: r.residual,
            status: r.status,
            iterations: r.iterations,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub solutions: Vec<DiscreteFunction>,
}

/// Solves at each `lambda` in order. With `warm`, each solve starts from the
/// previous solution; otherwise every solve uses `opts.initial`.
pub fn sweep(
    kw: &KernelWeights,
    params: &ProblemParams,
    lambdas: &[f64],
    opts: &SolveOptions,
    warm: bool,
) -> Result<Branch> {
    if !warm {
        // independent solves
        let reports = lambdas
            .par_iter()
            .map(|&lambda| solve(kw, params, lambda, opts))
            .collect::<Result<Vec<_>>>()?;
        let points = lambdas.iter().zip(&reports).map(|(&l, r)| BranchPoint::from_report(l, r)).collect();
        let solutions = reports.into_iter().map(|r| r.u).collect();
        return Ok(Branch { points, solutions });
    }
    let mut points = Vec::with_capacity(lambdas.len());
    let mut solutions: Vec<DiscreteFunction> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut o = opts.clone();
        if let Some(prev) = solutions.last() {
            o.initial = Initial::WarmStart(prev.clone());
        }
        let r = solve(kw, params, lambda, &o)?;
        points.push(BranchPoint::from_report(lambda, &r));
        solutions.push(r.u);
    }
    Ok(Branch { points, solutions })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdOptions {
    /// Defaults to ten times the analytic lower bound.
    pub lambda_high: Option<f64>,
    /// Relative: stop when `lambda_yes - lambda_no <= bracket_tol * lambda_yes`.
    pub bracket_tol: f64,
    /// Continuation factor applied to `lambda` while the solve stays nontrivial.
    pub step_factor: f64,
    pub max_solves: usize,
    pub eigen: EigenOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            lambda_high: None,
            bracket_tol: 1e-3,
            step_factor: 0.8,
            max_solves: 400,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdReport {
    pub lambda_star_h: f64,
    pub lambda_0: f64,
    pub lambda_no: f64,
    pub bracket_width: f64,
    pub u_star: SolveReport,
    pub eigen: EigenPair,
    /// Every solve in the order performed.
    pub branch: Vec<BranchPoint>,
    /// Nontrivial solutions along the accepted branch, in order of decreasing `lambda`.
    pub accepted: Vec<(f64, DiscreteFunction)>,
}

/// Downward warm-started continuation from `lambda_high` followed by bisection.
pub fn detect_threshold(
    params: &ProblemParams,
    kw: &KernelWeights,
    topts: &ThresholdOptions,
    opts: &SolveOptions,
) -> Result<ThresholdReport> {
    if params.q <= params.p {
        return Err(Error::Precondition("threshold detection needs q > p".into()));
    }
    if !(topts.bracket_tol > 0.0 && topts.step_factor > 0.0 && topts.step_factor < 1.0) {
        return Err(Error::InvalidParams {
            constraint: "need bracket_tol > 0 and 0 < step_factor < 1".into(),
        });
    }
    let eigen = principal_eigenpair(kw, params.p, &topts.eigen)?;
    let lambda_0 = lower_bound_lambda0(params, eigen.lambda1)?;
    let lambda_high = topts.lambda_high.unwrap_or(10.0 * lambda_0);

    let mut branch = Vec::new();
    let mut accepted = Vec::new();
    let cold = SolveOptions { initial: Initial::ReactionRoot, ..opts.clone() };
    let first = solve(kw, params, lambda_high, &cold)?;
    branch.push(BranchPoint::from_report(lambda_high, &first));
    if first.status != Status::Converged {
        if first.status == Status::MaxIters && first.sup_norm() >= opts.collapse_tol {
            return Err(Error::NonConvergence(format!(
                "solve at lambda = {lambda_high} stopped with residual {:.3e}",
                first.residual
            )));
        }
        return Err(Error::NoSolvableStart { lambda: lambda_high });
    }
    accepted.push((lambda_high, first.u.clone()));

    let mut yes = (lambda_high, first);
    // `Ok(Some)` nontrivial, `Ok(None)` collapsed
    let attempt = |lambda: f64, from: &DiscreteFunction, branch: &mut Vec<BranchPoint>| -> Result<Option<SolveReport>> {
        let o = SolveOptions { initial: Initial::WarmStart(from.clone()), ..opts.clone() };
        let r = solve(kw, params, lambda, &o)?;
        branch.push(BranchPoint::from_report(lambda, &r));
        match r.status {
            Status::Converged => Ok(Some(r)),
            Status::Collapsed => Ok(None),
            _ if r.sup_norm() < opts.collapse_tol => Ok(None),
            _ => Err(Error::NonConvergence(format!(
                "solve at lambda = {lambda} stopped with residual {:.3e} and sup-norm {:.3e}",
                r.residual,
                r.sup_norm()
            ))),
        }
    };

    let mut no = None;
    while no.is_none() {
        if branch.len() >= topts.max_solves {
            return Err(Error::NonConvergence("threshold continuation exceeded max_solves".into()));
        }
        let lambda = yes.0 * topts.step_factor;
        match attempt(lambda, &yes.1.u, &mut branch)? {
            Some(r) => {
                accepted.push((lambda, r.u.clone()));
                yes = (lambda, r);
            }
            None => no = Some(lambda),
        }
    }
    let mut lambda_no = no.unwrap();
    while yes.0 - lambda_no > topts.bracket_tol * yes.0 {
        if branch.len() >= topts.max_solves {
            return Err(Error::NonConvergence("threshold bisection exceeded max_solves".into()));
        }
        let mid = 0.5 * (yes.0 + lambda_no);
        match attempt(mid, &yes.1.u, &mut branch)? {
            Some(r) => {
                accepted.push((mid, r.u.clone()));
                yes = (mid, r);
            }
            None => lambda_no = mid,
        }
    }
    let (lambda_star_h, u_star) = yes;
    if lambda_star_h < lambda_0 {
        return Err(Error::Precondition(format!(
            "detected threshold {lambda_star_h} lies below the nonexistence bound {lambda_0}"
        )));
    }
    Ok(ThresholdReport {
        lambda_star_h,
        lambda_0,
        lambda_no,
        bracket_width: lambda_star_h - lambda_no,
        u_star,
        eigen,
        branch,
        accepted,
    })
}
