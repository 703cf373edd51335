//! Projected-gradient energy minimization on the cone `u >= 0` and the drivers built on it.

mod branch;
mod functional;
mod mountain_pass;
mod torsion;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{mass_dot, DiscreteFunction};

pub use branch::{
    detect_threshold, initial_guess, lower_bound_lambda0, solve, solve_branch_point, sweep, Branch,
    BranchPoint, ThresholdOptions, ThresholdReport,
};
pub use functional::{Functional, PhiFunctional, TorsionFunctional, TruncatedFunctional};
pub use mountain_pass::{mountain_pass, MountainPassOptions, MountainPassReport};
pub use torsion::torsion_solve;

/// Below this sup-norm an iterate is treated as exactly zero.
const ZERO_FLOOR: f64 = 1e-100;
/// Ray steps start after this many gradient steps and repeat with this period.
const RAY_START: usize = 20;
const RAY_PERIOD: usize = 3;
/// Relative energy noise below which steps are judged by slope instead.
const NOISE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    Zero,
    Constant(f64),
    /// `tau` times the positive principal eigenfunction.
    ScaledEigen(f64),
    WarmStart(DiscreteFunction),
    /// Seeded uniform values in `[0.01, 1.5)` times the reaction root.
    RandomPositive,
    /// The constant positive zero of the reaction, a supersolution.
    ReactionRoot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub residual_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub initial: Initial,
    pub armijo_c: f64,
    pub shrink: f64,
    /// Solutions with smaller sup-norm count as the zero solution.
    pub collapse_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            residual_tol: 1e-8,
            max_iters: 50_000,
            seed: 0,
            initial: Initial::ReactionRoot,
            armijo_c: 1e-4,
            shrink: 0.5,
            collapse_tol: 1e-6,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.residual_tol > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.collapse_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams {
                constraint: "need residual_tol > 0, 0 < c < 1, 0 < shrink < 1, collapse_tol > 0".into(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Collapsed,
    MaxIters,
    NotFound,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::Collapsed => "collapsed",
            Status::MaxIters => "max_iters",
            Status::NotFound => "not_found",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub u: DiscreteFunction,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub status: Status,
    pub initial_energy: f64,
}

impl SolveReport {
    pub fn sup_norm(&self) -> f64 {
        self.u.sup_norm()
    }

    /// Converged to a solution above the collapse threshold.
    pub fn is_nontrivial(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Projected residual: the gradient, with components that push into the bound removed.
pub(crate) fn projected_residual(grid: &crate::grid::Grid, u: &[f64], g: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((&x, &gi), m) in u.iter().zip(g).zip(&grid.measures) {
        let r = if x > 0.0 { gi } else { gi.min(0.0) };
        s += r * r * m;
    }
    s.sqrt()
}

fn sup(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Projected gradient descent with two-point steps and a monotone Armijo test.
///
/// Stops when the projected residual is at most `tol * min(1, ||u||)`, or when
/// the sup-norm is below `collapse_tol` with residual at most `tol`.
pub fn minimize(f: &dyn Functional, u0: &DiscreteFunction, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let grid = f.grid().clone();
    if !crate::operator::same_grid(&grid, u0.grid()) {
        return Err(Error::GridMismatch);
    }
    let m = grid.len();
    let tol = opts.residual_tol;
    let mut u: Vec<f64> = u0.values().iter().map(|&x| x.max(0.0)).collect();
    let mut e = f.energy(&u);
    if !e.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let initial_energy = e;
    let mut g = vec![0.0; m];
    f.gradient(&u, &mut g);
    let mut res = projected_residual(&grid, &u, &g);
    let g_sup = sup(&g);
    let mut alpha = if g_sup > 0.0 { 0.1 * sup(&u).max(1e-3) / g_sup } else { 1.0 };
    let mut trial = vec![0.0; m];
    let mut g_new = vec![0.0; m];
    let mut iterations = 0;
    let status = loop {
        let s = sup(&u);
        let norm = mass_dot(&grid, &u, &u).sqrt();
        if s <= ZERO_FLOOR && s > 0.0 {
            u.iter_mut().for_each(|x| *x = 0.0);
            e = f.energy(&u);
            f.gradient(&u, &mut g);
            res = projected_residual(&grid, &u, &g);
            continue;
        }
        if res <= tol * norm.min(1.0) || (s < opts.collapse_tol && res <= tol) {
            break if s < opts.collapse_tol { Status::Collapsed } else { Status::Converged };
        }
        if iterations >= opts.max_iters {
            break Status::MaxIters;
        }
        iterations += 1;
        let mut step = alpha;
        let mut accepted = false;
        let mut have_grad = false;
        let mut e_new = e;
        for _ in 0..80 {
            have_grad = false;
            let mut dist2 = 0.0;
            let mut slope0 = 0.0;
            for k in 0..m {
                trial[k] = (u[k] - step * g[k]).max(0.0);
                let d = trial[k] - u[k];
                dist2 += d * d * grid.measures[k];
                slope0 += g[k] * d * grid.measures[k];
            }
            e_new = f.energy(&trial);
            if !e_new.is_finite() {
                return Err(Error::NonFinite { iteration: iterations });
            }
            let slack = 1e-13 * (e.abs() + e_new.abs());
            if e_new <= e - opts.armijo_c / step * dist2 + slack {
                accepted = true;
                break;
            }
            // energy differences at noise level: fall back to a slope test
            if slope0 < 0.0 && e_new <= e + NOISE * e.abs().max(e_new.abs()) {
                f.gradient(&trial, &mut g_new);
                have_grad = true;
                let slope1: f64 = (0..m).map(|k| g_new[k] * (trial[k] - u[k]) * grid.measures[k]).sum();
                if slope1 <= -0.8 * slope0 {
                    accepted = true;
                    break;
                }
            }
            step *= opts.shrink;
        }
        if !accepted {
            // no decrease at machine precision
            break Status::MaxIters;
        }
        if !have_grad {
            f.gradient(&trial, &mut g_new);
        }
        let mut ss = 0.0;
        let mut sy = 0.0;
        for k in 0..m {
            let sk = trial[k] - u[k];
            let yk = g_new[k] - g[k];
            ss += sk * sk * grid.measures[k];
            sy += sk * yk * grid.measures[k];
        }
        alpha = if sy > 0.0 && ss > 0.0 {
            (ss / sy).clamp(1e-14, 1e14)
        } else {
            (2.0 * step).min(1e14)
        };
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        e = e_new;
        if iterations >= RAY_START && iterations % RAY_PERIOD == 0 {
            if let Some(e_ray) = ray_step(f, &mut u, e, &mut g, &mut trial, &mut g_new, &grid) {
                e = e_ray;
            }
        }
        res = projected_residual(&grid, &u, &g);
    };
    Ok(SolveReport {
        u: DiscreteFunction::new(grid, u)?,
        energy: e,
        residual: res,
        iterations,
        status,
        initial_energy,
    })
}

/// One safeguarded Newton step on `t -> f(t u)` at `t = 1`, kept only if it
/// lowers the energy. Returns the new energy and updates `u` and `g`.
fn ray_step(
    f: &dyn Functional,
    u: &mut [f64],
    e: f64,
    g: &mut [f64],
    work: &mut [f64],
    gwork: &mut [f64],
    grid: &crate::grid::Grid,
) -> Option<f64> {
    let slope = mass_dot(grid, g, u);
    if slope == 0.0 || !slope.is_finite() {
        return None;
    }
    let delta = 1e-4;
    let along = |t: f64, work: &mut [f64], gwork: &mut [f64]| {
        for (w, &x) in work.iter_mut().zip(u.iter()) {
            *w = t * x;
        }
        f.gradient(work, gwork);
        mass_dot(grid, gwork, u)
    };
    let curvature = (along(1.0 + delta, work, gwork) - along(1.0 - delta, work, gwork)) / (2.0 * delta);
    if !(curvature > 0.0) {
        return None;
    }
    let t = (1.0 - slope / curvature).clamp(0.5, 2.0);
    for (w, &x) in work.iter_mut().zip(u.iter()) {
        *w = t * x;
    }
    let e_t = f.energy(work);
    if !(e_t < e) {
        return None;
    }
    u.copy_from_slice(work);
    f.gradient(u, g);
    Some(e_t)
}

pub(crate) fn random_positive(grid_len: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..grid_len).map(|_| scale * rng.random_range(0.01..1.5)).collect()
}
