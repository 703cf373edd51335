//! Second solution by a climbing string between `0` and `u_lambda` on the
//! functional whose reaction growth is frozen above `u_lambda`, polished by
//! min-mode (dimer) iteration with finite-difference curvature.

use rayon::prelude::*;

use super::{projected_residual, Functional, SolveReport, Status, TruncatedFunctional};
use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::logistic::{energy_phi, grad_phi, LogisticParams, TruncatedReaction, TruncationKind};
use crate::operator::{mass_dot, DiscreteFunction};
use crate::params::ProblemParams;

#[derive(Clone, Debug, PartialEq)]
pub struct MountainPassOptions {
    pub nodes: usize,
    pub string_iters: usize,
    /// Climbing-node residual at which the string hands over to the polish.
    pub string_tol: f64,
    pub polish_iters: usize,
    /// Final residual of the untruncated equation.
    pub tol: f64,
    /// Minimal sup-norm gap to both endpoints.
    pub distinct_tol: f64,
    pub fd_eps: f64,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions {
            nodes: 32,
            string_iters: 20_000,
            string_tol: 1e-3,
            polish_iters: 100_000,
            tol: 1e-6,
            distinct_tol: 1e-4,
            fd_eps: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MountainPassReport {
    pub solution: SolveReport,
    /// Energies along the final string.
    pub path_energies: Vec<f64>,
    pub string_iterations: usize,
    pub polish_iterations: usize,
    pub note: Option<String>,
}

/// Upper bound on the curvature of the truncated functional on `[0, sup u]`.
fn curvature_bound(kw: &KernelWeights, lp: &LogisticParams, sup: f64) -> f64 {
    let m = kw.len();
    let mut op = 0.0f64;
    for i in 0..m {
        let row: f64 = kw.row(i).iter().sum();
        op = op.max((4.0 * row + 2.0 * kw.v()[i]) / kw.grid().measures[i]);
    }
    let p = lp.p;
    let growth = (p - 1.0) * (2.0 * sup).powf(p - 2.0);
    let reaction = lp.lambda * (lp.q - 1.0) * sup.powf(lp.q - 2.0) + (lp.r - 1.0) * sup.powf(lp.r - 2.0);
    op * growth.max(1e-12) + reaction
}

fn axpy_norm(grid: &crate::grid::Grid, a: &[f64]) -> f64 {
    mass_dot(grid, a, a).sqrt()
}

/// Redistributes `nodes[lo..=hi]` at equal arc length, endpoints fixed.
fn reparametrize(grid: &crate::grid::Grid, nodes: &mut [Vec<f64>], lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let mut cum = vec![0.0];
    for k in lo..hi {
        let d: Vec<f64> = nodes[k + 1].iter().zip(&nodes[k]).map(|(a, b)| a - b).collect();
        cum.push(cum.last().unwrap() + axpy_norm(grid, &d));
    }
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return;
    }
    let old: Vec<Vec<f64>> = nodes[lo..=hi].to_vec();
    let count = hi - lo;
    let mut seg = 0;
    for j in 1..count {
        let target = total * j as f64 / count as f64;
        while seg + 1 < count && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        nodes[lo + j] = old[seg]
            .iter()
            .zip(&old[seg + 1])
            .map(|(a, b)| a + t * (b - a))
            .collect();
    }
}

pub fn mountain_pass(
    params: &ProblemParams,
    kw: &KernelWeights,
    lambda: f64,
    u_lambda: &SolveReport,
    opts: &MountainPassOptions,
) -> Result<MountainPassReport> {
    if u_lambda.status != Status::Converged {
        return Err(Error::Precondition(format!(
            "mountain pass needs a converged nontrivial u_lambda (status {})",
            u_lambda.status
        )));
    }
    if opts.nodes < 3 {
        return Err(Error::InvalidParams { constraint: "mountain pass needs at least 3 nodes".into() });
    }
    let lp = LogisticParams::new(lambda, params)?;
    let anchor = u_lambda.u.clone();
    let tr = TruncatedReaction::new(TruncationKind::Upper, anchor.clone(), lp)?;
    let f = TruncatedFunctional { kw, tr: &tr };
    let grid = kw.grid().clone();
    let m = grid.len();
    let top = anchor.values();
    let sup = anchor.sup_norm();
    let dt = 0.5 / curvature_bound(kw, &lp, sup);

    let count = opts.nodes;
    let mut nodes: Vec<Vec<f64>> = (0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            top.iter().map(|x| t * x).collect()
        })
        .collect();
    let endpoint_max = f.energy(&nodes[0]).max(f.energy(&nodes[count - 1]));

    let eval = |nodes: &[Vec<f64>]| -> Vec<(f64, Vec<f64>)> {
        nodes
            .par_iter()
            .map(|u| {
                let mut g = vec![0.0; m];
                f.gradient(u, &mut g);
                (f.energy(u), g)
            })
            .collect()
    };

    let mut string_iterations = 0;
    let mut imax;
    let mut energies;
    loop {
        let evals = eval(&nodes);
        energies = evals.iter().map(|e| e.0).collect::<Vec<_>>();
        imax = (1..count - 1)
            .max_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(b.cmp(&a)))
            .unwrap();
        let climb_res = projected_residual(&grid, &nodes[imax], &evals[imax].1);
        if climb_res <= opts.string_tol || string_iterations >= opts.string_iters {
            break;
        }
        string_iterations += 1;
        let tau: Vec<f64> = nodes[imax + 1].iter().zip(&nodes[imax - 1]).map(|(a, b)| a - b).collect();
        let tn = axpy_norm(&grid, &tau).max(f64::MIN_POSITIVE);
        let tau: Vec<f64> = tau.iter().map(|x| x / tn).collect();
        for k in 1..count - 1 {
            let g = &evals[k].1;
            if k == imax {
                let gt = mass_dot(&grid, g, &tau);
                for i in 0..m {
                    nodes[k][i] = (nodes[k][i] - dt * (g[i] - 2.0 * gt * tau[i])).max(0.0);
                }
            } else {
                for i in 0..m {
                    nodes[k][i] = (nodes[k][i] - dt * g[i]).max(0.0);
                }
            }
        }
        reparametrize(&grid, &mut nodes, 0, imax);
        reparametrize(&grid, &mut nodes, imax, count - 1);
    }

    let pass_energy = energies[imax];
    let lift = 1e-12 * (pass_energy.abs() + endpoint_max.abs());
    let finish = |x: Vec<f64>, status: Status, residual: f64, note: Option<String>, polish: usize| -> Result<MountainPassReport> {
        let u = DiscreteFunction::new(grid.clone(), x)?;
        let energy = energy_phi(&u, kw, &lp)?;
        Ok(MountainPassReport {
            solution: SolveReport {
                u,
                energy,
                residual,
                iterations: string_iterations + polish,
                status,
                initial_energy: pass_energy,
            },
            path_energies: energies.clone(),
            string_iterations,
            polish_iterations: polish,
            note,
        })
    };
    if pass_energy <= endpoint_max + lift {
        let x = nodes[imax].clone();
        return finish(x, Status::NotFound, f64::NAN, Some("path maximum does not exceed the endpoints".into()), 0);
    }

    // min-mode polish from the climbing node
    let mut x = nodes[imax].clone();
    let mut v: Vec<f64> = nodes[imax + 1].iter().zip(&nodes[imax - 1]).map(|(a, b)| a - b).collect();
    let vn = axpy_norm(&grid, &v).max(f64::MIN_POSITIVE);
    v.iter_mut().for_each(|a| *a /= vn);
    let mut g = vec![0.0; m];
    let mut gp = vec![0.0; m];
    let mut gm = vec![0.0; m];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut alpha = dt;
    let mut polish = 0;
    let mut res;
    loop {
        f.gradient(&x, &mut g);
        res = projected_residual(&grid, &x, &g);
        if res <= 0.1 * opts.tol || polish >= opts.polish_iters {
            break;
        }
        polish += 1;
        // curvature along v by central differences
        let eps = opts.fd_eps * sup.max(1e-300);
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
        f.gradient(&xp, &mut gp);
        f.gradient(&xm, &mut gm);
        let hv: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let rho = mass_dot(&grid, &v, &hv);
        for i in 0..m {
            v[i] -= dt * (hv[i] - rho * v[i]);
        }
        let vn = axpy_norm(&grid, &v).max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|a| *a /= vn);
        // ascend along v, descend elsewhere
        let gv = mass_dot(&grid, &g, &v);
        let force: Vec<f64> = g.iter().zip(&v).map(|(gi, vi)| -gi + 2.0 * gv * vi).collect();
        if let Some((px, pf)) = &prev {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..m {
                let s = x[i] - px[i];
                let y = pf[i] - force[i];
                ss += s * s * grid.measures[i];
                sy += s * y * grid.measures[i];
            }
            alpha = if sy > 0.0 { (ss / sy).clamp(dt, 1e4 * dt) } else { dt };
        }
        let next: Vec<f64> = x.iter().zip(&force).map(|(a, b)| (a + alpha * b).max(0.0)).collect();
        prev = Some((std::mem::replace(&mut x, next), force));
    }

    // checks on the untruncated problem
    let u = DiscreteFunction::new(grid.clone(), x.clone())?;
    let gphi = grad_phi(&u, kw, &lp)?;
    let residual = projected_residual(&grid, u.values(), gphi.values());
    let slack = 1e-9 * sup;
    let above = x.iter().zip(top).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let gap_top = x.iter().zip(top).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let v_sup = u.sup_norm();
    let (status, note) = if v_sup <= opts.distinct_tol || gap_top <= opts.distinct_tol {
        (Status::NotFound, Some(format!("critical point coincides with an endpoint (sup {v_sup:.3e}, gap {gap_top:.3e})")))
    } else if above > slack {
        (Status::NotFound, Some(format!("critical point exceeds u_lambda by {above:.3e}")))
    } else if residual > opts.tol {
        (Status::MaxIters, Some(format!("polish stopped at residual {residual:.3e}")))
    } else {
        (Status::Converged, None)
    };
    finish(x, status, residual, note, polish)
}
