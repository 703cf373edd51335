//! Principal eigenpair of the discrete operator by Rayleigh-quotient descent on the `L^p` sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::operator::{check_weights, energy_of, lp_norm, mass_dot, operator_into, signed_power, DiscreteFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions {
    /// Residual tolerance; `None` selects 1e-8 for `p = 2` and 1e-6 otherwise.
    pub tol: Option<f64>,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub armijo_c: f64,
    pub shrink: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: None,
            max_iters: 50_000,
            restarts: 3,
            seed: 0,
            armijo_c: 1e-4,
            shrink: 0.5,
        }
    }
}

impl EigenOptions {
    pub fn tolerance(&self, p: f64) -> f64 {
        self.tol.unwrap_or(if p == 2.0 { 1e-8 } else { 1e-6 })
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Positive, normalized in `L^p`.
    pub u1: DiscreteFunction,
    pub residual: f64,
    /// Largest relative deviation of accepted restart eigenvalues from the selected one.
    pub restarts_agreement: f64,
    pub restart_lambdas: Vec<f64>,
    /// Restarts that ended on a sign-changing function.
    pub discarded: usize,
    pub iterations: usize,
}

/// `energy(u) / ||u||_p^p`
pub fn rayleigh_quotient(u: &DiscreteFunction, kw: &KernelWeights, p: f64) -> Result<f64> {
    check_weights(u, kw)?;
    let norm = lp_norm(u, p);
    if norm == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(energy_of(kw, u.values(), p) / norm.powf(p))
}

struct Restart {
    lambda: f64,
    u: Vec<f64>,
    residual: f64,
    iterations: usize,
    sign_changing: bool,
    converged: bool,
}

fn normalize(kw: &KernelWeights, u: &mut [f64], p: f64) {
    let m = &kw.grid().measures;
    let s: f64 = u.iter().zip(m).map(|(x, w)| x.abs().powf(p) * w).sum();
    let inv = s.powf(-1.0 / p);
    u.iter_mut().for_each(|x| *x *= inv);
}

/// `g = Lu - R sp(u, p-1)` on the unit sphere.
fn sphere_gradient(kw: &KernelWeights, u: &[f64], p: f64, r: f64, g: &mut [f64]) {
    operator_into(kw, u, p, g);
    for (gi, &ui) in g.iter_mut().zip(u) {
        *gi -= r * signed_power(ui, p - 1.0);
    }
}

fn descend(kw: &KernelWeights, mut u: Vec<f64>, p: f64, opts: &EigenOptions) -> Restart {
    let grid = kw.grid().clone();
    let tol = opts.tolerance(p);
    let m = u.len();
    normalize(kw, &mut u, p);
    let mut r = energy_of(kw, &u, p);
    let mut g = vec![0.0; m];
    sphere_gradient(kw, &u, p, r, &mut g);
    let mut res = mass_dot(&grid, &g, &g).sqrt();
    let mut alpha = 1.0 / r.max(f64::MIN_POSITIVE);
    let mut trial = vec![0.0; m];
    let mut g_new = vec![0.0; m];
    let mut iterations = 0;
    while res > tol && iterations < opts.max_iters {
        iterations += 1;
        let gg = res * res;
        let mut step = alpha;
        let mut accepted = false;
        let mut r_new = r;
        for _ in 0..60 {
            for k in 0..m {
                trial[k] = u[k] - step * g[k];
            }
            normalize(kw, &mut trial, p);
            r_new = energy_of(kw, &trial, p);
            // allow for round-off in the quotient itself
            let slack = 1e-14 * r.abs();
            if r_new.is_finite() && r_new <= r - opts.armijo_c * step * p * gg + slack {
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if !accepted {
            break;
        }
        sphere_gradient(kw, &trial, p, r_new, &mut g_new);
        // two-point step for the next iteration
        let mut ss = 0.0;
        let mut sy = 0.0;
        for k in 0..m {
            let s = trial[k] - u[k];
            let y = g_new[k] - g[k];
            ss += s * s * grid.measures[k];
            sy += s * y * grid.measures[k];
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (step * 2.0).min(1e12) };
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        r = r_new;
        res = mass_dot(&grid, &g, &g).sqrt();
    }
    // sign normalization then a sign-change test
    let total: f64 = u.iter().sum();
    if total < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let sup = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sign_changing = u.iter().any(|&x| x < -1e-10 * sup);
    Restart {
        lambda: r,
        u,
        residual: res,
        iterations,
        sign_changing,
        converged: res <= tol,
    }
}

/// Smallest Rayleigh quotient over restarts; restart 0 starts from `d^s`, the
/// rest from seeded random positive vectors.
pub fn principal_eigenpair(kw: &KernelWeights, p: f64, opts: &EigenOptions) -> Result<EigenPair> {
    if kw.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    let grid = kw.grid().clone();
    let s = kw.s();
    let restarts = opts.restarts.max(1);
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|k| {
            if k == 0 {
                grid.dist.iter().map(|d| d.powf(s)).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
                (0..grid.len()).map(|_| rng.random_range(0.05..1.0)).collect()
            }
        })
        .collect();
    let runs: Vec<Restart> = starts.into_par_iter().map(|u0| descend(kw, u0, p, opts)).collect();

    let discarded = runs.iter().filter(|r| r.sign_changing).count();
    let accepted: Vec<(usize, &Restart)> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.converged && !r.sign_changing)
        .collect();
    let Some(&(_, best)) = accepted
        .iter()
        .min_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda).then(a.0.cmp(&b.0)))
    else {
        let worst = runs.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        let iterations = runs.iter().map(|r| r.iterations).max().unwrap_or(0);
        return Err(Error::EigenNonConvergence { iterations, residual: worst });
    };
    let agreement = accepted
        .iter()
        .map(|(_, r)| (r.lambda - best.lambda).abs() / best.lambda)
        .fold(0.0, f64::max);
    Ok(EigenPair {
        lambda1: best.lambda,
        u1: DiscreteFunction::new(grid, best.u.clone())?,
        residual: best.residual,
        restarts_agreement: agreement,
        restart_lambdas: accepted.iter().map(|(_, r)| r.lambda).collect(),
        discarded,
        iterations: best.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainSpec};
    use crate::kernel::assemble;
    use crate::params::{validate_params, RawParams};
    use std::sync::Arc;

    fn setup(n: usize, s: f64, p: f64) -> KernelWeights {
        let params = validate_params(RawParams { dim: 1, s, p, q: 1.5, r: 3.0 }).unwrap();
        let grid = Arc::new(build_grid(DomainSpec::Interval { a: 0.0, b: 1.0 }, n).unwrap());
        assemble(grid, &params).unwrap()
    }

    #[test]
    fn single_cell_eigenvalue() {
        let kw = setup(1, 0.4, 2.0);
        let e = principal_eigenpair(&kw, 2.0, &EigenOptions::default()).unwrap();
        assert!((e.lambda1 - 25.0).abs() < 1e-10);
        let u = DiscreteFunction::constant(kw.grid().clone(), 3.0);
        assert!((rayleigh_quotient(&u, &kw, 2.0).unwrap() - 25.0).abs() < 1e-10);
    }

    #[test]
    fn quotient_is_scale_invariant_and_rejects_zero() {
        let kw = setup(10, 0.3, 3.0);
        let u = DiscreteFunction::from_fn(kw.grid().clone(), |x| x[0] * (1.0 - x[0]));
        let a = rayleigh_quotient(&u, &kw, 3.0).unwrap();
        let b = rayleigh_quotient(&u.map(|x| 3.0 * x), &kw, 3.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let z = DiscreteFunction::zeros(kw.grid().clone());
        assert!(matches!(rayleigh_quotient(&z, &kw, 3.0), Err(Error::ZeroFunction)));
    }

    #[test]
    fn eigenfunction_positive_normalized_and_minimal() {
        let kw = setup(32, 0.3, 3.0);
        let e = principal_eigenpair(&kw, 3.0, &EigenOptions::default()).unwrap();
        assert!(e.u1.values().iter().all(|&x| x > 0.0));
        assert!((lp_norm(&e.u1, 3.0) - 1.0).abs() < 1e-10);
        let probe = DiscreteFunction::from_fn(kw.grid().clone(), |x| (x[0] * (1.0 - x[0])).powf(0.3));
        assert!(rayleigh_quotient(&probe, &kw, 3.0).unwrap() >= e.lambda1);
    }
}
