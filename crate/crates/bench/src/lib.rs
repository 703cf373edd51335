//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use fraclog_core::{assemble, build_grid, validate_params, DiscreteFunction, DomainSpec, Grid, KernelWeights, ProblemParams, RawParams};

/// Unit interval or unit square with `n` cells per axis.
pub fn grid(dim: usize, n: usize) -> Arc<Grid> {
    let domain = match dim {
        1 => DomainSpec::Interval { a: 0.0, b: 1.0 },
        _ => DomainSpec::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 },
    };
    Arc::new(build_grid(domain, n).expect("valid grid"))
}

pub fn params(dim: usize, s: f64, p: f64) -> ProblemParams {
    validate_params(RawParams { dim: dim as i64, s, p, q: 1.5, r: 2.0 }).expect("valid parameters")
}

pub fn weights(dim: usize, n: usize, s: f64, p: f64) -> KernelWeights {
    assemble(grid(dim, n), &params(dim, s, p)).expect("assembly")
}

/// Smooth bump vanishing at the boundary.
pub fn bump(grid: &Arc<Grid>) -> DiscreteFunction {
    DiscreteFunction::from_fn(grid.clone(), |x| {
        let y = if grid.dim() == 2 { x[1] * (1.0 - x[1]) } else { 1.0 };
        x[0] * (1.0 - x[0]) * y
    })
}
