//! Dense interaction weights `W` and exterior weights `V` of the discrete energy.

mod cache;
mod one_d;
mod two_d;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{CellBox, DomainSpec, Grid};
use crate::params::ProblemParams;

pub use cache::{assemble_cached, CacheStatus, WeightCache};
pub use one_d::{exterior_weight_1d, pair_weight_1d};
pub use two_d::{exterior_weight_2d, half_plane_constant, pair_weight_2d, quadrant_integral, radial_tail};

/// Below this many cells assembly stays on the calling thread.
const PARALLEL_CELLS: usize = 512;

/// Symmetric dense weights on a fixed grid. `W` is row-major with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelWeights {
    grid: Arc<Grid>,
    s: f64,
    p: f64,
    w: Vec<f64>,
    v: Vec<f64>,
}

impl KernelWeights {
    /// Wraps precomputed weights after checking their shape.
    pub fn from_parts(grid: Arc<Grid>, s: f64, p: f64, w: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        if w.len() != m * m {
            return Err(Error::LengthMismatch { expected: m * m, got: w.len() });
        }
        if v.len() != m {
            return Err(Error::LengthMismatch { expected: m, got: v.len() });
        }
        Ok(KernelWeights { grid, s, p, w, v })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn ps(&self) -> f64 {
        self.p * self.s
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.len();
        &self.w[i * m..(i + 1) * m]
    }

    pub fn w_dense(&self) -> &[f64] {
        &self.w
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }
}

/// Builds `W` and `V` for the grid. Output is bit-identical for any thread count.
pub fn assemble(grid: Arc<Grid>, params: &ProblemParams) -> Result<KernelWeights> {
    if grid.dim() != params.dim {
        return Err(Error::Precondition(format!(
            "grid dimension {} differs from parameter dimension {}",
            grid.dim(),
            params.dim
        )));
    }
    let ps = params.ps();
    let m = grid.len();
    let n = grid.n;
    let parallel = m >= PARALLEL_CELLS;

    // uniform cells: W depends only on the index offset
    let (table, stride) = match grid.domain {
        DomainSpec::Interval { a, b } => {
            let h = (b - a) / n as f64;
            let beta = 1.0 + ps;
            let entry = |k: usize| -> Result<f64> {
                if k == 0 {
                    return Ok(0.0);
                }
                let k = k as f64;
                pair_weight_1d([0.0, h], [k * h, (k + 1.0) * h], beta)
            };
            (collect(n, parallel, entry)?, 0)
        }
        DomainSpec::Rectangle { x0, x1, y0, y1 } => {
            let hx = (x1 - x0) / n as f64;
            let hy = (y1 - y0) / n as f64;
            let origin = CellBox::rect(0.0, hx, 0.0, hy);
            let entry = |k: usize| -> Result<f64> {
                let (di, dj) = (k / n, k % n);
                if di == 0 && dj == 0 {
                    return Ok(0.0);
                }
                let (di, dj) = (di as f64, dj as f64);
                let other = CellBox::rect(di * hx, (di + 1.0) * hx, dj * hy, (dj + 1.0) * hy);
                pair_weight_2d(&origin, &other, ps)
            };
            (collect(n * n, parallel, entry)?, n)
        }
    };

    let offset = |i: usize, j: usize| -> usize {
        if stride == 0 {
            i.abs_diff(j)
        } else {
            (i / n).abs_diff(j / n) * n + (i % n).abs_diff(j % n)
        }
    };
    let mut w = vec![0.0; m * m];
    let fill = |(i, row): (usize, &mut [f64])| {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = table[offset(i, j)];
        }
    };
    if parallel {
        w.par_chunks_mut(m.max(1)).enumerate().for_each(fill);
    } else {
        w.chunks_mut(m.max(1)).enumerate().for_each(fill);
    }

    let domain = grid.domain;
    let exterior = |i: usize| -> Result<f64> {
        let cell = &grid.cells[i];
        match domain {
            DomainSpec::Interval { a, b } => {
                exterior_weight_1d([cell.lo[0], cell.hi[0]], [a, b], 1.0 + ps)
            }
            DomainSpec::Rectangle { .. } => exterior_weight_2d(cell, &domain, ps),
        }
    };
    let v = collect(m, parallel, exterior)?;
    Ok(KernelWeights { grid, s: params.s, p: params.p, w, v })
}

fn collect(len: usize, parallel: bool, f: impl Fn(usize) -> Result<f64> + Sync + Send) -> Result<Vec<f64>> {
    if parallel {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}
