//! Grid functions, the discrete Gagliardo energy and its gradient operator.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::KernelWeights;

/// Row-parallel evaluation starts at this many cells.
const PARALLEL_CELLS: usize = 512;

/// Cell averages on a grid; exterior values are implicitly zero.
#[derive(Clone, Debug)]
pub struct DiscreteFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for DiscreteFunction {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.values == other.values
    }
}

impl DiscreteFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(DiscreteFunction { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let m = grid.len();
        DiscreteFunction { grid, values: vec![0.0; m] }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let m = grid.len();
        DiscreteFunction { grid, values: vec![c; m] }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = grid.centers.iter().map(|&c| f(c)).collect();
        DiscreteFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &DiscreteFunction) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    /// Same grid with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        DiscreteFunction::new(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DiscreteFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn positive_part(&self) -> Self {
        self.map(|x| x.max(0.0))
    }

    pub fn negative_part(&self) -> Self {
        self.map(|x| (-x).max(0.0))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn ensure_same_grid(&self, other: &DiscreteFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn check_weights(u: &DiscreteFunction, kw: &KernelWeights) -> Result<()> {
    if same_grid(u.grid(), kw.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `sign(a) |a|^nu`, zero at zero.
pub fn signed_power(a: f64, nu: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if nu == 1.0 {
        a
    } else {
        a.signum() * a.abs().powf(nu)
    }
}

/// Exponent with fast paths for the common integer cases.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Power {
    Two,
    Three,
    Other(f64),
}

impl Power {
    pub(crate) fn new(p: f64) -> Self {
        if p == 2.0 {
            Power::Two
        } else if p == 3.0 {
            Power::Three
        } else {
            Power::Other(p)
        }
    }

    /// `|a|^p`
    #[inline]
    pub(crate) fn abs_pow(self, a: f64) -> f64 {
        match self {
            Power::Two => a * a,
            Power::Three => {
                let b = a.abs();
                b * b * b
            }
            Power::Other(p) => a.abs().powf(p),
        }
    }

    /// `sign(a) |a|^(p-1)`
    #[inline]
    pub(crate) fn signed_pm1(self, a: f64) -> f64 {
        match self {
            Power::Two => a,
            Power::Three => a * a.abs(),
            Power::Other(p) => signed_power(a, p - 1.0),
        }
    }
}

fn rows<T: Send>(m: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if m >= PARALLEL_CELLS {
        (0..m).into_par_iter().map(f).collect()
    } else {
        (0..m).map(f).collect()
    }
}

/// Energy of raw cell values; the caller guarantees matching length.
pub(crate) fn energy_of(kw: &KernelWeights, u: &[f64], p: f64) -> f64 {
    let pw = Power::new(p);
    let v = kw.v();
    let partial = rows(u.len(), |i| {
        let row = kw.row(i);
        let ui = u[i];
        let mut s = 0.0;
        for j in i + 1..u.len() {
            s += row[j] * pw.abs_pow(ui - u[j]);
        }
        2.0 * s + 2.0 * v[i] * pw.abs_pow(ui)
    });
    partial.iter().sum()
}

/// Mass-scaled operator of raw cell values written into `out`.
pub(crate) fn operator_into(kw: &KernelWeights, u: &[f64], p: f64, out: &mut [f64]) {
    let pw = Power::new(p);
    let v = kw.v();
    let measures = &kw.grid().measures;
    let row_value = |i: usize| {
        let row = kw.row(i);
        let ui = u[i];
        let mut s = 0.0;
        for (w, uj) in row.iter().zip(u) {
            s += w * pw.signed_pm1(ui - uj);
        }
        2.0 * (s + v[i] * pw.signed_pm1(ui)) / measures[i]
    };
    if u.len() >= PARALLEL_CELLS {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row_value(i));
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o = row_value(i);
        }
    }
}

/// `sum_{i != j} W_ij |u_i - u_j|^p + 2 sum_i V_i |u_i|^p`.
pub fn gagliardo_energy(u: &DiscreteFunction, kw: &KernelWeights, p: f64) -> Result<f64> {
    check_weights(u, kw)?;
    Ok(energy_of(kw, u.values(), p))
}

/// Discrete fractional p-Laplacian; `|C_i| (Lu)_i` is the partial derivative of energy / p.
pub fn apply_operator(u: &DiscreteFunction, kw: &KernelWeights, p: f64) -> Result<DiscreteFunction> {
    check_weights(u, kw)?;
    let mut out = vec![0.0; u.len()];
    operator_into(kw, u.values(), p, &mut out);
    u.with_values(out)
}

/// `(sum_i |u_i|^nu |C_i|)^(1/nu)`; `nu = inf` gives the max norm.
pub fn lp_norm(u: &DiscreteFunction, nu: f64) -> f64 {
    if nu.is_infinite() {
        return u.sup_norm();
    }
    let s: f64 = u
        .values()
        .iter()
        .zip(&u.grid().measures)
        .map(|(x, m)| x.abs().powf(nu) * m)
        .sum();
    s.powf(1.0 / nu)
}

/// `sum_i a_i b_i |C_i|`
pub fn mass_dot(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(&grid.measures)
        .map(|((x, y), m)| x * y * m)
        .sum()
}

pub fn mass_norm(grid: &Grid, a: &[f64]) -> f64 {
    mass_dot(grid, a, a).sqrt()
}

/// `sum_i (Lu)_i v_i |C_i|`
pub fn pairing(lu: &DiscreteFunction, v: &DiscreteFunction) -> Result<f64> {
    lu.ensure_same_grid(v)?;
    Ok(mass_dot(lu.grid(), lu.values(), v.values()))
}
