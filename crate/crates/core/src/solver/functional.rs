//! Energies minimized by the solvers. Gradients are mass-scaled.

use std::sync::Arc;

use crate::grid::Grid;
use crate::kernel::KernelWeights;
use crate::logistic::{
    phi_energy_of, phi_grad_into, truncated_energy_of, truncated_grad_into, LogisticParams,
    TruncatedReaction,
};
use crate::operator::{energy_of, operator_into};

/// A `C^1` energy on grid functions with its mass-scaled gradient.
pub trait Functional {
    fn grid(&self) -> &Arc<Grid>;
    fn energy(&self, u: &[f64]) -> f64;
    fn gradient(&self, u: &[f64], out: &mut [f64]);
}

pub struct PhiFunctional<'a> {
    pub kw: &'a KernelWeights,
    pub lp: LogisticParams,
}

impl Functional for PhiFunctional<'_> {
    fn grid(&self) -> &Arc<Grid> {
        self.kw.grid()
    }
    fn energy(&self, u: &[f64]) -> f64 {
        phi_energy_of(self.kw, &self.lp, u)
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        phi_grad_into(self.kw, &self.lp, u, out)
    }
}

pub struct TruncatedFunctional<'a> {
    pub kw: &'a KernelWeights,
    pub tr: &'a TruncatedReaction,
}

impl Functional for TruncatedFunctional<'_> {
    fn grid(&self) -> &Arc<Grid> {
        self.kw.grid()
    }
    fn energy(&self, u: &[f64]) -> f64 {
        truncated_energy_of(self.kw, self.tr, u)
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        truncated_grad_into(self.kw, self.tr, u, out)
    }
}

/// `energy / p - sum_i u_i |C_i|`
pub struct TorsionFunctional<'a> {
    pub kw: &'a KernelWeights,
    pub p: f64,
}

impl Functional for TorsionFunctional<'_> {
    fn grid(&self) -> &Arc<Grid> {
        self.kw.grid()
    }
    fn energy(&self, u: &[f64]) -> f64 {
        let mass: f64 = u.iter().zip(&self.kw.grid().measures).map(|(x, m)| x * m).sum();
        energy_of(self.kw, u, self.p) / self.p - mass
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        operator_into(self.kw, u, self.p, out);
        out.iter_mut().for_each(|o| *o -= 1.0);
    }
}
