use super::{minimize, random_positive, Functional, Initial, SolveOptions, SolveReport, TorsionFunctional};
use crate::eigen::{principal_eigenpair, EigenOptions};
use crate::error::Result;
use crate::kernel::KernelWeights;
use crate::operator::DiscreteFunction;

/// Minimizes `energy / p - sum_i v_i |C_i|`; the minimizer solves `Lv = 1`.
pub fn torsion_solve(kw: &KernelWeights, p: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let f = TorsionFunctional { kw, p };
    let grid = f.grid().clone();
    let u0 = match &opts.initial {
        Initial::Zero | Initial::ReactionRoot => DiscreteFunction::zeros(grid),
        Initial::Constant(c) => DiscreteFunction::constant(grid, *c),
        Initial::WarmStart(u) => u.clone(),
        Initial::RandomPositive => {
            let m = grid.len();
            DiscreteFunction::new(grid, random_positive(m, 1.0, opts.seed))?
        }
        Initial::ScaledEigen(tau) => {
            let e = principal_eigenpair(kw, p, &EigenOptions { seed: opts.seed, ..EigenOptions::default() })?;
            e.u1.map(|x| tau * x)
        }
    };
    minimize(&f, &u0, opts)
}
