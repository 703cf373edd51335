//! Exact pair and exterior weights for cells on the line.
//!
//! With `beta = 1 + ps` the kernel is `|x - y|^-beta`. Its twice-iterated
//! antiderivative is `H(t) = t^(2-beta) / ((beta-1)(2-beta))` up to sign, so every
//! weight is a second difference of `H` and stays finite for touching cells.

use crate::error::{Error, Result};

fn check_beta(beta: f64) -> Result<()> {
    if beta > 1.0 && beta < 2.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "kernel exponent beta = {beta} must lie in (1, 2)"
        )))
    }
}

/// `(1 + x)^g - 1` without cancellation for small `x`.
fn pow1pm1(x: f64, g: f64) -> f64 {
    (g * x.ln_1p()).exp_m1()
}

/// `int_A int_B |x - y|^-beta dy dx` for intervals with disjoint interiors.
pub fn pair_weight_1d(a: [f64; 2], b: [f64; 2], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let (left, right) = if a[0] <= b[0] { (a, b) } else { (b, a) };
    if left[1] > right[0] {
        return Err(Error::CellOverlap(format!("{a:?} and {b:?}")));
    }
    let gamma = 2.0 - beta;
    let c = 1.0 / ((beta - 1.0) * gamma);
    let wa = left[1] - left[0];
    let wb = right[1] - right[0];
    let gap = right[0] - left[1];
    let value = if gap == 0.0 {
        c * (wa.powf(gamma) + wb.powf(gamma) - (wa + wb).powf(gamma))
    } else {
        // H(gap + d) - H(gap) = c gap^gamma ((1 + d/gap)^gamma - 1)
        let e = |d: f64| pow1pm1(d / gap, gamma);
        c * gap.powf(gamma) * (e(wa) + e(wb) - e(wa + wb))
    };
    Ok(value.max(0.0))
}

/// `int_cell int_{R \ (a,b)} |x - y|^-beta dy dx` for a cell inside `(a, b)`.
pub fn exterior_weight_1d(cell: [f64; 2], domain: [f64; 2], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let [a, b] = domain;
    let [c0, c1] = cell;
    if !(a <= c0 && c0 < c1 && c1 <= b) {
        return Err(Error::Precondition(format!(
            "cell {cell:?} is not inside the domain {domain:?}"
        )));
    }
    let ps = beta - 1.0;
    let e = 1.0 - ps;
    // each tail contributes dist^-ps / ps; integrate over the cell
    let left = (c1 - a).powf(e) - (c0 - a).powf(e);
    let right = (b - c0).powf(e) - (b - c1).powf(e);
    Ok((left + right) / (ps * e))
}
