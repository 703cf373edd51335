use std::sync::Arc;

use serde::Serialize;

use super::{CheckResult, Table};
use crate::eigen::{principal_eigenpair, EigenOptions};
use crate::error::{Error, Result};
use crate::grid::{build_grid, DomainSpec};
use crate::kernel::assemble;
use crate::params::{validate_params, RawParams, Regime};
use crate::solver::{detect_threshold, solve, SolveOptions, ThresholdOptions};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefineOptions {
    pub eigen: EigenOptions,
    pub threshold: ThresholdOptions,
    pub solve: SolveOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementRow {
    pub n: usize,
    pub lambda1: f64,
    /// Superdiffusive exponents only.
    pub lambda_star: Option<f64>,
    /// Sup-norm of the solution at the fixed `lambda`, when one was given.
    pub sup_norm: Option<f64>,
    /// Relative changes against the previous row.
    pub delta_lambda1: Option<f64>,
    pub delta_lambda_star: Option<f64>,
    pub delta_sup_norm: Option<f64>,
}

fn rel_delta(now: Option<f64>, before: Option<f64>) -> Option<f64> {
    Some((now? - before?).abs() / now?.abs())
}

/// One row per `n` (strictly ascending).
pub fn refinement_study(
    raw: RawParams,
    domain: DomainSpec,
    ns: &[usize],
    lambda: Option<f64>,
    opts: &RefineOptions,
) -> Result<Vec<RefinementRow>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("grid sizes must be non-empty and strictly ascending".into()));
    }
    let params = validate_params(raw)?;
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Arc::new(build_grid(domain, n)?);
        let kw = assemble(grid, &params)?;
        let lambda1 = principal_eigenpair(&kw, params.p, &opts.eigen)?.lambda1;
        let lambda_star = if params.regime() == Regime::Super {
            Some(detect_threshold(&params, &kw, &opts.threshold, &opts.solve)?.lambda_star_h)
        } else {
            None
        };
        let sup_norm = match lambda {
            Some(l) => Some(solve(&kw, &params, l, &opts.solve)?.sup_norm()),
            None => None,
        };
        let prev = rows.last();
        rows.push(RefinementRow {
            n,
            lambda1,
            lambda_star,
            sup_norm,
            delta_lambda1: rel_delta(Some(lambda1), prev.map(|r| r.lambda1)),
            delta_lambda_star: rel_delta(lambda_star, prev.and_then(|r| r.lambda_star)),
            delta_sup_norm: rel_delta(sup_norm, prev.and_then(|r| r.sup_norm)),
        });
    }
    Ok(rows)
}

/// Passes when the relative deltas of `lambda1`, and of `lambda_star` where
/// present, strictly decrease down the table.
pub fn check_refinement(rows: &[RefinementRow]) -> CheckResult {
    let shrinking = |d: Vec<f64>| d.windows(2).all(|w| w[1] < w[0]);
    let d1: Vec<f64> = rows.iter().filter_map(|r| r.delta_lambda1).collect();
    let ds: Vec<f64> = rows.iter().filter_map(|r| r.delta_lambda_star).collect();
    let enough = d1.len() >= 2;
    let ok1 = shrinking(d1.clone());
    let oks = shrinking(ds.clone());
    let mut table = Table::new(&["n", "lambda1", "lambda_star", "sup_norm", "delta_lambda1", "delta_lambda_star"]);
    for r in rows {
        table.rows.push(vec![
            r.n as f64,
            r.lambda1,
            r.lambda_star.unwrap_or(f64::NAN),
            r.sup_norm.unwrap_or(f64::NAN),
            r.delta_lambda1.unwrap_or(f64::NAN),
            r.delta_lambda_star.unwrap_or(f64::NAN),
        ]);
    }
    let notes = if !enough {
        "need at least three grid sizes".into()
    } else if !ok1 {
        "lambda1 deltas do not shrink".into()
    } else if !oks {
        "lambda_star deltas do not shrink".into()
    } else {
        String::new()
    };
    let last = |d: &[f64]| d.last().copied().unwrap_or(f64::NAN);
    CheckResult::decided(
        "refinement",
        enough && ok1 && oks,
        vec![
            ("rows", rows.len() as f64),
            ("final_delta_lambda1", last(&d1)),
            ("final_delta_lambda_star", last(&ds)),
        ],
        Some(table),
        notes,
    )
}

/// `lambda1` on `(0, c)` against `c^(-ps)` times its value on `(0, 1)`.
pub fn check_homogeneity(raw: RawParams, n: usize, c: f64, rel_tol: f64, eigen: &EigenOptions) -> Result<CheckResult> {
    if raw.dim != 1 {
        return Err(Error::Precondition("the homogeneity check runs on intervals".into()));
    }
    if !(c > 0.0 && c != 1.0) {
        return Err(Error::InvalidParams { constraint: format!("scale factor must be positive and not 1, got {c}") });
    }
    let params = validate_params(raw)?;
    let lambda_on = |len: f64| -> Result<f64> {
        let grid = Arc::new(build_grid(DomainSpec::Interval { a: 0.0, b: len }, n)?);
        let kw = assemble(grid, &params)?;
        Ok(principal_eigenpair(&kw, params.p, eigen)?.lambda1)
    };
    let base = lambda_on(1.0)?;
    let scaled = lambda_on(c)?;
    let predicted = base * c.powf(-params.ps());
    let rel = (scaled - predicted).abs() / predicted;
    Ok(CheckResult::decided(
        "homogeneity",
        rel <= rel_tol,
        vec![
            ("scale", c),
            ("lambda1_unit", base),
            ("lambda1_scaled", scaled),
            ("predicted", predicted),
            ("relative_error", rel),
            ("tol", rel_tol),
        ],
        None,
        String::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_row_is_closed_form() {
        let raw = RawParams { dim: 1, s: 0.4, p: 2.0, q: 1.5, r: 3.0 };
        let rows = refinement_study(raw, DomainSpec::Interval { a: 0.0, b: 1.0 }, &[1], None, &RefineOptions::default())
            .unwrap();
        let ps: f64 = 0.8;
        let exact = 4.0 / (ps * (1.0 - ps));
        assert!((rows[0].lambda1 - exact).abs() <= 1e-13 * exact, "{}", rows[0].lambda1);
        assert_eq!(rows[0].delta_lambda1, None);
    }

    #[test]
    fn rejects_unsorted_sizes() {
        let raw = RawParams { dim: 1, s: 0.4, p: 2.0, q: 1.5, r: 3.0 };
        let d = DomainSpec::Interval { a: 0.0, b: 1.0 };
        assert!(refinement_study(raw, d, &[8, 4], None, &RefineOptions::default()).is_err());
    }

    #[test]
    fn halving_the_domain() {
        let raw = RawParams { dim: 1, s: 0.4, p: 2.0, q: 1.5, r: 3.0 };
        let c = check_homogeneity(raw, 32, 0.5, 0.02, &EigenOptions::default()).unwrap();
        assert!(c.passed(), "{:?}", c.witness);
    }
}
