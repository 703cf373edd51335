//! Machine-checkable predicates over solver output.
//!
//! Every check returns a [`CheckResult`] whose witness lists the measured
//! quantities next to the thresholds they were compared against.

mod refine;
mod suite;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::operator::{
    apply_operator, check_weights, gagliardo_energy, lp_norm, pairing, signed_power, DiscreteFunction,
};
use crate::params::{ProblemParams, Regime};
use crate::solver::{solve, Initial, SolveOptions};

pub use refine::{check_homogeneity, check_refinement, refinement_study, RefineOptions, RefinementRow};
pub use suite::{run_suite, SuiteConfig, SuiteGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    OutOfPrecondition,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::OutOfPrecondition => "out_of_precondition",
        })
    }
}

/// Per-sample evidence, one row per cell, trial or branch point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub outcome: Outcome,
    /// Measured values and thresholds, in insertion order.
    pub witness: Vec<(String, f64)>,
    pub table: Option<Table>,
    pub notes: String,
}

impl CheckResult {
    fn decided(name: &str, passed: bool, witness: Vec<(&str, f64)>, table: Option<Table>, notes: String) -> Self {
        CheckResult {
            name: name.to_string(),
            outcome: if passed { Outcome::Pass } else { Outcome::Fail },
            witness: witness.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            table,
            notes,
        }
    }

    fn out_of_precondition(name: &str, witness: Vec<(&str, f64)>, notes: String) -> Self {
        CheckResult {
            outcome: Outcome::OutOfPrecondition,
            ..CheckResult::decided(name, false, witness, None, notes)
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn applicable(&self) -> bool {
        self.outcome != Outcome::OutOfPrecondition
    }

    pub fn witness(&self, key: &str) -> Option<f64> {
        self.witness.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Same check under another name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams { constraint: format!("need 0 < s < 1, got {s}") })
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Index and value of the smallest entry; ties go to the lowest index.
fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((usize::MAX, f64::INFINITY), |best, (i, x)| if x < best.1 { (i, x) } else { best })
}

/// Passes when `min u_i / d_i^s > 0` and the smallest ratio on boundary-adjacent
/// cells is at least `hopf_frac` times the median ratio.
pub fn check_hopf(u: &DiscreteFunction, s: f64, hopf_frac: f64) -> Result<CheckResult> {
    check_s(s)?;
    if !(hopf_frac > 0.0) {
        return Err(Error::InvalidParams { constraint: format!("need hopf_frac > 0, got {hopf_frac}") });
    }
    let grid = u.grid();
    let ratios: Vec<f64> = u.values().iter().zip(&grid.dist).map(|(x, d)| x / d.powf(s)).collect();
    let (min_cell, min_ratio) = argmin(ratios.iter().copied());
    let (layer_cell, layer_min) = argmin(
        ratios
            .iter()
            .zip(&grid.boundary_adjacent)
            .map(|(&r, &b)| if b { r } else { f64::INFINITY }),
    );
    let med = median(&ratios);
    let passed = min_ratio > 0.0 && layer_min >= hopf_frac * med;
    let mut table = Table::new(&["cell", "d", "ratio"]);
    for (i, (r, d)) in ratios.iter().zip(&grid.dist).enumerate() {
        table.rows.push(vec![i as f64, *d, *r]);
    }
    let notes = if passed {
        String::new()
    } else if min_ratio <= 0.0 {
        format!("ratio {min_ratio:.3e} at cell {min_cell} is not positive")
    } else {
        format!("boundary ratio {layer_min:.3e} at cell {layer_cell} is below {hopf_frac} x median {med:.3e}")
    };
    Ok(CheckResult::decided(
        "hopf",
        passed,
        vec![
            ("min_ratio", min_ratio),
            ("min_cell", min_cell as f64),
            ("boundary_min_ratio", layer_min),
            ("boundary_min_cell", layer_cell as f64),
            ("median_ratio", med),
            ("hopf_frac", hopf_frac),
        ],
        Some(table),
        notes,
    ))
}

/// Passes when `u_hi > u_lo` on every cell and `min (u_hi - u_lo) / d^s > 0`.
pub fn check_strict_order(u_hi: &DiscreteFunction, u_lo: &DiscreteFunction, s: f64) -> Result<CheckResult> {
    check_s(s)?;
    u_hi.ensure_same_grid(u_lo)?;
    let grid = u_hi.grid();
    let gaps: Vec<f64> = u_hi.values().iter().zip(u_lo.values()).map(|(a, b)| a - b).collect();
    let (gap_cell, min_gap) = argmin(gaps.iter().copied());
    let (ratio_cell, min_ratio) = argmin(gaps.iter().zip(&grid.dist).map(|(g, d)| g / d.powf(s)));
    let passed = min_gap > 0.0 && min_ratio > 0.0;
    let mut table = Table::new(&["cell", "gap", "gap_over_ds"]);
    for (i, (g, d)) in gaps.iter().zip(&grid.dist).enumerate() {
        table.rows.push(vec![i as f64, *g, g / d.powf(s)]);
    }
    let notes = if passed {
        String::new()
    } else {
        format!("gap {min_gap:.3e} at cell {gap_cell} is not positive")
    };
    Ok(CheckResult::decided(
        "strict_order",
        passed,
        vec![
            ("min_gap", min_gap),
            ("min_gap_cell", gap_cell as f64),
            ("min_gap_ratio", min_ratio),
            ("min_gap_ratio_cell", ratio_cell as f64),
        ],
        Some(table),
        notes,
    ))
}

/// Random-start solves at `lambda <= lambda1` must all collapse. Each returned `u`
/// also satisfies `A(u) >= (lambda1 - lambda) ||u||_p^p + ||u||_r^r`, where
/// `A(u) = energy(u) - lambda ||u||_p^p + ||u||_r^r` vanishes at solutions.
pub fn check_nonexistence_equi(
    params: &ProblemParams,
    kw: &KernelWeights,
    lambda: f64,
    lambda1: f64,
    trials: usize,
    opts: &SolveOptions,
) -> Result<CheckResult> {
    let name = "nonexistence_equi";
    if params.regime() != Regime::Equi || !(lambda <= lambda1) {
        return Ok(CheckResult::out_of_precondition(
            name,
            vec![("lambda", lambda), ("lambda1", lambda1)],
            format!("applies to q = p and lambda <= lambda1 (regime {}, lambda {lambda})", params.regime()),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidParams { constraint: "need at least one trial".into() });
    }
    let (p, r) = (params.p, params.r);
    let rows = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let o = SolveOptions {
                initial: Initial::RandomPositive,
                seed: opts.seed.wrapping_add(k as u64),
                ..opts.clone()
            };
            let rep = solve(kw, params, lambda, &o)?;
            let energy = gagliardo_energy(&rep.u, kw, p)?;
            let np = lp_norm(&rep.u, p).powf(p);
            let nr = lp_norm(&rep.u, r).powf(r);
            let algebra = energy - lambda * np + nr;
            let bound = (lambda1 - lambda) * np + nr;
            Ok(vec![k as f64, rep.sup_norm(), rep.residual, rep.iterations as f64, energy, algebra, bound])
        })
        .collect::<Result<Vec<_>>>()?;
    let max_sup = rows.iter().fold(0.0f64, |m, r| m.max(r[1]));
    // lambda1 is resolved to relative accuracy well below this
    let slack = 1e-7;
    let deficit = rows
        .iter()
        .map(|r| (r[6] - r[5]) / r[4].max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let collapsed = max_sup < opts.collapse_tol;
    let algebra_ok = rows.iter().all(|r| r[5] >= r[6] - slack * r[4]);
    let passed = collapsed && algebra_ok;
    let mut table = Table::new(&["trial", "sup_norm", "residual", "iterations", "energy", "algebra", "bound"]);
    table.rows = rows;
    let notes = match (collapsed, algebra_ok) {
        (true, true) => String::new(),
        (false, _) => format!("a trial kept sup-norm {max_sup:.3e} >= {:.1e}", opts.collapse_tol),
        (true, false) => "identity bound violated".into(),
    };
    Ok(CheckResult::decided(
        name,
        passed,
        vec![
            ("lambda", lambda),
            ("lambda1", lambda1),
            ("trials", trials as f64),
            ("max_sup_norm", max_sup),
            ("collapse_tol", opts.collapse_tol),
            ("max_relative_bound_deficit", deficit),
        ],
        Some(table),
        notes,
    ))
}

/// Branch points in order of approach. Passes when the sup-norm distance to
/// `target` (zero when `None`) strictly decreases and ends at most `tol`.
pub fn check_limit_branch(
    branch: &[(f64, DiscreteFunction)],
    target: Option<&DiscreteFunction>,
    tol: f64,
) -> Result<CheckResult> {
    if branch.len() < 3 {
        return Err(Error::Precondition(format!(
            "a limit check needs at least 3 branch points, got {}",
            branch.len()
        )));
    }
    let increasing = branch.windows(2).all(|w| w[0].0 < w[1].0);
    let decreasing = branch.windows(2).all(|w| w[0].0 > w[1].0);
    if !(increasing || decreasing) {
        return Err(Error::Precondition("branch must be strictly sorted in lambda".into()));
    }
    let mut distances = Vec::with_capacity(branch.len());
    for (_, u) in branch {
        let d = match target {
            Some(t) => {
                u.ensure_same_grid(t)?;
                u.values().iter().zip(t.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            }
            None => u.sup_norm(),
        };
        distances.push(d);
    }
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    let last = *distances.last().unwrap();
    let passed = monotone && last <= tol;
    let worst_ratio = distances.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut table = Table::new(&["lambda", "distance"]);
    table.rows = branch.iter().zip(&distances).map(|((l, _), d)| vec![*l, *d]).collect();
    let notes = match (monotone, last <= tol) {
        (true, true) => String::new(),
        (false, _) => "distance is not strictly decreasing".into(),
        (true, false) => format!("final distance {last:.3e} exceeds {tol:.3e}"),
    };
    Ok(CheckResult::decided(
        "limit_branch",
        passed,
        vec![
            ("points", branch.len() as f64),
            ("first_distance", distances[0]),
            ("final_distance", last),
            ("tol", tol),
            ("max_step_ratio", worst_ratio),
        ],
        Some(table),
        notes,
    ))
}

/// `<Lu, u+> - energy(u+)` and `<Lu, -u-> - energy(u-)`, both nonnegative.
pub fn pnp_gaps(u: &DiscreteFunction, kw: &KernelWeights, p: f64) -> Result<[f64; 2]> {
    check_weights(u, kw)?;
    let lu = apply_operator(u, kw, p)?;
    let plus = u.positive_part();
    let minus = u.negative_part();
    let up = pairing(&lu, &plus)? - gagliardo_energy(&plus, kw, p)?;
    let down = -pairing(&lu, &minus)? - gagliardo_energy(&minus, kw, p)?;
    Ok([up, down])
}

/// `<Lu - Lv, (u - v)+>`, nonnegative and zero only when `u <= v`.
pub fn t_monotonicity_pairing(u: &DiscreteFunction, v: &DiscreteFunction, kw: &KernelWeights, p: f64) -> Result<f64> {
    u.ensure_same_grid(v)?;
    let lu = apply_operator(u, kw, p)?;
    let lv = apply_operator(v, kw, p)?;
    let diff = lu.with_values(lu.values().iter().zip(lv.values()).map(|(a, b)| a - b).collect())?;
    let plus = u.with_values(u.values().iter().zip(v.values()).map(|(a, b)| (a - b).max(0.0)).collect())?;
    pairing(&diff, &plus)
}

/// `2^(2-p) (c-b)^(p-1) - [(a-b)^(p-1) - (a-c)^(p-1)]` with signed powers;
/// nonnegative for `b >= c` and `p >= 2`.
pub fn scalar_inequality_gap(a: f64, b: f64, c: f64, p: f64) -> f64 {
    let e = p - 1.0;
    2f64.powf(2.0 - p) * signed_power(c - b, e) - (signed_power(a - b, e) - signed_power(a - c, e))
}

/// Discrete sign and comparison structure of the operator on `samples` random
/// sign-changing pairs.
pub fn check_structure(kw: &KernelWeights, p: f64, samples: usize, seed: u64) -> Result<CheckResult> {
    let grid = kw.grid().clone();
    let m = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // relative rounding allowance
    let tol = 1e-11;
    let mut worst_pnp = f64::INFINITY;
    let mut worst_t = f64::INFINITY;
    let mut strict_fail = 0usize;
    for _ in 0..samples {
        let amp: f64 = rng.random_range(0.1..10.0);
        let u = DiscreteFunction::new(grid.clone(), (0..m).map(|_| amp * rng.random_range(-1.0..1.0)).collect())?;
        let v = DiscreteFunction::new(grid.clone(), (0..m).map(|_| amp * rng.random_range(-1.0..1.0)).collect())?;
        let scale = gagliardo_energy(&u, kw, p)?.max(f64::MIN_POSITIVE);
        let [a, b] = pnp_gaps(&u, kw, p)?;
        worst_pnp = worst_pnp.min(a.min(b) / scale);
        let dscale = scale + gagliardo_energy(&v, kw, p)?;
        let t = t_monotonicity_pairing(&u, &v, kw, p)?;
        worst_t = worst_t.min(t / dscale);
        let positive_part = u.values().iter().zip(v.values()).any(|(a, b)| a > b);
        if positive_part && !(t > 0.0) {
            strict_fail += 1;
        }
    }
    let passed = worst_pnp >= -tol && worst_t >= -tol && strict_fail == 0;
    Ok(CheckResult::decided(
        "structure",
        passed,
        vec![
            ("p", p),
            ("samples", samples as f64),
            ("min_relative_pnp_gap", worst_pnp),
            ("min_relative_t_pairing", worst_t),
            ("strictness_failures", strict_fail as f64),
            ("tol", tol),
        ],
        None,
        String::new(),
    ))
}

/// The scalar inequality on `samples` random triples with `b >= c`.
pub fn check_scalar_inequality(p: f64, samples: usize, seed: u64) -> Result<CheckResult> {
    if !(p >= 2.0) {
        return Err(Error::Precondition(format!("the scalar inequality needs p >= 2, got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-12;
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let a: f64 = rng.random_range(-10.0..10.0);
        let x: f64 = rng.random_range(-10.0..10.0);
        let y: f64 = rng.random_range(-10.0..10.0);
        let (b, c) = if x >= y { (x, y) } else { (y, x) };
        let scale = ((a - b).abs() + (a - c).abs() + (b - c).abs()).powf(p - 1.0).max(f64::MIN_POSITIVE);
        worst = worst.min(scalar_inequality_gap(a, b, c, p) / scale);
    }
    Ok(CheckResult::decided(
        "scalar_inequality",
        worst >= -tol,
        vec![("p", p), ("samples", samples as f64), ("min_relative_gap", worst), ("tol", tol)],
        None,
        String::new(),
    ))
}
