use std::sync::Arc;

use rayon::prelude::*;

use super::refine::{check_homogeneity, check_refinement, refinement_study, RefineOptions};
use super::{
    check_hopf, check_limit_branch, check_nonexistence_equi, check_scalar_inequality, check_strict_order,
    check_structure, CheckResult, Table,
};
use crate::eigen::{principal_eigenpair, EigenOptions};
use crate::error::{Error, Result};
use crate::grid::{build_grid, DomainSpec};
use crate::kernel::{assemble, KernelWeights};
use crate::operator::DiscreteFunction;
use crate::params::{validate_params, ProblemParams, RawParams};
use crate::solver::{
    detect_threshold, mountain_pass, solve, torsion_solve, Initial, MountainPassOptions, SolveOptions, Status,
    ThresholdOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuiteGroup {
    Structure,
    Sub,
    Equi,
    Super,
    Torsion,
    Refine,
}

impl SuiteGroup {
    pub const ALL: [SuiteGroup; 6] = [
        SuiteGroup::Structure,
        SuiteGroup::Sub,
        SuiteGroup::Equi,
        SuiteGroup::Super,
        SuiteGroup::Torsion,
        SuiteGroup::Refine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SuiteGroup::Structure => "structure",
            SuiteGroup::Sub => "sub",
            SuiteGroup::Equi => "equi",
            SuiteGroup::Super => "super",
            SuiteGroup::Torsion => "torsion",
            SuiteGroup::Refine => "refine",
        }
    }
}

impl std::str::FromStr for SuiteGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidParams {
                constraint: format!("unknown check group {s:?}"),
            })
    }
}

/// Exponents are `(p, q, r)` per regime.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub domain: DomainSpec,
    pub n: usize,
    pub s: f64,
    pub sub: [f64; 3],
    pub equi: [f64; 3],
    pub sup: [f64; 3],
    pub seed: u64,
    pub trials: usize,
    pub hopf_frac: f64,
    /// Sup-norm spread allowed among random-start solutions.
    pub unique_tol: f64,
    pub torsion_tol: f64,
    /// Final distance for branches approaching zero.
    pub limit_tol: f64,
    /// The branch toward `u_*` must end within `fold_factor * sqrt(bracket_tol) * sup u_*`.
    pub fold_factor: f64,
    pub structure_samples: usize,
    pub scalar_samples: usize,
    pub refine_ns: Vec<usize>,
    pub homogeneity_tol: f64,
    pub solve: SolveOptions,
    pub eigen: EigenOptions,
    pub threshold: ThresholdOptions,
    pub mountain: MountainPassOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            domain: DomainSpec::Interval { a: 0.0, b: 1.0 },
            n: 64,
            s: 0.4,
            sub: [2.0, 1.5, 3.0],
            equi: [2.0, 2.0, 3.0],
            sup: [2.0, 3.0, 4.0],
            seed: 0,
            trials: 10,
            hopf_frac: 0.1,
            unique_tol: 1e-5,
            torsion_tol: 1e-6,
            limit_tol: 1e-3,
            fold_factor: 2.0,
            structure_samples: 200,
            scalar_samples: 100_000,
            refine_ns: vec![32, 64, 128],
            homogeneity_tol: 0.02,
            solve: SolveOptions::default(),
            eigen: EigenOptions::default(),
            threshold: ThresholdOptions::default(),
            mountain: MountainPassOptions::default(),
        }
    }
}

struct Setup {
    params: ProblemParams,
    kw: KernelWeights,
}

impl SuiteConfig {
    fn setup(&self, [p, q, r]: [f64; 3]) -> Result<Setup> {
        let params = validate_params(RawParams { dim: self.domain.dim() as i64, s: self.s, p, q, r })?;
        let grid = Arc::new(build_grid(self.domain, self.n)?);
        let kw = assemble(grid, &params)?;
        Ok(Setup { params, kw })
    }

    fn cold(&self) -> SolveOptions {
        SolveOptions { initial: Initial::ReactionRoot, ..self.solve.clone() }
    }

    fn eigen(&self) -> EigenOptions {
        EigenOptions { seed: self.seed, ..self.eigen.clone() }
    }
}

/// Runs the requested groups; results keep group order.
pub fn run_suite(groups: &[SuiteGroup], cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let per_group = groups
        .par_iter()
        .map(|g| match g {
            SuiteGroup::Structure => structure_checks(cfg),
            SuiteGroup::Sub => sub_checks(cfg),
            SuiteGroup::Equi => equi_checks(cfg),
            SuiteGroup::Super => super_checks(cfg),
            SuiteGroup::Torsion => torsion_checks(cfg),
            SuiteGroup::Refine => refine_checks(cfg),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_group.into_iter().flatten().collect())
}

fn sup_distance(a: &DiscreteFunction, b: &DiscreteFunction) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn converged(r: &crate::solver::SolveReport, what: &str) -> Result<()> {
    if r.status == Status::Converged {
        Ok(())
    } else {
        Err(Error::NonConvergence(format!("{what} ended with status {} and residual {:.3e}", r.status, r.residual)))
    }
}

/// Solves along `lambdas` from cold starts and pairs each value with its solution.
fn cold_branch(cfg: &SuiteConfig, set: &Setup, lambdas: &[f64]) -> Result<Vec<(f64, DiscreteFunction)>> {
    lambdas
        .par_iter()
        .map(|&l| Ok((l, solve(&set.kw, &set.params, l, &cfg.cold())?.u)))
        .collect()
}

fn structure_checks(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (k, p) in [2.0, 3.0].into_iter().enumerate() {
        // keep ps below the dimension
        let s = if p * cfg.s < cfg.domain.dim() as f64 { cfg.s } else { 0.9 / p };
        let params = validate_params(RawParams { dim: cfg.domain.dim() as i64, s, p, q: 1.5, r: p + 1.0 })?;
        let kw = assemble(Arc::new(build_grid(cfg.domain, cfg.n)?), &params)?;
        let seed = cfg.seed.wrapping_add(k as u64);
        out.push(check_structure(&kw, p, cfg.structure_samples, seed)?.renamed(format!("structure_p{p}")));
    }
    for (k, p) in [2.0, 2.5, 3.0].into_iter().enumerate() {
        let seed = cfg.seed.wrapping_add(10 + k as u64);
        out.push(check_scalar_inequality(p, cfg.scalar_samples, seed)?.renamed(format!("scalar_inequality_p{p}")));
    }
    Ok(out)
}

fn sub_checks(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let set = cfg.setup(cfg.sub)?;
    let mut out = Vec::new();

    let runs = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let o = SolveOptions {
                initial: Initial::RandomPositive,
                seed: cfg.seed.wrapping_add(k as u64),
                ..cfg.solve.clone()
            };
            solve(&set.kw, &set.params, 1.0, &o)
        })
        .collect::<Result<Vec<_>>>()?;
    let all_converged = runs.iter().all(|r| r.status == Status::Converged);
    let spread = runs.iter().map(|r| sup_distance(&r.u, &runs[0].u)).fold(0.0f64, f64::max);
    let mut table = Table::new(&["trial", "sup_norm", "residual", "distance_to_first"]);
    for (k, r) in runs.iter().enumerate() {
        table.rows.push(vec![k as f64, r.sup_norm(), r.residual, sup_distance(&r.u, &runs[0].u)]);
    }
    out.push(CheckResult::decided(
        "sub_uniqueness",
        all_converged && spread <= cfg.unique_tol,
        vec![("lambda", 1.0), ("trials", cfg.trials as f64), ("max_distance", spread), ("tol", cfg.unique_tol)],
        Some(table),
        if all_converged { String::new() } else { "a trial did not converge".into() },
    ));

    let lo = solve(&set.kw, &set.params, 1.0, &cfg.cold())?;
    let hi = solve(&set.kw, &set.params, 2.0, &cfg.cold())?;
    converged(&lo, "solve at lambda = 1")?;
    converged(&hi, "solve at lambda = 2")?;
    out.push(check_strict_order(&hi.u, &lo.u, cfg.s)?.renamed("sub_strict_order"));
    out.push(check_hopf(&lo.u, cfg.s, cfg.hopf_frac)?.renamed("sub_hopf"));

    let lambdas: Vec<f64> = (0..=6).map(|k| 0.5f64.powi(k)).collect();
    let branch = cold_branch(cfg, &set, &lambdas)?;
    out.push(check_limit_branch(&branch, None, cfg.limit_tol)?.renamed("sub_limit"));
    Ok(out)
}

fn equi_checks(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let set = cfg.setup(cfg.equi)?;
    let lambda1 = principal_eigenpair(&set.kw, set.params.p, &cfg.eigen())?.lambda1;
    let mut out = Vec::new();
    for frac in [0.5, 0.9, 1.0] {
        let o = SolveOptions { seed: cfg.seed, ..cfg.solve.clone() };
        let c = check_nonexistence_equi(&set.params, &set.kw, frac * lambda1, lambda1, cfg.trials, &o)?;
        out.push(c.renamed(format!("equi_nonexistence_{frac}")));
    }

    let lambda = 1.2 * lambda1;
    let r = solve(&set.kw, &set.params, lambda, &cfg.cold())?;
    out.push(CheckResult::decided(
        "equi_existence",
        r.status == Status::Converged && r.sup_norm() >= cfg.solve.collapse_tol,
        vec![
            ("lambda", lambda),
            ("lambda1", lambda1),
            ("sup_norm", r.sup_norm()),
            ("residual", r.residual),
            ("collapse_tol", cfg.solve.collapse_tol),
        ],
        None,
        format!("status {}", r.status),
    ));
    if r.status == Status::Converged {
        out.push(check_hopf(&r.u, cfg.s, cfg.hopf_frac)?.renamed("equi_hopf"));
    }

    let lambdas: Vec<f64> = (0..=12).map(|k| lambda1 * (1.0 + 0.2 * 0.5f64.powi(k))).collect();
    let branch = cold_branch(cfg, &set, &lambdas)?;
    out.push(check_limit_branch(&branch, None, cfg.limit_tol)?.renamed("equi_limit"));
    Ok(out)
}

fn super_checks(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let set = cfg.setup(cfg.sup)?;
    let (p, q, r) = (set.params.p, set.params.q, set.params.r);
    let topts = ThresholdOptions { eigen: cfg.eigen(), ..cfg.threshold.clone() };
    let th = detect_threshold(&set.params, &set.kw, &topts, &cfg.solve)?;
    let star = th.lambda_star_h;
    let lambda1 = th.eigen.lambda1;
    let mut out = Vec::new();

    let mut table = Table::new(&["lambda", "sup_norm", "energy", "residual"]);
    table.rows = th.branch.iter().map(|b| vec![b.lambda, b.sup_norm, b.energy, b.residual]).collect();
    let width_ok = th.bracket_width <= topts.bracket_tol * star;
    let bound_ok = star >= th.lambda_0;
    out.push(CheckResult::decided(
        "super_threshold",
        width_ok && bound_ok,
        vec![
            ("lambda_star_h", star),
            ("lambda_no", th.lambda_no),
            ("bracket_width", th.bracket_width),
            ("bracket_tol", topts.bracket_tol),
            ("lambda_0", th.lambda_0),
            ("lambda1", lambda1),
            ("solves", th.branch.len() as f64),
        ],
        Some(table),
        String::new(),
    ));

    // lambda_0 t^(q-1) - t^(r-1) <= lambda1 t^(p-1) on a log grid of t
    let lambda0 = th.lambda_0;
    let excess = (-600..=600)
        .map(|k| {
            let t = 10f64.powf(k as f64 / 100.0);
            (lambda0 * t.powf(q - p) - t.powf(r - p) - lambda1) / lambda1
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let below = 0.95 * lambda0;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let o = SolveOptions {
                initial: Initial::RandomPositive,
                seed: cfg.seed.wrapping_add(k as u64),
                ..cfg.solve.clone()
            };
            solve(&set.kw, &set.params, below, &o).map(|r| r.sup_norm())
        })
        .collect::<Result<Vec<_>>>()?;
    let max_sup = trials.iter().copied().fold(0.0f64, f64::max);
    let algebra_tol = 1e-12;
    out.push(CheckResult::decided(
        "super_nonexistence_below_bound",
        excess <= algebra_tol && max_sup < cfg.solve.collapse_tol,
        vec![
            ("lambda_0", lambda0),
            ("max_relative_excess", excess),
            ("algebra_tol", algebra_tol),
            ("lambda", below),
            ("max_sup_norm", max_sup),
            ("collapse_tol", cfg.solve.collapse_tol),
        ],
        None,
        String::new(),
    ));

    let lambda = 1.5 * star;
    let ul = solve(&set.kw, &set.params, lambda, &cfg.cold())?;
    converged(&ul, "solve at 1.5 lambda_star")?;
    let mp = mountain_pass(&set.params, &set.kw, lambda, &ul, &cfg.mountain)?;
    let v = &mp.solution;
    let below_ok = v.u.values().iter().zip(ul.u.values()).all(|(a, b)| a <= b);
    let mp_ok = v.status == Status::Converged
        && v.sup_norm() > 0.0
        && v.sup_norm() < ul.sup_norm()
        && below_ok
        && v.residual <= cfg.mountain.tol;
    let mut path = Table::new(&["node", "energy"]);
    path.rows = mp.path_energies.iter().enumerate().map(|(k, e)| vec![k as f64, *e]).collect();
    out.push(CheckResult::decided(
        "super_mountain_pass",
        mp_ok,
        vec![
            ("lambda", lambda),
            ("sup_u_lambda", ul.sup_norm()),
            ("sup_v", v.sup_norm()),
            ("residual", v.residual),
            ("tol", cfg.mountain.tol),
            ("energy_u_lambda", ul.energy),
            ("energy_v", v.energy),
            ("string_iterations", mp.string_iterations as f64),
            ("polish_iterations", mp.polish_iterations as f64),
        ],
        Some(path),
        format!("status {}{}", v.status, mp.note.as_deref().map(|n| format!("; {n}")).unwrap_or_default()),
    ));
    if v.status == Status::Converged {
        out.push(check_strict_order(&ul.u, &v.u, cfg.s)?.renamed("super_two_solutions_order"));
    }
    out.push(check_hopf(&ul.u, cfg.s, cfg.hopf_frac)?.renamed("super_hopf"));

    let b = topts.bracket_tol;
    let mut branch: Vec<(f64, DiscreteFunction)> = Vec::new();
    for k in (0..=6).rev() {
        let l = star * (1.0 + b * 2f64.powi(k));
        let o = match branch.last() {
            None => cfg.cold(),
            Some((_, prev)) => SolveOptions { initial: Initial::WarmStart(prev.clone()), ..cfg.solve.clone() },
        };
        let r = solve(&set.kw, &set.params, l, &o)?;
        converged(&r, "superdiffusive branch solve")?;
        branch.push((l, r.u));
    }
    let tol = cfg.fold_factor * b.sqrt() * th.u_star.sup_norm();
    out.push(check_limit_branch(&branch, Some(&th.u_star.u), tol)?.renamed("super_limit"));
    Ok(out)
}

fn torsion_checks(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let set = cfg.setup(cfg.sub)?;
    let p = set.params.p;
    let a = torsion_solve(&set.kw, p, &SolveOptions { initial: Initial::Zero, ..cfg.solve.clone() })?;
    let b = torsion_solve(
        &set.kw,
        p,
        &SolveOptions { initial: Initial::RandomPositive, seed: cfg.seed, ..cfg.solve.clone() },
    )?;
    let d = sup_distance(&a.u, &b.u);
    let both = a.status == Status::Converged && b.status == Status::Converged;
    let mut out = vec![CheckResult::decided(
        "torsion_uniqueness",
        both && d <= cfg.torsion_tol,
        vec![("distance", d), ("tol", cfg.torsion_tol), ("residual_a", a.residual), ("residual_b", b.residual)],
        None,
        String::new(),
    )];
    let min = a.u.min_value();
    out.push(CheckResult::decided("torsion_positive", min > 0.0, vec![("min_value", min)], None, String::new()));
    out.push(check_hopf(&a.u, cfg.s, cfg.hopf_frac)?.renamed("torsion_hopf"));
    Ok(out)
}

fn refine_checks(cfg: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let [p, q, r] = cfg.sup;
    let raw = RawParams { dim: cfg.domain.dim() as i64, s: cfg.s, p, q, r };
    let opts = RefineOptions {
        eigen: cfg.eigen(),
        threshold: ThresholdOptions { eigen: cfg.eigen(), ..cfg.threshold.clone() },
        solve: cfg.solve.clone(),
    };
    let rows = refinement_study(raw, cfg.domain, &cfg.refine_ns, None, &opts)?;
    let mut out = vec![check_refinement(&rows)];
    if cfg.domain.dim() == 1 {
        out.push(check_homogeneity(raw, cfg.n, 0.5, cfg.homogeneity_tol, &cfg.eigen())?);
    }
    Ok(out)
}
