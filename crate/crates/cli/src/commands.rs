use std::path::Path;
use std::sync::Arc;

use fraclog_core::verify::{check_homogeneity, check_refinement, refinement_study, run_suite, RefineOptions};
use fraclog_core::{
    assemble_cached, build_grid, detect_threshold, mountain_pass, principal_eigenpair, solve, sweep, torsion_solve,
    verify, BranchPoint, CacheStatus, Error, KernelWeights, ProblemParams, RawParams, SolveReport, Status, WeightCache,
};
use serde_json::json;

use crate::config::Loaded;
use crate::error::{CliError, EXIT_NONCONVERGENCE, EXIT_OK, EXIT_VERIFICATION};
use crate::output::{num, OutDir};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Eigen,
    Torsion,
    Solve,
    Sweep,
    Threshold,
    MountainPass,
    Verify,
    Refine,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Torsion => "torsion",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Threshold => "threshold",
            Command::MountainPass => "mountain-pass",
            Command::Verify => "verify",
            Command::Refine => "refine",
        }
    }
}

struct Setup {
    params: ProblemParams,
    kw: KernelWeights,
    cache: CacheStatus,
}

fn setup(cfg: &Loaded) -> Result<Setup, CliError> {
    let params = cfg.params()?;
    let grid = Arc::new(build_grid(cfg.domain()?, cfg.config.n)?);
    let cache = (!cfg.config.cache_dir.is_empty()).then(|| WeightCache::new(&cfg.config.cache_dir));
    let (kw, status) = assemble_cached(grid, &params, cache.as_ref())?;
    Ok(Setup { params, kw, cache: status })
}

fn report_json(r: &SolveReport) -> serde_json::Value {
    json!({
        "status": r.status,
        "energy": r.energy,
        "initial_energy": r.initial_energy,
        "residual": r.residual,
        "iterations": r.iterations,
        "sup_norm": r.sup_norm(),
    })
}

fn converged_code(statuses: impl IntoIterator<Item = Status>) -> i32 {
    if statuses.into_iter().any(|s| s == Status::MaxIters) {
        EXIT_NONCONVERGENCE
    } else {
        EXIT_OK
    }
}

fn branch_rows(points: &[BranchPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|b| vec![num(b.lambda), num(b.sup_norm), num(b.energy), b.status.to_string()])
        .collect()
}

const BRANCH_COLUMNS: [&str; 4] = ["lambda", "sup_norm", "energy", "status"];

/// Runs `command`, writes its files under `out` and returns the exit code.
pub fn run(command: Command, cfg: &Loaded, out: &Path) -> Result<i32, CliError> {
    let c = &cfg.config;
    match command {
        Command::Eigen => {
            let st = setup(cfg)?;
            let e = principal_eigenpair(&st.kw, st.params.p, &cfg.eigen_options())?;
            let mut dir = OutDir::create(out, c)?;
            dir.solution("solution.csv", &e.u1, st.params.s)?;
            dir.report(
                command.name(),
                c,
                Some(st.cache),
                json!({
                    "lambda1": e.lambda1,
                    "residual": e.residual,
                    "iterations": e.iterations,
                    "restart_lambdas": e.restart_lambdas,
                    "restarts_agreement": e.restarts_agreement,
                    "discarded_restarts": e.discarded,
                    "min_value": e.u1.min_value(),
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Torsion => {
            let st = setup(cfg)?;
            let r = torsion_solve(&st.kw, st.params.p, &cfg.solve_options()?)?;
            let mut dir = OutDir::create(out, c)?;
            dir.solution("solution.csv", &r.u, st.params.s)?;
            dir.report(command.name(), c, Some(st.cache), json!({ "torsion": report_json(&r), "min_value": r.u.min_value() }))?;
            Ok(converged_code([r.status]))
        }
        Command::Solve => {
            let lambda = cfg.lambda()?;
            let st = setup(cfg)?;
            let r = solve(&st.kw, &st.params, lambda, &cfg.solve_options()?)?;
            let mut dir = OutDir::create(out, c)?;
            dir.solution("solution.csv", &r.u, st.params.s)?;
            dir.report(
                command.name(),
                c,
                Some(st.cache),
                json!({ "lambda": lambda, "regime": format!("{:?}", st.params.regime()), "solve": report_json(&r) }),
            )?;
            Ok(converged_code([r.status]))
        }
        Command::Sweep => {
            let lambdas = cfg.sweep_lambdas()?;
            let st = setup(cfg)?;
            let b = sweep(&st.kw, &st.params, &lambdas, &cfg.solve_options()?, c.warm)?;
            let mut dir = OutDir::create(out, c)?;
            dir.csv("branch.csv", &BRANCH_COLUMNS, &branch_rows(&b.points))?;
            dir.report(command.name(), c, Some(st.cache), json!({ "points": b.points }))?;
            Ok(converged_code(b.points.iter().map(|p| p.status)))
        }
        Command::Threshold => {
            let st = setup(cfg)?;
            let t = detect_threshold(&st.params, &st.kw, &cfg.threshold_options(), &cfg.solve_options()?)?;
            let mut dir = OutDir::create(out, c)?;
            dir.csv("branch.csv", &BRANCH_COLUMNS, &branch_rows(&t.branch))?;
            dir.solution("solution.csv", &t.u_star.u, st.params.s)?;
            dir.report(
                command.name(),
                c,
                Some(st.cache),
                json!({
                    "lambda_star_h": t.lambda_star_h,
                    "lambda_0": t.lambda_0,
                    "lambda_no": t.lambda_no,
                    "bracket_width": t.bracket_width,
                    "relative_bracket_width": t.bracket_width / t.lambda_star_h,
                    "lambda1": t.eigen.lambda1,
                    "solves": t.branch.len(),
                    "u_star": report_json(&t.u_star),
                }),
            )?;
            Ok(converged_code([t.u_star.status]))
        }
        Command::MountainPass => {
            let lambda = cfg.lambda()?;
            let st = setup(cfg)?;
            let opts = cfg.solve_options()?;
            let u = solve(&st.kw, &st.params, lambda, &opts)?;
            let mut dir = OutDir::create(out, c)?;
            dir.solution("anchor.csv", &u.u, st.params.s)?;
            if u.status != Status::Converged {
                dir.report(
                    command.name(),
                    c,
                    Some(st.cache),
                    json!({ "lambda": lambda, "anchor": report_json(&u), "note": "anchor solve is not a nontrivial converged solution" }),
                )?;
                return Ok(EXIT_NONCONVERGENCE);
            }
            let mp = mountain_pass(&st.params, &st.kw, lambda, &u, &cfg.mountain_options())?;
            let v = &mp.solution;
            dir.solution("solution.csv", &v.u, st.params.s)?;
            let max_excess = v.u.values().iter().zip(u.u.values()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
            dir.report(
                command.name(),
                c,
                Some(st.cache),
                json!({
                    "lambda": lambda,
                    "anchor": report_json(&u),
                    "mountain_pass": report_json(v),
                    "max_v_minus_anchor": max_excess,
                    "path_energies": mp.path_energies,
                    "string_iterations": mp.string_iterations,
                    "polish_iterations": mp.polish_iterations,
                    "note": mp.note,
                }),
            )?;
            Ok(converged_code([v.status]))
        }
        Command::Verify => {
            let groups = groups(&c.regime).map_err(|message| crate::config::ConfigError::Invalid {
                key: "regime".into(),
                origin: cfg.origin("regime"),
                message,
            })?;
            let suite = cfg.suite_config()?;
            let results = run_suite(&groups, &suite)?;
            let mut dir = OutDir::create(out, c)?;
            let summary: Vec<Vec<String>> =
                results.iter().map(|r| vec![r.name.clone(), r.outcome.to_string(), r.notes.clone()]).collect();
            dir.csv("checks.csv", &["name", "outcome", "notes"], &summary)?;
            for r in &results {
                let rows: Vec<Vec<String>> = r.witness.iter().map(|(k, v)| vec![k.clone(), num(*v)]).collect();
                dir.csv(&format!("witness_{}.csv", r.name), &["key", "value"], &rows)?;
                if let Some(t) = &r.table {
                    let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
                    let rows: Vec<Vec<String>> = t.rows.iter().map(|row| row.iter().map(|x| num(*x)).collect()).collect();
                    dir.csv(&format!("table_{}.csv", r.name), &cols, &rows)?;
                }
            }
            let failed = results.iter().filter(|r| r.applicable() && !r.passed()).count();
            dir.report(
                command.name(),
                c,
                None,
                json!({
                    "groups": groups.iter().map(|g| g.name()).collect::<Vec<_>>(),
                    "passed": results.iter().filter(|r| r.passed()).count(),
                    "failed": failed,
                    "out_of_precondition": results.iter().filter(|r| !r.applicable()).count(),
                    "checks": results,
                }),
            )?;
            Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFICATION })
        }
        Command::Refine => {
            let params = cfg.params()?;
            let raw = RawParams { dim: c.dim, s: params.s, p: params.p, q: params.q, r: params.r };
            let opts = RefineOptions {
                eigen: cfg.eigen_options(),
                threshold: cfg.threshold_options(),
                solve: cfg.solve_options()?,
            };
            let lambda = (c.refine_lambda > 0.0).then_some(c.refine_lambda);
            let rows = refinement_study(raw, cfg.domain()?, &c.refine_ns, lambda, &opts)?;
            let mut checks = vec![check_refinement(&rows)];
            if c.dim == 1 {
                checks.push(check_homogeneity(raw, c.n, 0.5, c.homogeneity_tol, &opts.eigen)?);
            }
            let mut dir = OutDir::create(out, c)?;
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.lambda1),
                        opt(r.lambda_star),
                        opt(r.sup_norm),
                        opt(r.delta_lambda1),
                        opt(r.delta_lambda_star),
                        opt(r.delta_sup_norm),
                    ]
                })
                .collect();
            dir.csv(
                "refine.csv",
                &["n", "lambda1", "lambda_star", "sup_norm", "delta_lambda1", "delta_lambda_star", "delta_sup_norm"],
                &table,
            )?;
            let ok = checks.iter().all(|r| r.passed());
            dir.report(command.name(), c, None, json!({ "rows": rows, "checks": checks }))?;
            Ok(if ok { EXIT_OK } else { EXIT_VERIFICATION })
        }
    }
}

/// `all` or a comma-separated list of group names.
pub fn groups(list: &str) -> Result<Vec<verify::SuiteGroup>, String> {
    if list.trim() == "all" {
        return Ok(verify::SuiteGroup::ALL.to_vec());
    }
    list.split(',').map(|g| g.trim().parse().map_err(|e: Error| e.to_string())).collect()
}
