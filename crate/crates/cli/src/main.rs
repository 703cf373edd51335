//! `fraclog`: solver and verification driver.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::Command;
use config::{ConfigError, Origin, ENV_PREFIX, KEYS};
use error::{CliError, EXIT_INVALID, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "fraclog", version, about = "Fractional p-Laplacian logistic solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Principal eigenpair of the discrete operator.
    Eigen,
    /// Torsion function: L v = 1 with zero exterior data.
    Torsion,
    /// One positive solution at `lambda`.
    Solve,
    /// Solutions at `steps` equally spaced lambdas from `from` to `to`; writes branch.csv.
    Sweep,
    /// Bifurcation threshold for q > p; writes branch.csv.
    Threshold,
    /// Second solution below the minimizer at `lambda`.
    MountainPass,
    /// Verification checks of the selected `regime` groups.
    Verify,
    /// Grid refinement table over `refine_ns`.
    Refine,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Eigen => Command::Eigen,
            Cmd::Torsion => Command::Torsion,
            Cmd::Solve => Command::Solve,
            Cmd::Sweep => Command::Sweep,
            Cmd::Threshold => Command::Threshold,
            Cmd::MountainPass => Command::MountainPass,
            Cmd::Verify => Command::Verify,
            Cmd::Refine => Command::Refine,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "fraclog-out", value_name = "DIR")]
    out: PathBuf,
    /// Override any key, e.g. `--set initial=random` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    r: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    n: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    threads: Option<String>,
    #[arg(long, global = true)]
    regime: Option<String>,
    #[arg(long = "bracket-tol", global = true, allow_hyphen_values = true)]
    bracket_tol: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    steps: Option<String>,
    /// Warm-start each sweep point from the previous one.
    #[arg(long, global = true)]
    warm: bool,
}

impl Common {
    /// `(key, raw value, flag)` in increasing precedence.
    fn overrides(&self) -> Result<Vec<(String, String, String)>, ConfigError> {
        let mut out = Vec::new();
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Invalid {
                key: kv.clone(),
                origin: Origin::Flag("--set".into()),
                message: "expected KEY=VALUE".into(),
            })?;
            out.push((k.trim().to_string(), v.trim().to_string(), format!("--set {}", k.trim())));
        }
        let named = [
            ("s", &self.s),
            ("p", &self.p),
            ("q", &self.q),
            ("r", &self.r),
            ("n", &self.n),
            ("lambda", &self.lambda),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("regime", &self.regime),
            ("bracket_tol", &self.bracket_tol),
            ("from", &self.from),
            ("to", &self.to),
            ("steps", &self.steps),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                let value = if key == "regime" { format!("{v:?}") } else { v.clone() };
                out.push((key.to_string(), value, format!("--{}", key.replace('_', "-"))));
            }
        }
        if self.warm {
            out.push(("warm".into(), "true".into(), "--warm".into()));
        }
        Ok(out)
    }
}

fn keys_help() -> String {
    let width = KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut text = format!(
        "Configuration keys (TOML file < {ENV_PREFIX}<KEY> environment variables < flags; s, p, q, r are required \
         except by verify):\n"
    );
    for (k, doc) in KEYS {
        text.push_str(&format!("  {k:width$}  {doc}\n"));
    }
    text.push_str("\nExit codes: 0 success, 1 invalid input, 2 solver non-convergence, 3 verification failure.");
    text
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let flags = cli.common.overrides()?;
    let loaded = config::load(cli.common.config.as_deref(), std::env::vars(), &flags)?;
    let threads = loaded.config.threads;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Threads { threads, message: e.to_string() })?;
    }
    let code = commands::run(cli.command.into(), &loaded, &cli.common.out)?;
    println!("{}: results in {}", Command::from(cli.command).name(), cli.common.out.display());
    Ok(code)
}

fn main() -> ExitCode {
    let help = keys_help();
    let cmd = Cli::command().after_help(help.clone()).mut_subcommands(|s| s.after_help(help.clone()));
    let cli = match cmd.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { EXIT_OK as u8 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
