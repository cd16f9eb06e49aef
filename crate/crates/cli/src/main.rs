//! `icpower` — interference-channel rate regions and power minimization.
//!
//! ```text
//! icpower <command> [--scenario <path>] [--out <path>] [--tol <float>]
//!                   [--seed <int>] [--grid <int>]
//!
//! commands:
//!   region      sample the 2-user achievable-rate boundary (needs
//!               power_budget in the scenario)
//!   minpic      fast minimum sum-power solver
//!   brute       exhaustive minimum sum-power search (U <= 3)
//!   timeshare   minimum average power by mixing decoding configurations
//!   oma         orthogonal-access baseline
//!   compare     all of the above in one report
//!   epi-bounds  entropy-power sum-rate bounds for the scenario
//! ```
//!
//! Without `--scenario`, a reproducible two-user scenario is derived from
//! `--seed`. CSV goes to `--out` (or stdout); progress and timing go to
//! stderr. Exit codes: 0 success, 2 validation error, 3 infeasible.

mod commands;
mod csvout;
mod scenario_io;

use commands::{CommandError, EXIT_VALIDATION};
use icpower::SolverSettings;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage: icpower <region|minpic|brute|timeshare|oma|compare|epi-bounds> \
[--scenario <path>] [--out <path>] [--tol <float>] [--seed <int>] [--grid <int>]";

struct Args {
    command: String,
    scenario: Option<PathBuf>,
    out: Option<PathBuf>,
    tol: f64,
    seed: u64,
    grid: usize,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut it = argv.iter();
    let command = it.next().ok_or("missing command")?.clone();
    let mut args = Args {
        command,
        scenario: None,
        out: None,
        tol: 1e-9,
        seed: 0,
        grid: 64,
    };
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .ok_or_else(|| format!("flag {flag} needs a value"))
        };
        match flag.as_str() {
            "--scenario" => args.scenario = Some(PathBuf::from(value()?)),
            "--out" => args.out = Some(PathBuf::from(value()?)),
            "--tol" => {
                args.tol = value()?.parse().map_err(|e| format!("--tol: {e}"))?;
                if !args.tol.is_finite() || args.tol <= 0.0 {
                    return Err("--tol: must be a positive number".into());
                }
            }
            "--seed" => {
                args.seed = value()?.parse().map_err(|e| format!("--seed: {e}"))?;
            }
            "--grid" => {
                args.grid = value()?.parse().map_err(|e| format!("--grid: {e}"))?;
                if args.grid < 2 {
                    return Err("--grid: must be at least 2".into());
                }
            }
            other => return Err(format!("unknown flag: {other}")),
        }
    }
    Ok(args)
}

fn run(argv: &[String]) -> Result<i32, CommandError> {
    let args = parse_args(argv).map_err(|msg| CommandError {
        exit_code: EXIT_VALIDATION,
        message: format!("{msg}\n{USAGE}"),
    })?;

    if matches!(args.command.as_str(), "help" | "--help" | "-h") {
        println!("{USAGE}");
        return Ok(0);
    }
    const COMMANDS: &[&str] = &[
        "region",
        "minpic",
        "brute",
        "timeshare",
        "oma",
        "compare",
        "epi-bounds",
    ];
    if !COMMANDS.contains(&args.command.as_str()) {
        return Err(CommandError {
            exit_code: EXIT_VALIDATION,
            message: format!("unknown command: {}\n{USAGE}", args.command),
        });
    }

    let sc = commands::load_scenario(args.scenario.as_deref(), args.seed)?;
    let settings = SolverSettings {
        inner_tol: args.tol.min(1e-9),
        ..SolverSettings::default()
    };
    let out = args.out.as_deref();

    match args.command.as_str() {
        "region" => commands::cmd_region(&sc, args.grid, out),
        "minpic" => commands::cmd_minpic(&sc, &settings, out),
        "brute" => commands::cmd_brute(&sc, args.grid, &settings, out),
        "timeshare" => commands::cmd_timeshare(&sc, &settings, out),
        "oma" => commands::cmd_oma(&sc, args.grid, out),
        "compare" => commands::cmd_compare(&sc, args.grid, &settings, out),
        "epi-bounds" => commands::cmd_epi_bounds(&sc, out),
        _ => unreachable!("command validated above"),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(&argv) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("icpower: {}", e.message);
            ExitCode::from(e.exit_code as u8)
        }
    }
}
