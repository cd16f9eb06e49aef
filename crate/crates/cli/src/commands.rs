//! Subcommand implementations.
//!
//! Every command produces a deterministic CSV (file or stdout); timing and
//! progress go to stderr so byte-identical runs stay byte-identical.

use crate::csvout::{export_csv, fmt_bool, fmt_f64, fmt_u64, fmt_usize};
use icpower::baseline::{oma_optimize_fractions, OmaError};
use icpower::epi::{
    entropy_power, epi_gap, gaussian_entropy, joint_sum_rate_bound, mmse_identity_check,
    sum_rate_bound_correlated, NoiseModel, NoiseSpec,
};
use icpower::gen::seeded_scenario;
use icpower::minpic::{brute_force_solve_with, minpic_solve, Solution};
use icpower::region::boundary_scan_2user;
use icpower::timeshare::{
    build_vertices, default_config_family, default_rate_targets, prune_dominated,
    solve_timeshare_lp,
};
use icpower::{Scenario, SolverSettings};
use std::path::Path;
use std::time::Instant;

/// Exit codes: 0 success, 2 validation error, 3 infeasible problem.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

pub struct CommandError {
    pub exit_code: i32,
    pub message: String,
}

impl CommandError {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_INFEASIBLE,
            message: message.into(),
        }
    }

    fn io(e: std::io::Error) -> Self {
        Self::validation(format!("output error: {e}"))
    }
}

/// One comparison row: a method name, its cost and bookkeeping. Wall time
/// is reported on stderr only; the CSV must be byte-identical across runs.
pub struct Report {
    pub method: &'static str,
    pub feasible: bool,
    pub total_power: f64,
    pub configs_evaluated: usize,
    pub rates: Vec<f64>,
    pub wall_time_s: f64,
}

impl Report {
    fn from_solution(method: &'static str, sol: &Solution, wall_time_s: f64) -> Self {
        Self {
            method,
            feasible: sol.feasible,
            total_power: sol.total_power,
            configs_evaluated: sol.configs_evaluated,
            rates: icpower::model::user_rates(&sol.rates),
            wall_time_s,
        }
    }

    fn row(&self) -> Vec<String> {
        let mut row = vec![
            self.method.to_string(),
            fmt_bool(self.feasible),
            fmt_f64(self.total_power),
            fmt_usize(self.configs_evaluated),
        ];
        row.extend(self.rates.iter().map(|&r| fmt_f64(r)));
        row
    }
}

fn report_header(num_users: usize) -> Vec<String> {
    let mut header = vec![
        "method".to_string(),
        "feasible".to_string(),
        "total_power".to_string(),
        "configs_evaluated".to_string(),
    ];
    header.extend((1..=num_users).map(|k| format!("r{k}_bits")));
    header
}

fn write_reports(
    out: Option<&Path>,
    num_users: usize,
    reports: &[Report],
) -> Result<(), CommandError> {
    let header = report_header(num_users);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = reports.iter().map(Report::row).collect();
    for r in reports {
        eprintln!(
            "{}: total_power={:.6} feasible={} evals={} wall={:.3}s",
            r.method, r.total_power, r.feasible, r.configs_evaluated, r.wall_time_s
        );
    }
    export_csv(out, &header_refs, &rows).map_err(CommandError::io)
}

/// Load the scenario file, or derive a two-user scenario from the seed.
pub fn load_scenario(scenario_path: Option<&Path>, seed: u64) -> Result<Scenario, CommandError> {
    match scenario_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CommandError::validation(format!("cannot read {}: {e}", path.display()))
            })?;
            crate::scenario_io::parse_scenario(&text).map_err(CommandError::validation)
        }
        None => {
            let sc = seeded_scenario(seed, 2);
            eprintln!(
                "no --scenario given; using the seed-{seed} two-user scenario:\n{}",
                crate::scenario_io::scenario_to_json(&sc)
            );
            Ok(sc)
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

pub fn cmd_region(sc: &Scenario, grid: usize, out: Option<&Path>) -> Result<i32, CommandError> {
    let total_power = sc
        .power_budget()
        .ok_or_else(|| CommandError::validation("power_budget: required by the region command"))?;
    let sample = boundary_scan_2user(sc.channel(), total_power, grid)
        .map_err(|e| CommandError::validation(e.to_string()))?;
    let rows: Vec<Vec<String>> = sample
        .points
        .iter()
        .map(|pt| {
            vec![
                fmt_f64(pt.r1),
                fmt_f64(pt.r2),
                fmt_u64(pt.config_id),
                fmt_f64(pt.powers[0]),
                fmt_f64(pt.powers[1]),
                fmt_f64(pt.powers[2]),
                fmt_f64(pt.powers[3]),
            ]
        })
        .collect();
    eprintln!("boundary scan: {} hull points", rows.len());
    export_csv(
        out,
        &[
            "r1_bits",
            "r2_bits",
            "config_id",
            "p11",
            "p12",
            "p21",
            "p22",
        ],
        &rows,
    )
    .map_err(CommandError::io)?;
    Ok(EXIT_OK)
}

pub fn cmd_minpic(
    sc: &Scenario,
    settings: &SolverSettings,
    out: Option<&Path>,
) -> Result<i32, CommandError> {
    let report = solve_minpic_report(sc, settings);
    let feasible = report.feasible;
    write_reports(out, sc.num_users(), &[report])?;
    Ok(if feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn cmd_brute(
    sc: &Scenario,
    grid: usize,
    settings: &SolverSettings,
    out: Option<&Path>,
) -> Result<i32, CommandError> {
    let report = solve_brute_report(sc, grid, settings)?;
    let feasible = report.feasible;
    write_reports(out, sc.num_users(), &[report])?;
    Ok(if feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn cmd_oma(sc: &Scenario, grid: usize, out: Option<&Path>) -> Result<i32, CommandError> {
    let report = solve_oma_report(sc, grid)?;
    write_reports(out, sc.num_users(), &[report])?;
    Ok(EXIT_OK)
}

pub fn cmd_timeshare(
    sc: &Scenario,
    settings: &SolverSettings,
    out: Option<&Path>,
) -> Result<i32, CommandError> {
    let (rows, report) = solve_timeshare_rows(sc, settings)?;
    let u = sc.num_users();
    let mut header = vec![
        "config_id".to_string(),
        "theta".to_string(),
        "power".to_string(),
    ];
    header.extend((1..=u).map(|k| format!("r{k}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    eprintln!(
        "timeshare: avg_power={:.6} over {} active vertices, wall={:.3}s",
        report.total_power,
        rows.len(),
        report.wall_time_s
    );
    export_csv(out, &header_refs, &rows).map_err(CommandError::io)?;
    Ok(EXIT_OK)
}

pub fn cmd_compare(
    sc: &Scenario,
    grid: usize,
    settings: &SolverSettings,
    out: Option<&Path>,
) -> Result<i32, CommandError> {
    let mut reports = Vec::new();
    reports.push(solve_minpic_report(sc, settings));
    if sc.num_users() <= icpower::minpic::MAX_BRUTE_USERS {
        reports.push(solve_brute_report(sc, grid, settings)?);
    }
    match solve_timeshare_rows(sc, settings) {
        Ok((_, report)) => reports.push(report),
        Err(e) if e.exit_code == EXIT_INFEASIBLE => reports.push(Report {
            method: "timeshare",
            feasible: false,
            total_power: 0.0,
            configs_evaluated: 0,
            rates: vec![0.0; sc.num_users()],
            wall_time_s: 0.0,
        }),
        Err(e) => return Err(e),
    }
    match solve_oma_report(sc, grid) {
        Ok(report) => reports.push(report),
        Err(e) if e.exit_code == EXIT_INFEASIBLE => reports.push(Report {
            method: "oma",
            feasible: false,
            total_power: 0.0,
            configs_evaluated: 0,
            rates: vec![0.0; sc.num_users()],
            wall_time_s: 0.0,
        }),
        Err(e) => return Err(e),
    }

    let problem_feasible = reports.first().map(|r| r.feasible).unwrap_or(false);
    write_reports(out, sc.num_users(), &reports)?;
    Ok(if problem_feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

pub fn cmd_epi_bounds(sc: &Scenario, out: Option<&Path>) -> Result<i32, CommandError> {
    let u = sc.num_users();
    let ch = sc.channel();

    // Amplitude crosstalk from the stored power gains; per-component
    // powers from the budget (evenly split) or one unit each.
    let h: Vec<Vec<f64>> = (0..u)
        .map(|i| (0..u).map(|k| ch.gain(i, k).sqrt()).collect())
        .collect();
    let identity: Vec<Vec<f64>> = (0..u)
        .map(|i| (0..u).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let p: Vec<f64> = match sc.power_budget() {
        Some(budget) => vec![budget / u as f64; u],
        None => vec![1.0; u],
    };
    let noise_var: Vec<f64> = (0..u).map(|i| ch.noise(i)).collect();
    let noise = NoiseSpec::gaussian(noise_var.clone())
        .map_err(|e| CommandError::validation(e.to_string()))?;
    let ncov: Vec<Vec<f64>> = (0..u)
        .map(|i| {
            (0..u)
                .map(|j| if i == j { noise_var[i] } else { 0.0 })
                .collect()
        })
        .collect();
    let h_diag: Vec<f64> = (0..u).map(|i| h[i][i]).collect();

    let correlated = sum_rate_bound_correlated(&h, &identity, &p, &noise, NoiseModel::Gaussian);
    let noise_ep = sum_rate_bound_correlated(&h, &identity, &p, &noise, NoiseModel::EntropyPower);
    let joint = joint_sum_rate_bound(&h_diag, &p, &ncov)
        .map_err(|e| CommandError::validation(e.to_string()))?;

    // Gaussian EPI sanity figure: the gap vanishes for two independent
    // Gaussian noises.
    let n0 = entropy_power(
        gaussian_entropy(noise_var[0]).map_err(|e| CommandError::validation(e.to_string()))?,
        1,
    );
    let n1_var = noise_var[u.min(2) - 1];
    let n1 = entropy_power(
        gaussian_entropy(n1_var).map_err(|e| CommandError::validation(e.to_string()))?,
        1,
    );
    let nsum = entropy_power(
        gaussian_entropy(noise_var[0] + n1_var)
            .map_err(|e| CommandError::validation(e.to_string()))?,
        1,
    );
    let gap = epi_gap(n0, n1, nsum);

    let mmse = mmse_identity_check(1.0, p[0]);

    let ln2 = std::f64::consts::LN_2;
    let rows: Vec<Vec<String>> = [
        ("correlated_input_sum_rate", correlated),
        ("noise_entropy_power_sum_rate", noise_ep),
        ("joint_determinant_sum_rate", joint),
        ("gaussian_epi_gap", gap),
        ("mmse_identity_analytic", mmse.analytic),
        ("mmse_identity_finite_difference", mmse.finite_difference),
    ]
    .iter()
    .map(|(name, nats)| vec![name.to_string(), fmt_f64(*nats), fmt_f64(*nats / ln2)])
    .collect();

    export_csv(out, &["bound_name", "value_nats", "value_bits"], &rows)
        .map_err(CommandError::io)?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Shared solver wrappers
// ---------------------------------------------------------------------------

fn solve_minpic_report(sc: &Scenario, settings: &SolverSettings) -> Report {
    let start = Instant::now();
    let sol = minpic_solve(sc, settings);
    Report::from_solution("minpic", &sol, start.elapsed().as_secs_f64())
}

fn solve_brute_report(
    sc: &Scenario,
    grid: usize,
    settings: &SolverSettings,
) -> Result<Report, CommandError> {
    if sc.num_users() == 3 {
        eprintln!(
            "warning: exhaustive search over 3 users enumerates ~3e17 decoding \
             combinations and will effectively never finish"
        );
    }
    let start = Instant::now();
    let sol = brute_force_solve_with(sc, grid, settings)
        .map_err(|e| CommandError::validation(e.to_string()))?;
    Ok(Report::from_solution(
        "brute",
        &sol,
        start.elapsed().as_secs_f64(),
    ))
}

fn solve_oma_report(sc: &Scenario, grid: usize) -> Result<Report, CommandError> {
    let start = Instant::now();
    match oma_optimize_fractions(sc, grid) {
        Ok(sol) => Ok(Report {
            method: "oma",
            feasible: true,
            total_power: sol.total_power,
            configs_evaluated: simplex_grid_size(grid, sc.num_users()),
            rates: sc.rate_min().to_vec(),
            wall_time_s: start.elapsed().as_secs_f64(),
        }),
        Err(OmaError::AllInfeasible) | Err(OmaError::ZeroGain { .. }) => Err(
            CommandError::infeasible("no orthogonal allocation meets the rate floors"),
        ),
        Err(e) => Err(CommandError::validation(e.to_string())),
    }
}

/// Number of grid points on the fraction simplex: C(grid + U - 1, U - 1).
fn simplex_grid_size(grid: usize, num_users: usize) -> usize {
    let mut n = 1usize;
    for i in 0..num_users - 1 {
        n = n * (grid + 1 + i) / (i + 1);
    }
    n
}

fn solve_timeshare_rows(
    sc: &Scenario,
    settings: &SolverSettings,
) -> Result<(Vec<Vec<String>>, Report), CommandError> {
    let start = Instant::now();
    let configs = default_config_family(sc.num_users())
        .map_err(|e| CommandError::validation(e.to_string()))?;
    let targets = default_rate_targets(sc.rate_min());
    let attempts = configs.len() * targets.len();
    let vertices = build_vertices(sc, &configs, &targets, settings);
    if vertices.is_empty() {
        return Err(CommandError::infeasible(
            "no decoding configuration admits finite power at any probe target",
        ));
    }
    let pruned = prune_dominated(&vertices);
    let sched = solve_timeshare_lp(&pruned, sc.rate_min())
        .map_err(|e| CommandError::infeasible(e.to_string()))?;

    let rows: Vec<Vec<String>> = pruned
        .iter()
        .zip(&sched.weights)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(v, &w)| {
            let mut row = vec![fmt_usize(v.config_id), fmt_f64(w), fmt_f64(v.power)];
            row.extend(v.rates.iter().map(|&r| fmt_f64(r)));
            row
        })
        .collect();

    let report = Report {
        method: "timeshare",
        feasible: true,
        total_power: sched.avg_power,
        configs_evaluated: attempts,
        rates: sched.avg_rates.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((rows, report))
}
