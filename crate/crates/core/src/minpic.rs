//! Minimum sum-power allocation under per-user rate floors.
//!
//! The problem: pick stream powers (and implicitly per-receiver decoding
//! configurations) so that every user's total rate meets its floor while
//! the sum of all stream powers is minimal.
//!
//! Two solvers share one inner kernel:
//!
//! * [`minpic_solve`] — the fast path. It fixes a per-user split of the
//!   rate floor across streams, solves the resulting power fixed point,
//!   then alternates projected-gradient refinement of the splits, a dual
//!   ascent step on the rate constraints, and first-improvement local
//!   search over decoding configurations (toggle one foreign stream,
//!   or transpose adjacent SIC positions).
//! * [`brute_force_solve`] — the oracle. It enumerates every per-receiver
//!   (decoded set, order) alternative and a simplex grid of rate splits,
//!   keeping the cheapest feasible combination. Practical for `U <= 2`;
//!   the configuration count explodes at `U = 3`.
//!
//! The inner kernel, [`min_power_fixed`], iterates the standard
//! interference-function update from zero power: each stream's power is
//! set to the least value meeting its target rate at every receiver that
//! decodes it, given the current interference. The update is monotone, so
//! iterates climb toward the least fixed point or diverge past a cap when
//! no finite solution exists.

use crate::model::{
    pow2_m1, user_rates, Channel, DecodingConfig, PowerAllocation, RateAllocation, Scenario,
    SubUserId, SubUserSet,
};
use crate::region::{ConfigFamily, RegionError};
use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Hard user-count limit for the exhaustive oracle.
pub const MAX_BRUTE_USERS: usize = 3;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// No finite power allocation meets the targets under the given
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible;

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no finite power allocation supports the rate targets")
    }
}

impl std::error::Error for Infeasible {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// The exhaustive oracle rejected the instance size.
    TooManyUsers {
        num_users: usize,
        limit: usize,
    },
    Region(RegionError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::TooManyUsers { num_users, limit } => {
                write!(
                    f,
                    "exhaustive search supports at most {limit} users, got {num_users}"
                )
            }
            SolveError::Region(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<RegionError> for SolveError {
    fn from(e: RegionError) -> Self {
        SolveError::Region(e)
    }
}

// ---------------------------------------------------------------------------
// Settings and result types
// ---------------------------------------------------------------------------

/// Tunables shared by both solvers.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Fixed-point convergence threshold (max absolute power change).
    pub inner_tol: f64,
    /// Fixed-point iteration cap per evaluation.
    pub max_inner_iter: usize,
    /// Declare divergence once any stream power exceeds
    /// `divergence_factor * max(noise)`.
    pub divergence_factor: f64,
    /// Outer-loop improvement threshold: the solver stops when a full pass
    /// improves total power by no more than this.
    pub outer_tol: f64,
    /// Finite-difference step (bits) for the split gradient.
    pub grad_step: f64,
    /// Initial dual step size; halved when a rate deficit changes sign.
    pub dual_step: f64,
    /// Outer-pass cap for `minpic_solve`.
    pub max_outer: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            inner_tol: 1e-10,
            max_inner_iter: 10_000,
            divergence_factor: 1e9,
            outer_tol: 1e-7,
            grad_step: 1e-5,
            dual_step: 0.05,
            max_outer: 200,
        }
    }
}

/// Solver output: the configuration, powers and stream rates found, plus
/// convergence metadata. `configs_evaluated` counts inner fixed-point
/// invocations (one per candidate configuration/split pair) and
/// `inner_iterations` the fixed-point iterations they consumed in total.
/// `dual` is the final dual state of the rate constraints (all zeros for
/// the exhaustive oracle, which does not run dual ascent).
#[derive(Debug, Clone)]
pub struct Solution {
    pub config: DecodingConfig,
    pub powers: PowerAllocation,
    pub rates: RateAllocation,
    pub total_power: f64,
    pub feasible: bool,
    pub inner_iterations: usize,
    pub configs_evaluated: usize,
    pub dual: DualState,
}

/// Dual variables of the per-user rate constraints, in power-per-bit
/// units, plus the current ascent step size.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub step: f64,
}

impl DualState {
    pub fn new(num_users: usize, step: f64) -> Self {
        Self {
            lambda: vec![0.0; num_users],
            step,
        }
    }
}

/// Per-user decomposition of the rate floor across the user's streams.
/// Row `k` is nonnegative and sums to `rate_min[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSplit {
    per_user: Vec<Vec<f64>>,
}

impl RateSplit {
    /// Spread each user's floor uniformly over its `U` streams.
    pub fn uniform(rate_min: &[f64], num_users: usize) -> Self {
        let per_user = rate_min
            .iter()
            .map(|&r| vec![r / num_users as f64; num_users])
            .collect();
        Self { per_user }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, rate_min: &[f64]) -> Result<Self, Infeasible> {
        for (row, &target) in rows.iter().zip(rate_min) {
            let sum: f64 = row.iter().sum();
            if (sum - target).abs() > 1e-9 || row.iter().any(|&v| v < 0.0) {
                return Err(Infeasible);
            }
        }
        Ok(Self { per_user: rows })
    }

    pub fn user(&self, k: usize) -> &[f64] {
        &self.per_user[k]
    }

    fn set_user(&mut self, k: usize, row: Vec<f64>) {
        self.per_user[k] = row;
    }

    /// Stream rate targets implied by the split.
    pub fn targets(&self) -> RateAllocation {
        let u = self.per_user.len();
        let mut flat = Vec::with_capacity(u * u);
        for row in &self.per_user {
            flat.extend_from_slice(row);
        }
        RateAllocation::from_flat_unchecked(u, flat)
    }
}

/// Euclidean projection of `v` onto the simplex `{x >= 0, sum x = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    if total <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - total) / (i + 1) as f64;
        if i + 1 == sorted.len() || sorted[i + 1] <= t {
            tau = t;
            break;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - tau).max(0.0)).collect();
    // Renormalize the floating-point residue so rows sum exactly.
    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        let scale = total / sum;
        for x in &mut out {
            *x *= scale;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Inner kernel: interference-function fixed point
// ---------------------------------------------------------------------------

/// One receiver that must decode a given stream, with the interference it
/// sees at that stream's SIC position.
#[derive(Debug, Clone)]
struct DecodeSite {
    rx: usize,
    gain: f64,
    interferers: SubUserSet,
}

/// Target-independent decode structure of one configuration.
struct CompiledConfig {
    num_users: usize,
    /// Decode sites per flat stream index.
    sites: Vec<Vec<DecodeSite>>,
}

impl CompiledConfig {
    fn new(cfg: &DecodingConfig, ch: &Channel) -> Self {
        let u = ch.num_users();
        let mut sites: Vec<Vec<DecodeSite>> = vec![Vec::new(); u * u];
        for rx in 0..u {
            let mut later = cfg.undecoded_set(rx);
            for &s in cfg.order(rx).iter().rev() {
                sites[s.flat(u)].push(DecodeSite {
                    rx,
                    gain: ch.gain(rx, s.user),
                    interferers: later,
                });
                later.insert(s, u);
            }
        }
        Self {
            num_users: u,
            sites,
        }
    }
}

/// SNR growth factors `2^target - 1` per flat stream index.
fn growth_factors(flat_targets: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(flat_targets.iter().map(|&t| pow2_m1(t)));
}

enum FixedPointOutcome {
    Converged {
        powers: Vec<f64>,
        iterations: usize,
    },
    Infeasible {
        iterations: usize,
    },
    /// Pruned: the running power total exceeded `abort_above`.
    Aborted {
        iterations: usize,
    },
}

fn fixed_point(
    compiled: &CompiledConfig,
    growth: &[f64],
    ch: &Channel,
    max_iter: usize,
    tol: f64,
    divergence_cap: f64,
    abort_above: f64,
    mut observer: impl FnMut(&[f64]),
) -> FixedPointOutcome {
    let u = compiled.num_users;
    let n = u * u;
    debug_assert_eq!(growth.len(), n);

    // A zero gain on a stream with a positive target can never be
    // outpowered.
    for f in 0..n {
        if growth[f] > 0.0 && compiled.sites[f].iter().any(|s| s.gain == 0.0) {
            return FixedPointOutcome::Infeasible { iterations: 0 };
        }
    }

    let mut p = vec![0.0; n];
    let mut p_next = vec![0.0; n];
    for iter in 1..=max_iter {
        let mut max_delta: f64 = 0.0;
        let mut total = 0.0;
        for f in 0..n {
            let req = if growth[f] == 0.0 {
                0.0
            } else {
                let mut req: f64 = 0.0;
                for site in &compiled.sites[f] {
                    let mut noise = ch.noise(site.rx);
                    for g in site.interferers.iter_flat() {
                        noise += ch.gain(site.rx, g / u) * p[g];
                    }
                    req = req.max(growth[f] * noise / site.gain);
                }
                req
            };
            max_delta = max_delta.max((req - p[f]).abs());
            total += req;
            p_next[f] = req;
        }
        observer(&p_next);
        if p_next.iter().any(|&v| v > divergence_cap) {
            return FixedPointOutcome::Infeasible { iterations: iter };
        }
        if total > abort_above {
            return FixedPointOutcome::Aborted { iterations: iter };
        }
        std::mem::swap(&mut p, &mut p_next);
        if max_delta <= tol {
            return FixedPointOutcome::Converged {
                powers: p,
                iterations: iter,
            };
        }
    }
    FixedPointOutcome::Infeasible {
        iterations: max_iter,
    }
}

/// Least powers meeting the stream rate `targets` under configuration
/// `cfg`, or [`Infeasible`] when no finite power does.
///
/// Iterates the interference-function update from zero power until the
/// largest per-stream change drops below `tol`; divergence past
/// `1e9 * max(noise)` (or exhausting `max_iter`) signals infeasibility.
pub fn min_power_fixed(
    cfg: &DecodingConfig,
    targets: &RateAllocation,
    ch: &Channel,
    max_iter: usize,
    tol: f64,
) -> Result<PowerAllocation, Infeasible> {
    min_power_fixed_observed(cfg, targets, ch, max_iter, tol, |_| ())
}

/// [`min_power_fixed`] with a per-iteration observer over the raw power
/// vector (flat stream order); used to inspect iterate monotonicity.
pub fn min_power_fixed_observed(
    cfg: &DecodingConfig,
    targets: &RateAllocation,
    ch: &Channel,
    max_iter: usize,
    tol: f64,
    observer: impl FnMut(&[f64]),
) -> Result<PowerAllocation, Infeasible> {
    let compiled = CompiledConfig::new(cfg, ch);
    let mut growth = Vec::new();
    growth_factors(targets.flat(), &mut growth);
    let cap = SolverSettings::default().divergence_factor * ch.max_noise();
    match fixed_point(
        &compiled,
        &growth,
        ch,
        max_iter,
        tol,
        cap,
        f64::INFINITY,
        observer,
    ) {
        FixedPointOutcome::Converged { powers, .. } => {
            Ok(PowerAllocation::from_flat_unchecked(ch.num_users(), powers))
        }
        _ => Err(Infeasible),
    }
}

// ---------------------------------------------------------------------------
// Lagrangian pieces
// ---------------------------------------------------------------------------

/// Partial Lagrangian: total power plus dual-weighted rate deficits.
pub fn lagrangian_value(
    p: &PowerAllocation,
    lam: &DualState,
    r: &RateAllocation,
    rate_min: &[f64],
) -> f64 {
    let achieved = user_rates(r);
    let penalty: f64 = lam
        .lambda
        .iter()
        .zip(rate_min.iter().zip(&achieved))
        .map(|(&l, (&floor, &got))| l * (floor - got))
        .sum();
    p.total() + penalty
}

/// Projected dual ascent: `lambda'[k] = max(0, lambda[k] + step * deficit)`.
pub fn dual_update(lam: &DualState, r: &RateAllocation, rate_min: &[f64]) -> DualState {
    let achieved = user_rates(r);
    let lambda = lam
        .lambda
        .iter()
        .zip(rate_min.iter().zip(&achieved))
        .map(|(&l, (&floor, &got))| (l + lam.step * (floor - got)).max(0.0))
        .collect();
    DualState {
        lambda,
        step: lam.step,
    }
}

// ---------------------------------------------------------------------------
// minPIC solver
// ---------------------------------------------------------------------------

struct Evaluator<'a> {
    ch: &'a Channel,
    settings: &'a SolverSettings,
    divergence_cap: f64,
    growth_buf: Vec<f64>,
    evals: usize,
    iters: usize,
}

struct Eval {
    powers: Vec<f64>,
    total: f64,
}

impl<'a> Evaluator<'a> {
    fn new(ch: &'a Channel, settings: &'a SolverSettings) -> Self {
        Self {
            ch,
            settings,
            divergence_cap: settings.divergence_factor * ch.max_noise(),
            growth_buf: Vec::new(),
            evals: 0,
            iters: 0,
        }
    }

    fn eval(&mut self, cfg: &DecodingConfig, split: &RateSplit) -> Option<Eval> {
        self.evals += 1;
        let targets = split.targets();
        let compiled = CompiledConfig::new(cfg, self.ch);
        growth_factors(targets.flat(), &mut self.growth_buf);
        match fixed_point(
            &compiled,
            &self.growth_buf,
            self.ch,
            self.settings.max_inner_iter,
            self.settings.inner_tol,
            self.divergence_cap,
            f64::INFINITY,
            |_| (),
        ) {
            FixedPointOutcome::Converged { powers, iterations } => {
                self.iters += iterations;
                let total = powers.iter().sum();
                Some(Eval { powers, total })
            }
            FixedPointOutcome::Infeasible { iterations }
            | FixedPointOutcome::Aborted { iterations } => {
                self.iters += iterations;
                None
            }
        }
    }
}

/// Deterministic neighbourhood of a configuration: toggle one foreign
/// stream per receiver (inserted at the front of the SIC order when
/// added), then each adjacent transposition of a receiver's order.
fn neighbor_configs(cfg: &DecodingConfig) -> Vec<DecodingConfig> {
    let u = cfg.num_users();
    let mut out = Vec::new();
    for rx in 0..u {
        for f in 0..u * u {
            let s = SubUserId::from_flat(f, u);
            if s.user == rx {
                continue;
            }
            let mut orders: Vec<Vec<SubUserId>> = (0..u).map(|i| cfg.order(i).to_vec()).collect();
            if cfg.decoded_set(rx).contains(s, u) {
                orders[rx].retain(|&m| m != s);
            } else {
                orders[rx].insert(0, s);
            }
            out.push(DecodingConfig::new(orders, u).expect("toggle preserves validity"));
        }
    }
    for rx in 0..u {
        let order = cfg.order(rx);
        for pos in 0..order.len().saturating_sub(1) {
            let mut orders: Vec<Vec<SubUserId>> = (0..u).map(|i| cfg.order(i).to_vec()).collect();
            orders[rx].swap(pos, pos + 1);
            out.push(DecodingConfig::new(orders, u).expect("swap preserves validity"));
        }
    }
    out
}

/// Every receiver decodes all `U * U` streams in ascending flat order.
fn decode_all_common_order(num_users: usize) -> DecodingConfig {
    let order: Vec<SubUserId> = (0..num_users * num_users)
        .map(|f| SubUserId::from_flat(f, num_users))
        .collect();
    DecodingConfig::new(vec![order; num_users], num_users)
        .expect("full decoding is always a valid configuration")
}

/// Minimum sum-power solver: fixed-point inner loop, projected-gradient
/// split refinement, dual ascent, and local search over decoding
/// configurations. Returns `feasible = false` when no explored
/// configuration admits finite powers.
pub fn minpic_solve(sc: &Scenario, settings: &SolverSettings) -> Solution {
    let ch = sc.channel();
    let u = ch.num_users();
    let rate_min = sc.rate_min();

    let mut split = RateSplit::uniform(rate_min, u);
    let mut cfg = DecodingConfig::own_only(u);
    let mut lam = DualState::new(u, settings.dual_step);
    let mut prev_deficit = vec![0.0; u];

    let mut ev = Evaluator::new(ch, settings);
    let mut incumbent = ev.eval(&cfg, &split);

    // Under strong interference the own-only start diverges while full
    // decoding remains feasible: with every receiver using the same order
    // no stream stays noise anywhere, so the power system is triangular.
    // Seed the search from there and let removals prune it back down.
    if incumbent.is_none() {
        let fallback = decode_all_common_order(u);
        if let Some(e) = ev.eval(&fallback, &split) {
            cfg = fallback;
            incumbent = Some(e);
        }
    }

    for _outer in 0..settings.max_outer {
        let mut improved = false;

        // Split refinement, one projected-gradient step per user.
        if let Some(inc) = &incumbent {
            let base_total = inc.total;
            for k in 0..u {
                if rate_min[k] <= 0.0 {
                    continue;
                }
                if let Some((next_split, next_eval)) =
                    split_descent_step(&mut ev, &cfg, &split, k, rate_min[k], base_total)
                {
                    if base_total - next_eval.total > settings.outer_tol {
                        split = next_split;
                        incumbent = Some(next_eval);
                        improved = true;
                    }
                }
            }
        }

        // Dual ascent on the rate deficits, halving the step when a
        // deficit changes sign.
        let achieved = if incumbent.is_some() {
            user_rates(&split.targets())
        } else {
            vec![0.0; u]
        };
        let deficit: Vec<f64> = rate_min
            .iter()
            .zip(&achieved)
            .map(|(&floor, &got)| floor - got)
            .collect();
        if deficit
            .iter()
            .zip(&prev_deficit)
            .any(|(&d, &pd)| d * pd < 0.0)
        {
            lam.step *= 0.5;
        }
        lam = dual_update(&lam, &split.targets(), rate_min);
        prev_deficit = deficit;

        // First-improvement local search over configurations.
        for cand in neighbor_configs(&cfg) {
            if let Some(e) = ev.eval(&cand, &split) {
                let better = match &incumbent {
                    Some(inc) => e.total < inc.total - settings.outer_tol,
                    None => true,
                };
                if better {
                    cfg = cand;
                    incumbent = Some(e);
                    improved = true;
                    break;
                }
            }
        }

        if !improved {
            break;
        }
    }

    match incumbent {
        Some(e) => Solution {
            config: cfg,
            powers: PowerAllocation::from_flat_unchecked(u, e.powers),
            rates: split.targets(),
            total_power: e.total,
            feasible: true,
            inner_iterations: ev.iters,
            configs_evaluated: ev.evals,
            dual: lam,
        },
        None => Solution {
            config: cfg,
            powers: PowerAllocation::zeros(u),
            rates: RateAllocation::zeros(u),
            total_power: 0.0,
            feasible: false,
            inner_iterations: ev.iters,
            configs_evaluated: ev.evals,
            dual: lam,
        },
    }
}

/// One projected-gradient step with halving line search on user `k`'s
/// split, relative to the already-evaluated `base_total` for the current
/// split. Returns the improved split and its evaluation, if any.
fn split_descent_step(
    ev: &mut Evaluator,
    cfg: &DecodingConfig,
    split: &RateSplit,
    k: usize,
    budget: f64,
    base_total: f64,
) -> Option<(RateSplit, Eval)> {
    let u = split.per_user.len();
    let h = ev.settings.grad_step;

    // Forward differences along simplex-tangent directions.
    let mut grad = vec![0.0; u];
    for j in 0..u {
        let mut probe_row: Vec<f64> = split.user(k).to_vec();
        probe_row[j] += h;
        let probe_row = project_simplex(&probe_row, budget);
        let mut probe = split.clone();
        probe.set_user(k, probe_row);
        match ev.eval(cfg, &probe) {
            Some(e) => grad[j] = (e.total - base_total) / h,
            // Infeasible probe: steer hard away from this direction.
            None => grad[j] = 1e6,
        }
    }
    let mean = grad.iter().sum::<f64>() / u as f64;
    let mut dir: Vec<f64> = grad.iter().map(|g| g - mean).collect();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return None;
    }
    for d in &mut dir {
        *d /= norm;
    }

    let mut step = 0.25 * budget;
    let min_step = 1e-7 * budget.max(1.0);
    while step > min_step {
        let cand_row: Vec<f64> = split
            .user(k)
            .iter()
            .zip(&dir)
            .map(|(&v, &d)| v - step * d)
            .collect();
        let cand_row = project_simplex(&cand_row, budget);
        let mut cand = split.clone();
        cand.set_user(k, cand_row);
        if let Some(e) = ev.eval(cfg, &cand) {
            if e.total < base_total - ev.settings.outer_tol {
                return Some((cand, e));
            }
        }
        step *= 0.5;
    }
    None
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

/// Rate-split grid over all users: the cartesian product of per-user
/// `grid`-step compositions, addressed by a mixed-radix split id
/// (user 0 most significant). The flat stream-target vectors are cached
/// when the product is small and decoded on the fly otherwise, so huge
/// grids cost time rather than memory.
struct SplitGrid {
    num_users: usize,
    /// Per user: list of split rows (each row sums to the user's floor).
    per_user: Vec<Vec<Vec<f64>>>,
    total: usize,
    cached_flat: Option<Vec<Vec<f64>>>,
}

const SPLIT_CACHE_LIMIT: usize = 1 << 20;

impl SplitGrid {
    fn new(rate_min: &[f64], num_users: usize, grid: usize) -> Self {
        let per_user: Vec<Vec<Vec<f64>>> = rate_min
            .iter()
            .map(|&r| user_split_rows(r, num_users, grid))
            .collect();
        let total = per_user
            .iter()
            .fold(1usize, |acc, rows| acc.saturating_mul(rows.len()));
        let mut grid_obj = Self {
            num_users,
            per_user,
            total,
            cached_flat: None,
        };
        if total <= SPLIT_CACHE_LIMIT {
            let mut cache = Vec::with_capacity(total);
            let mut buf = Vec::new();
            for id in 0..total {
                grid_obj.decode_flat(id, &mut buf);
                cache.push(buf.clone());
            }
            grid_obj.cached_flat = Some(cache);
        }
        grid_obj
    }

    fn total(&self) -> usize {
        self.total
    }

    /// Flat stream targets of split `id` into `buf`.
    fn flat_targets(&self, id: usize, buf: &mut Vec<f64>) {
        match &self.cached_flat {
            Some(cache) => {
                buf.clear();
                buf.extend_from_slice(&cache[id]);
            }
            None => self.decode_flat(id, buf),
        }
    }

    fn decode_flat(&self, id: usize, buf: &mut Vec<f64>) {
        buf.clear();
        let mut rem = id;
        let mut picks = vec![0usize; self.num_users];
        for k in (0..self.num_users).rev() {
            let n = self.per_user[k].len();
            picks[k] = rem % n;
            rem /= n;
        }
        for (k, &pick) in picks.iter().enumerate() {
            buf.extend_from_slice(&self.per_user[k][pick]);
        }
    }

    fn rate_split(&self, id: usize) -> RateSplit {
        let mut rem = id;
        let mut rows = vec![Vec::new(); self.num_users];
        for k in (0..self.num_users).rev() {
            let n = self.per_user[k].len();
            rows[k] = self.per_user[k][rem % n].clone();
            rem /= n;
        }
        RateSplit { per_user: rows }
    }
}

/// Per-user rate-split rows: every composition of `grid` over the user's
/// `U` streams, scaled to the user's floor. Users with a zero floor
/// contribute the single all-zero row.
fn user_split_rows(budget: f64, num_users: usize, grid: usize) -> Vec<Vec<f64>> {
    if budget <= 0.0 {
        return vec![vec![0.0; num_users]];
    }
    let step = budget / grid as f64;
    let mut rows = Vec::new();
    let mut counts = vec![0usize; num_users];
    compositions(grid, num_users, &mut counts, 0, &mut |c| {
        rows.push(c.iter().map(|&m| m as f64 * step).collect());
    });
    rows
}

fn compositions(
    total: usize,
    parts: usize,
    scratch: &mut [usize],
    idx: usize,
    emit: &mut impl FnMut(&[usize]),
) {
    if idx + 1 == parts {
        scratch[idx] = total;
        emit(scratch);
        return;
    }
    for v in 0..=total {
        scratch[idx] = v;
        compositions(total - v, parts, scratch, idx + 1, emit);
    }
}

#[derive(Debug, Clone)]
struct BruteBest {
    total: f64,
    config_id: u64,
    split_id: usize,
    powers: Vec<f64>,
}

fn better_of(a: Option<BruteBest>, b: Option<BruteBest>) -> Option<BruteBest> {
    match (a, b) {
        (None, b) => b,
        (a, None) => a,
        (Some(x), Some(y)) => {
            let key = |v: &BruteBest| (v.total, v.config_id, v.split_id);
            if key(&y) < key(&x) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Exhaustive minimum-power search over every per-receiver (decoded set,
/// order) combination and a `split_grid`-resolution grid of rate splits.
/// Ties break toward the lexicographically smallest (configuration id,
/// split id). Rejects `U > 3`; note that `U = 3` already enumerates about
/// `7e5` alternatives per receiver and is practical only for tiny grids.
pub fn brute_force_solve(sc: &Scenario, split_grid: usize) -> Result<Solution, SolveError> {
    brute_force(sc, split_grid, &SolverSettings::default(), true)
}

/// [`brute_force_solve`] with explicit solver settings.
pub fn brute_force_solve_with(
    sc: &Scenario,
    split_grid: usize,
    settings: &SolverSettings,
) -> Result<Solution, SolveError> {
    brute_force(sc, split_grid, settings, true)
}

/// Single-threaded variant of [`brute_force_solve`]; same output.
pub fn brute_force_solve_seq(sc: &Scenario, split_grid: usize) -> Result<Solution, SolveError> {
    brute_force(sc, split_grid, &SolverSettings::default(), false)
}

fn brute_force(
    sc: &Scenario,
    split_grid: usize,
    settings: &SolverSettings,
    parallel: bool,
) -> Result<Solution, SolveError> {
    let ch = sc.channel();
    let u = ch.num_users();
    if u > MAX_BRUTE_USERS {
        return Err(SolveError::TooManyUsers {
            num_users: u,
            limit: MAX_BRUTE_USERS,
        });
    }
    assert!(split_grid >= 1);

    let family = ConfigFamily::full(u)?;
    let splits = SplitGrid::new(sc.rate_min(), u, split_grid);
    let cap = settings.divergence_factor * ch.max_noise();

    // Evaluate one configuration over the whole split grid, pruning any
    // split whose running power total already exceeds this configuration's
    // best. The first-seen minimum is kept, so ties resolve to the lowest
    // split id.
    let eval_config = |config_id: u64| -> (Option<BruteBest>, usize, usize) {
        let cfg = family.config_at(config_id);
        let compiled = CompiledConfig::new(&cfg, ch);
        let mut best: Option<BruteBest> = None;
        let mut evals = 0usize;
        let mut iters = 0usize;
        let mut flat = Vec::new();
        let mut growth = Vec::new();
        for split_id in 0..splits.total() {
            evals += 1;
            splits.flat_targets(split_id, &mut flat);
            growth_factors(&flat, &mut growth);
            let abort = best.as_ref().map(|b| b.total).unwrap_or(f64::INFINITY);
            match fixed_point(
                &compiled,
                &growth,
                ch,
                settings.max_inner_iter,
                settings.inner_tol,
                cap,
                abort,
                |_| (),
            ) {
                FixedPointOutcome::Converged { powers, iterations } => {
                    iters += iterations;
                    let total: f64 = powers.iter().sum();
                    if best.as_ref().map(|b| total < b.total).unwrap_or(true) {
                        best = Some(BruteBest {
                            total,
                            config_id,
                            split_id,
                            powers,
                        });
                    }
                }
                FixedPointOutcome::Infeasible { iterations }
                | FixedPointOutcome::Aborted { iterations } => iters += iterations,
            }
        }
        (best, evals, iters)
    };

    let combine = |a: (Option<BruteBest>, usize, usize), b: (Option<BruteBest>, usize, usize)| {
        (better_of(a.0, b.0), a.1 + b.1, a.2 + b.2)
    };

    let total_configs = family.len();
    let (best, evals, iters) = {
        #[cfg(feature = "parallel")]
        {
            if parallel {
                (0..total_configs)
                    .into_par_iter()
                    .map(eval_config)
                    .reduce(|| (None, 0, 0), combine)
            } else {
                (0..total_configs)
                    .map(eval_config)
                    .fold((None, 0, 0), combine)
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = parallel;
            (0..total_configs)
                .map(eval_config)
                .fold((None, 0, 0), combine)
        }
    };

    Ok(match best {
        Some(b) => Solution {
            config: family.config_at(b.config_id),
            powers: PowerAllocation::from_flat_unchecked(u, b.powers),
            rates: splits.rate_split(b.split_id).targets(),
            total_power: b.total,
            feasible: true,
            inner_iterations: iters,
            configs_evaluated: evals,
            dual: DualState::new(u, settings.dual_step),
        },
        None => Solution {
            config: DecodingConfig::own_only(u),
            powers: PowerAllocation::zeros(u),
            rates: RateAllocation::zeros(u),
            total_power: 0.0,
            feasible: false,
            inner_iterations: iters,
            configs_evaluated: evals,
            dual: DualState::new(u, settings.dual_step),
        },
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{seeded_scenario, Lcg64};
    use crate::model::Channel;
    use crate::region::ic_membership;

    #[test]
    fn single_user_inversion() {
        let ch = Channel::new(vec![vec![1.0]], vec![1.0]).unwrap();
        let cfg = DecodingConfig::own_only(1);
        let targets = RateAllocation::from_rows(vec![vec![2.0]]).unwrap();
        let p = min_power_fixed(&cfg, &targets, &ch, 1000, 1e-10).unwrap();
        assert!((p.get(0, 0) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn decoupled_two_user() {
        let ch = Channel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap();
        let cfg = DecodingConfig::own_only(2);
        let targets = RateAllocation::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let p = min_power_fixed(&cfg, &targets, &ch, 1000, 1e-10).unwrap();
        assert!((p.get(0, 0) - 1.0).abs() < 1e-8);
        assert!((p.get(1, 0) - 1.0).abs() < 1e-8);
        assert!((p.total() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn zero_gain_with_positive_target_is_infeasible() {
        let ch = Channel::new(vec![vec![0.0]], vec![1.0]).unwrap();
        let cfg = DecodingConfig::own_only(1);
        let targets = RateAllocation::from_rows(vec![vec![1.0]]).unwrap();
        assert_eq!(
            min_power_fixed(&cfg, &targets, &ch, 1000, 1e-10),
            Err(Infeasible)
        );
    }

    #[test]
    fn strong_coupling_diverges() {
        // Required rates force a spectral radius above one: no fixed point.
        let ch = Channel::symmetric(2, 1.0, 0.9, 1.0).unwrap();
        let cfg = DecodingConfig::own_only(2);
        let targets = RateAllocation::from_rows(vec![vec![2.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(
            min_power_fixed(&cfg, &targets, &ch, 100_000, 1e-10),
            Err(Infeasible)
        );
    }

    /// Dense Gaussian elimination, used as the independent oracle for the
    /// tight-cap linear system below.
    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            let d = a[col][col];
            assert!(d.abs() > 1e-12, "singular oracle system");
            for row in 0..n {
                if row != col && a[row][col] != 0.0 {
                    let factor = a[row][col] / d;
                    for k in col..n {
                        a[row][k] -= factor * a[col][k];
                    }
                    b[row] -= factor * b[col];
                }
            }
        }
        (0..n).map(|i| b[i] / a[i][i]).collect()
    }

    #[test]
    fn fixed_point_matches_linear_solve_oracle() {
        // For own-only configurations the tight caps form a linear system:
        // p_f * g_own = (2^t - 1) * (noise + sum of interferer powers).
        let mut rng = Lcg64::new(31);
        for _ in 0..30 {
            let sc = seeded_scenario(rng.next_u64(), 2);
            let ch = sc.channel();
            let u = 2;
            // Random own-only order per receiver.
            let orders: Vec<Vec<SubUserId>> = (0..u)
                .map(|rx| {
                    let mut o: Vec<SubUserId> = (0..u).map(|j| SubUserId::new(rx, j)).collect();
                    if rng.next_f64() < 0.5 {
                        o.reverse();
                    }
                    o
                })
                .collect();
            let cfg = DecodingConfig::new(orders, u).unwrap();
            let targets = RateAllocation::from_rows(
                (0..u)
                    .map(|_| (0..u).map(|_| rng.range_f64(0.0, 0.7)).collect())
                    .collect(),
            )
            .unwrap();

            // Build the tight-cap linear system over flat stream indices.
            let n = u * u;
            let mut a = vec![vec![0.0; n]; n];
            let mut b = vec![0.0; n];
            for rx in 0..u {
                let mut later = cfg.undecoded_set(rx);
                for &s in cfg.order(rx).iter().rev() {
                    let f = s.flat(u);
                    let growth = pow2_m1(targets.flat()[f]);
                    a[f][f] = ch.gain(rx, s.user);
                    for g in later.iter_flat() {
                        a[f][g] = -growth * ch.gain(rx, g / u);
                    }
                    b[f] = growth * ch.noise(rx);
                    later.insert(s, u);
                }
            }
            let expected = solve_dense(a, b);
            let p = min_power_fixed(&cfg, &targets, ch, 100_000, 1e-12).unwrap();
            for f in 0..n {
                assert!(
                    (p.flat()[f] - expected[f]).abs() < 1e-8,
                    "stream {f}: fixed point {} vs oracle {}",
                    p.flat()[f],
                    expected[f]
                );
            }
        }
    }

    #[test]
    fn iterates_are_monotone() {
        let mut rng = Lcg64::new(37);
        for _ in 0..50 {
            let sc = seeded_scenario(rng.next_u64(), 2);
            let targets = RateAllocation::from_rows(
                (0..2)
                    .map(|_| (0..2).map(|_| rng.range_f64(0.0, 0.8)).collect())
                    .collect(),
            )
            .unwrap();
            let cfg = DecodingConfig::own_only(2);
            let mut prev = vec![0.0; 4];
            let _ = min_power_fixed_observed(&cfg, &targets, sc.channel(), 10_000, 1e-8, |p| {
                for (a, b) in prev.iter().zip(p) {
                    assert!(*b >= *a - 1e-12, "iterate decreased: {a} -> {b}");
                }
                prev = p.to_vec();
            });
        }
    }

    #[test]
    fn lagrangian_and_dual_arithmetic() {
        let p = PowerAllocation::from_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let r = RateAllocation::zeros(2);
        let rate_min = [1.0, 2.0];

        // Vanishing duals: the Lagrangian is just the power total.
        let lam0 = DualState::new(2, 0.1);
        assert!((lagrangian_value(&p, &lam0, &r, &rate_min) - 4.0).abs() < 1e-12);

        // Unit duals at zero power and rates.
        let lam1 = DualState {
            lambda: vec![1.0, 1.0],
            step: 0.1,
        };
        let zero_p = PowerAllocation::zeros(2);
        assert!((lagrangian_value(&zero_p, &lam1, &r, &rate_min) - 3.0).abs() < 1e-12);

        // Rates exactly on target: penalty vanishes for any duals.
        let r_met = RateAllocation::from_rows(vec![vec![0.5, 0.5], vec![1.0, 1.0]]).unwrap();
        assert!((lagrangian_value(&p, &lam1, &r_met, &rate_min) - 4.0).abs() < 1e-12);

        // Dual projection keeps nonnegativity on surplus.
        let surplus = RateAllocation::from_rows(vec![vec![2.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let upd = dual_update(&lam0, &surplus, &rate_min);
        assert_eq!(upd.lambda, vec![0.0, 0.0]);

        // Plain ascent arithmetic: 0.5 + 0.1 * 1.0 = 0.6.
        let lam = DualState {
            lambda: vec![0.5],
            step: 0.1,
        };
        let r1 = RateAllocation::zeros(1);
        let upd = dual_update(&lam, &r1, &[1.0]);
        assert!((upd.lambda[0] - 0.6).abs() < 1e-12);

        // Zero deficit leaves the duals unchanged.
        let met = RateAllocation::from_rows(vec![vec![1.0]]).unwrap();
        let upd = dual_update(&lam, &met, &[1.0]);
        assert!((upd.lambda[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn minpic_single_user() {
        let ch = Channel::new(vec![vec![1.0]], vec![1.0]).unwrap();
        let sc = Scenario::new(ch, vec![2.0]).unwrap();
        let sol = minpic_solve(&sc, &SolverSettings::default());
        assert!(sol.feasible);
        assert!((sol.total_power - 3.0).abs() < 1e-6);
    }

    #[test]
    fn minpic_decoupled_two_user() {
        let ch = Channel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap();
        let sc = Scenario::new(ch, vec![1.0, 1.0]).unwrap();
        let sol = minpic_solve(&sc, &SolverSettings::default());
        assert!(sol.feasible);
        assert!((sol.total_power - 2.0).abs() < 1e-6);
        assert!(ic_membership(&sol.rates, &sol.powers, sc.channel(), 1e-6).unwrap());
    }

    #[test]
    fn minpic_infeasible_scenario() {
        let ch = Channel::new(vec![vec![0.0]], vec![1.0]).unwrap();
        let sc = Scenario::new(ch, vec![1.0]).unwrap();
        let sol = minpic_solve(&sc, &SolverSettings::default());
        assert!(!sol.feasible);
    }

    #[test]
    fn minpic_survives_strong_interference() {
        // Own-only decoding diverges here; the solver must fall back to
        // full decoding and then prune. The optimum decodes the other
        // user's stream first at each receiver, costing 1 per user.
        let ch = Channel::symmetric(2, 1.0, 2.0, 1.0).unwrap();
        let sc = Scenario::new(ch, vec![1.0, 1.0]).unwrap();
        let fast = minpic_solve(&sc, &SolverSettings::default());
        assert!(fast.feasible);
        let brute = brute_force_solve(&sc, 16).unwrap();
        assert!(fast.total_power >= brute.total_power - 1e-6);
        assert!(fast.total_power <= brute.total_power * 1.01);
        assert!((brute.total_power - 2.0).abs() < 1e-6);
        assert!(ic_membership(&fast.rates, &fast.powers, sc.channel(), 1e-6).unwrap());
    }

    #[test]
    fn complementary_slackness_at_convergence() {
        let mut rng = Lcg64::new(53);
        for _ in 0..10 {
            let sc = seeded_scenario(rng.next_u64(), 2);
            let sol = minpic_solve(&sc, &SolverSettings::default());
            assert!(sol.feasible);
            let achieved = user_rates(&sol.rates);
            for k in 0..2 {
                let slack = sol.dual.lambda[k] * (sc.rate_min()[k] - achieved[k]);
                assert!(
                    slack.abs() < 1e-4,
                    "complementary slackness violated: {slack}"
                );
            }
        }
    }

    #[test]
    fn brute_single_user_matches_minpic() {
        let ch = Channel::new(vec![vec![1.0]], vec![1.0]).unwrap();
        let sc = Scenario::new(ch, vec![2.0]).unwrap();
        let brute = brute_force_solve(&sc, 8).unwrap();
        let fast = minpic_solve(&sc, &SolverSettings::default());
        assert!(brute.feasible);
        assert!((brute.total_power - fast.total_power).abs() < 1e-6);
        assert!((brute.total_power - 3.0).abs() < 1e-6);
    }

    #[test]
    fn brute_rejects_large_instances() {
        let sc = seeded_scenario(0, 4);
        assert!(matches!(
            brute_force_solve(&sc, 4),
            Err(SolveError::TooManyUsers { .. })
        ));
    }

    #[test]
    fn brute_seq_and_parallel_agree() {
        let sc = seeded_scenario(3, 2);
        let a = brute_force_solve(&sc, 6).unwrap();
        let b = brute_force_solve_seq(&sc, 6).unwrap();
        assert_eq!(a.total_power, b.total_power);
        assert_eq!(a.configs_evaluated, b.configs_evaluated);
        assert_eq!(a.inner_iterations, b.inner_iterations);
        assert_eq!(a.config, b.config);
    }

    #[test]
    fn minpic_close_to_brute_on_random_scenarios() {
        for seed in [1u64, 9, 14] {
            let sc = seeded_scenario(seed, 2);
            let brute = brute_force_solve(&sc, 12).unwrap();
            let fast = minpic_solve(&sc, &SolverSettings::default());
            assert!(brute.feasible && fast.feasible);
            assert!(fast.total_power >= brute.total_power - 1e-6);
            assert!(fast.total_power <= brute.total_power * 1.01);
        }
    }

    #[test]
    fn solutions_meet_rate_floors_and_region() {
        let mut rng = Lcg64::new(41);
        for _ in 0..5 {
            let sc = seeded_scenario(rng.next_u64(), 2);
            let sol = minpic_solve(&sc, &SolverSettings::default());
            assert!(sol.feasible);
            let achieved = user_rates(&sol.rates);
            for (got, floor) in achieved.iter().zip(sc.rate_min()) {
                assert!(got >= &(floor - 1e-6));
            }
            assert!(ic_membership(&sol.rates, &sol.powers, sc.channel(), 1e-6).unwrap());
        }
    }

    #[test]
    fn split_grid_shapes() {
        // U = 2, grid 32: 33 compositions per user with a positive floor.
        let grid = SplitGrid::new(&[1.0, 1.0], 2, 32);
        assert_eq!(grid.total(), 33 * 33);
        let zero = SplitGrid::new(&[0.0, 1.0], 2, 32);
        assert_eq!(zero.total(), 33);
        let mut buf = Vec::new();
        for id in [0usize, 17, 33 * 33 - 1] {
            grid.flat_targets(id, &mut buf);
            assert_eq!(buf.len(), 4);
            assert!((buf[0] + buf[1] - 1.0).abs() < 1e-12);
            assert!((buf[2] + buf[3] - 1.0).abs() < 1e-12);
            let split = grid.rate_split(id);
            let targets = split.targets();
            assert_eq!(targets.flat(), buf.as_slice());
        }
    }

    #[test]
    fn split_grid_lazy_decode_matches_cache() {
        let cached = SplitGrid::new(&[1.0, 0.5], 2, 8);
        let mut uncached = SplitGrid::new(&[1.0, 0.5], 2, 8);
        uncached.cached_flat = None;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for id in 0..cached.total() {
            cached.flat_targets(id, &mut a);
            uncached.flat_targets(id, &mut b);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn project_simplex_properties() {
        let p = project_simplex(&[0.7, 0.5], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.4).abs() < 1e-12);
        let p = project_simplex(&[-1.0, 0.2], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(project_simplex(&[0.3, 0.3], 0.0), vec![0.0, 0.0]);
    }
}
