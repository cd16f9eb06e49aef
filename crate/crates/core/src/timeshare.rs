//! Time-sharing across decoding configurations.
//!
//! A static configuration pins one operating point (per-user rates and a
//! power total). Mixing several configurations over time achieves any
//! convex combination of their points, which can meet the rate floors at
//! a lower *average* power than the best single configuration. This
//! module builds candidate vertex points by solving the inner power
//! problem for a family of configurations and probe rate targets, then
//! solves the small LP that picks the cheapest mixture.

use crate::minpic::{min_power_fixed, RateSplit, SolverSettings};
use crate::model::{DecodingConfig, Scenario, SubUserId};
use crate::region::{ConfigFamily, RegionError};
use crate::simplex::{solve, SimplexError, StandardLp};
use std::fmt;

/// One achievable operating point: a configuration id (index into the
/// caller's configuration list), the per-user rates it delivers and the
/// power it costs.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPoint {
    pub config_id: usize,
    pub rates: Vec<f64>,
    pub power: f64,
}

/// Convex mixture of vertex points meeting the rate floors on average.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeShareSchedule {
    /// One weight per input vertex; nonnegative, summing to one.
    pub weights: Vec<f64>,
    pub avg_power: f64,
    pub avg_rates: Vec<f64>,
    /// Basic-variable indices of the optimal LP basis (vertex columns
    /// first, then per-user surplus columns).
    pub basis: Vec<usize>,
}

/// The mixing LP admits no point meeting the rate floors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeShareInfeasible;

impl fmt::Display for TimeShareInfeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no mixture of the given vertices meets the rate floors")
    }
}

impl std::error::Error for TimeShareInfeasible {}

/// Probe targets for vertex construction: the rate floor itself, then the
/// floor with each user's entry scaled by 0.5 and by 1.5 (one change at a
/// time), giving `2U + 1` targets.
pub fn default_rate_targets(rate_min: &[f64]) -> Vec<Vec<f64>> {
    let mut targets = vec![rate_min.to_vec()];
    for k in 0..rate_min.len() {
        for scale in [0.5, 1.5] {
            let mut t = rate_min.to_vec();
            t[k] *= scale;
            targets.push(t);
        }
    }
    targets
}

/// Default configuration family for vertex construction. For `U <= 2`
/// this is the full per-receiver enumeration; for larger `U` (where the
/// full family explodes) it is the own-only configuration in component
/// order plus every single foreign-stream addition at the front of one
/// receiver's order.
pub fn default_config_family(num_users: usize) -> Result<Vec<DecodingConfig>, RegionError> {
    if num_users <= 2 {
        let family = ConfigFamily::full(num_users)?;
        return Ok((0..family.len()).map(|id| family.config_at(id)).collect());
    }
    let base = DecodingConfig::own_only(num_users);
    let mut out = vec![base.clone()];
    for rx in 0..num_users {
        for f in 0..num_users * num_users {
            let s = SubUserId::from_flat(f, num_users);
            if s.user == rx {
                continue;
            }
            let mut orders: Vec<Vec<SubUserId>> =
                (0..num_users).map(|i| base.order(i).to_vec()).collect();
            orders[rx].insert(0, s);
            out.push(DecodingConfig::new(orders, num_users).expect("toggle is valid"));
        }
    }
    Ok(out)
}

/// Solve the inner power problem for every (configuration, target) pair,
/// splitting each target uniformly across the user's streams, and keep
/// the feasible results as vertex points. Returns an empty list when
/// nothing is feasible.
pub fn build_vertices(
    sc: &Scenario,
    configs: &[DecodingConfig],
    rate_targets: &[Vec<f64>],
    settings: &SolverSettings,
) -> Vec<VertexPoint> {
    let ch = sc.channel();
    let u = ch.num_users();
    let mut out = Vec::new();
    for target in rate_targets {
        debug_assert_eq!(target.len(), u);
        let split = RateSplit::uniform(target, u);
        let targets = split.targets();
        for (config_id, cfg) in configs.iter().enumerate() {
            if let Ok(p) = min_power_fixed(
                cfg,
                &targets,
                ch,
                settings.max_inner_iter,
                settings.inner_tol,
            ) {
                out.push(VertexPoint {
                    config_id,
                    rates: target.clone(),
                    power: p.total(),
                });
            }
        }
    }
    out
}

/// Remove vertices strictly dominated by another vertex (at least the
/// same rate for every user at no more power, strictly better somewhere).
/// Exact duplicates all survive; input order is kept.
pub fn prune_dominated(vertices: &[VertexPoint]) -> Vec<VertexPoint> {
    let dominated = |a: &VertexPoint, b: &VertexPoint| -> bool {
        b.power <= a.power
            && b.rates.iter().zip(&a.rates).all(|(br, ar)| br >= ar)
            && (b.power < a.power || b.rates.iter().zip(&a.rates).any(|(br, ar)| br > ar))
    };
    vertices
        .iter()
        .filter(|v| !vertices.iter().any(|w| dominated(v, w)))
        .cloned()
        .collect()
}

/// Pick the cheapest convex mixture of `vertices` whose average rates meet
/// `rate_min`:
///
/// ```text
/// min  sum theta_v * power_v
/// s.t. sum theta_v * rates_v[k] >= rate_min[k]   for every user k
///      sum theta_v = 1,  theta >= 0
/// ```
///
/// Solved with the dense-tableau simplex (Bland's rule, so degenerate
/// ties resolve toward the smallest vertex index).
pub fn solve_timeshare_lp(
    vertices: &[VertexPoint],
    rate_min: &[f64],
) -> Result<TimeShareSchedule, TimeShareInfeasible> {
    if vertices.is_empty() {
        return Err(TimeShareInfeasible);
    }
    let n = vertices.len();
    let u = rate_min.len();

    // Columns: theta_v (n), then one surplus per rate row (u).
    let num_vars = n + u;
    let mut rows = Vec::with_capacity(u + 1);
    let mut rhs = Vec::with_capacity(u + 1);
    for k in 0..u {
        let mut row = vec![0.0; num_vars];
        for (v, vertex) in vertices.iter().enumerate() {
            row[v] = vertex.rates[k];
        }
        row[n + k] = -1.0;
        rows.push(row);
        rhs.push(rate_min[k]);
    }
    let mut mix = vec![0.0; num_vars];
    mix[..n].iter_mut().for_each(|c| *c = 1.0);
    rows.push(mix);
    rhs.push(1.0);

    let mut cost = vec![0.0; num_vars];
    for (v, vertex) in vertices.iter().enumerate() {
        cost[v] = vertex.power;
    }

    let lp = StandardLp {
        num_vars,
        rows,
        rhs,
        cost,
    };
    let sol = solve(&lp).map_err(|e| match e {
        SimplexError::Infeasible => TimeShareInfeasible,
        // The theta simplex is compact, so the LP cannot be unbounded and
        // Bland's rule terminates; treat anything else as infeasible.
        SimplexError::Unbounded | SimplexError::IterationLimit => TimeShareInfeasible,
    })?;

    let mut weights: Vec<f64> = sol.x[..n].iter().map(|&w| w.max(0.0)).collect();
    let sum: f64 = weights.iter().sum();
    debug_assert!((sum - 1.0).abs() < 1e-7);
    if sum > 0.0 {
        for w in &mut weights {
            *w /= sum;
        }
    }

    let avg_power: f64 = weights
        .iter()
        .zip(vertices)
        .map(|(&w, v)| w * v.power)
        .sum();
    debug_assert!((avg_power - sol.objective).abs() <= 1e-7 * sol.objective.abs().max(1.0));
    let avg_rates = (0..u)
        .map(|k| {
            weights
                .iter()
                .zip(vertices)
                .map(|(&w, v)| w * v.rates[k])
                .sum()
        })
        .collect();

    Ok(TimeShareSchedule {
        weights,
        avg_power,
        avg_rates,
        basis: sol.basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::seeded_scenario;
    use crate::model::{Channel, Scenario};

    fn vertex(config_id: usize, rates: &[f64], power: f64) -> VertexPoint {
        VertexPoint {
            config_id,
            rates: rates.to_vec(),
            power,
        }
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let vertices = [vertex(0, &[2.0, 0.0], 3.0), vertex(1, &[0.0, 2.0], 3.0)];
        let sched = solve_timeshare_lp(&vertices, &[1.0, 1.0]).unwrap();
        assert!((sched.weights[0] - 0.5).abs() < 1e-9);
        assert!((sched.weights[1] - 0.5).abs() < 1e-9);
        assert!((sched.avg_power - 3.0).abs() < 1e-9);
        assert!((sched.avg_rates[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_adequate_vertex_takes_all_weight() {
        let vertices = [vertex(0, &[1.5, 1.5], 4.0)];
        let sched = solve_timeshare_lp(&vertices, &[1.0, 1.0]).unwrap();
        assert!((sched.weights[0] - 1.0).abs() < 1e-9);
        assert!((sched.avg_power - 4.0).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_pair_two_variable_lp() {
        // By basis enumeration: mixing both halves meets (1,1) at 3.0;
        // neither vertex alone is feasible.
        let vertices = [vertex(0, &[2.0, 0.0], 2.0), vertex(1, &[0.0, 2.0], 4.0)];
        let sched = solve_timeshare_lp(&vertices, &[1.0, 1.0]).unwrap();
        assert!((sched.weights[0] - 0.5).abs() < 1e-9);
        assert!((sched.weights[1] - 0.5).abs() < 1e-9);
        assert!((sched.avg_power - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_when_rates_unreachable() {
        let vertices = [vertex(0, &[0.5, 0.5], 1.0)];
        assert_eq!(
            solve_timeshare_lp(&vertices, &[1.0, 1.0]),
            Err(TimeShareInfeasible)
        );
        assert_eq!(solve_timeshare_lp(&[], &[1.0]), Err(TimeShareInfeasible));
    }

    #[test]
    fn never_worse_than_best_single_vertex() {
        let vertices = [
            vertex(0, &[1.2, 1.1], 5.0),
            vertex(1, &[2.0, 0.0], 2.5),
            vertex(2, &[0.0, 2.0], 2.5),
        ];
        let rate_min = [1.0, 1.0];
        let sched = solve_timeshare_lp(&vertices, &rate_min).unwrap();
        let best_single = vertices
            .iter()
            .filter(|v| v.rates.iter().zip(&rate_min).all(|(r, m)| r >= m))
            .map(|v| v.power)
            .fold(f64::INFINITY, f64::min);
        assert!(sched.avg_power <= best_single + 1e-9);
        // Here mixing the two cheap corners beats the feasible vertex.
        assert!(sched.avg_power < 5.0 - 1e-9);
    }

    #[test]
    fn weights_form_distribution_meeting_floors() {
        let sc = seeded_scenario(2, 2);
        let configs = default_config_family(2).unwrap();
        let targets = default_rate_targets(sc.rate_min());
        let vertices = build_vertices(&sc, &configs, &targets, &SolverSettings::default());
        assert!(!vertices.is_empty());
        let pruned = prune_dominated(&vertices);
        assert!(!pruned.is_empty());
        let sched = solve_timeshare_lp(&pruned, sc.rate_min()).unwrap();
        let sum: f64 = sched.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(sched.weights.iter().all(|&w| w >= 0.0));
        for (avg, floor) in sched.avg_rates.iter().zip(sc.rate_min()) {
            assert!(avg >= &(floor - 1e-9));
        }
    }

    #[test]
    fn build_vertices_single_user() {
        let ch = Channel::new(vec![vec![1.0]], vec![1.0]).unwrap();
        let sc = Scenario::new(ch, vec![2.0]).unwrap();
        let configs = vec![DecodingConfig::own_only(1)];
        let vertices = build_vertices(&sc, &configs, &[vec![2.0]], &SolverSettings::default());
        assert_eq!(vertices.len(), 1);
        assert!((vertices[0].power - 3.0).abs() < 1e-8);
        assert_eq!(vertices[0].rates, vec![2.0]);
    }

    #[test]
    fn build_vertices_empty_when_infeasible() {
        let ch = Channel::new(vec![vec![0.0]], vec![1.0]).unwrap();
        let sc = Scenario::new(ch, vec![1.0]).unwrap();
        let configs = vec![DecodingConfig::own_only(1)];
        let vertices = build_vertices(&sc, &configs, &[vec![1.0]], &SolverSettings::default());
        assert!(vertices.is_empty());
    }

    #[test]
    fn build_vertices_decoupled_closed_form() {
        let ch = Channel::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]], vec![1.0, 1.0]).unwrap();
        let sc = Scenario::new(ch, vec![1.0, 1.0]).unwrap();
        let configs = vec![DecodingConfig::own_only(2)];
        let vertices = build_vertices(&sc, &configs, &[vec![1.0, 1.0]], &SolverSettings::default());
        assert_eq!(vertices.len(), 1);
        // Uniform split of 1 bit over two streams per user; zero cross
        // gains decouple the users. User 0: SIC over two own half-bit
        // streams costs exactly 2^1 - 1 = 1; user 1 has double the gain.
        let expected = 1.0 + 1.0 / 2.0;
        assert!((vertices[0].power - expected).abs() < 1e-8);
    }

    #[test]
    fn default_targets_shape() {
        let targets = default_rate_targets(&[1.0, 2.0]);
        assert_eq!(targets.len(), 5);
        assert_eq!(targets[0], vec![1.0, 2.0]);
        assert_eq!(targets[1], vec![0.5, 2.0]);
        assert_eq!(targets[2], vec![1.5, 2.0]);
        assert_eq!(targets[3], vec![1.0, 1.0]);
        assert_eq!(targets[4], vec![1.0, 3.0]);
    }

    #[test]
    fn default_family_sizes() {
        assert_eq!(default_config_family(1).unwrap().len(), 1);
        assert_eq!(default_config_family(2).unwrap().len(), 1444);
        // U = 3: own-only plus 3 receivers * 6 foreign streams.
        assert_eq!(default_config_family(3).unwrap().len(), 19);
    }
}
