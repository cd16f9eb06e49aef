//! Partial-MAC achievable-rate region.
//!
//! Each receiver of the interference channel sees a multiple-access channel
//! restricted to the streams it decodes: for a decoded set `A` containing
//! all of the receiver's own streams, the achievable stream rates satisfy
//! one subset-sum inequality per `S ⊆ A` that contains at least one own
//! stream, with right-hand side
//!
//! ```text
//! log2(1 + sum_{s in S} g[i][s.user] * p[s] / N_out)
//! ```
//!
//! where `N_out` is the noise-plus-interference power from everything
//! outside `A`. Subsets without an own stream are redundant and dropped,
//! which cuts the constraint count to `2^|A| - 2^(|A|-U)` per decoded set.
//! A rate tuple is achievable at the receiver if *some* decoded set admits
//! it, and lies in the channel's region if every receiver admits it.

use crate::model::{
    effective_noise, log2_1p, Channel, DecodingConfig, PowerAllocation, RateAllocation, SubUserId,
    SubUserSet,
};
use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Full subset enumeration is limited to this many users; the decoded-set
/// count `2^(U^2-U)` explodes past it.
pub const MAX_ENUM_USERS: usize = 4;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionError {
    /// Subset enumeration rejected: too many users.
    TooManyUsers { num_users: usize, limit: usize },
    /// The constraint-count formula overflowed 64-bit arithmetic.
    CountOverflow { num_users: usize },
    /// The operation is defined for two-user channels only.
    RequiresTwoUsers { num_users: usize },
}

impl fmt::Display for RegionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionError::TooManyUsers { num_users, limit } => write!(
                f,
                "subset enumeration supports at most {limit} users, got {num_users}"
            ),
            RegionError::CountOverflow { num_users } => {
                write!(f, "constraint count overflows u64 for {num_users} users")
            }
            RegionError::RequiresTwoUsers { num_users } => {
                write!(f, "operation requires a 2-user channel, got {num_users}")
            }
        }
    }
}

impl std::error::Error for RegionError {}

// ---------------------------------------------------------------------------
// Constraint types
// ---------------------------------------------------------------------------

/// One linear inequality `sum of rates over `subset` <= rhs` at a receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConstraint {
    pub receiver: usize,
    pub subset: SubUserSet,
    pub rhs: f64,
}

impl RateConstraint {
    /// Additive slack of the constraint at `r` (negative when violated).
    pub fn slack(&self, r: &RateAllocation) -> f64 {
        let sum: f64 = self.subset.iter_flat().map(|f| r.flat()[f]).sum();
        self.rhs - sum
    }
}

/// All subset-sum constraints of one receiver for one decoded set.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMacPolytope {
    pub receiver: usize,
    pub decoded_set: SubUserSet,
    pub constraints: Vec<RateConstraint>,
}

impl PartialMacPolytope {
    /// True when `r` satisfies every constraint up to additive slack `tol`.
    pub fn admits(&self, r: &RateAllocation, tol: f64) -> bool {
        self.constraints.iter().all(|c| c.slack(r) >= -tol)
    }
}

// ---------------------------------------------------------------------------
// Enumeration and constraint construction
// ---------------------------------------------------------------------------

/// All decoded sets for receiver `rx`: supersets of the receiver's own
/// streams within the `U^2` stream universe, in ascending bitmask order.
/// There are exactly `2^(U^2-U)` of them.
pub fn enumerate_decoded_sets(rx: usize, num_users: usize) -> Result<Vec<SubUserSet>, RegionError> {
    if num_users > MAX_ENUM_USERS {
        return Err(RegionError::TooManyUsers {
            num_users,
            limit: MAX_ENUM_USERS,
        });
    }
    let own = SubUserSet::own_streams(rx, num_users);
    let foreign = SubUserSet::all(num_users).difference(own);
    let foreign_bits: Vec<usize> = foreign.iter_flat().collect();
    let count = 1usize << foreign_bits.len();

    let mut sets = Vec::with_capacity(count);
    for pick in 0..count as u64 {
        let mut bits = own.bits();
        for (pos, &f) in foreign_bits.iter().enumerate() {
            if pick & (1 << pos) != 0 {
                bits |= 1 << f;
            }
        }
        sets.push(SubUserSet::from_bits(bits));
    }
    // The pick order above is already ascending in the full bitmask because
    // foreign bit positions are visited in ascending order; sort anyway to
    // pin the contract.
    sets.sort_by_key(|s| s.bits());
    Ok(sets)
}

/// Total constraint count over all receivers at fully decoded sets:
/// `U * (2^(U^2) - 2^(U^2-U))`.
pub fn constraint_count(num_users: usize) -> Result<u64, RegionError> {
    let u = num_users as u32;
    let sq = u
        .checked_mul(u)
        .ok_or(RegionError::CountOverflow { num_users })?;
    if sq >= 64 || sq - u >= 64 {
        return Err(RegionError::CountOverflow { num_users });
    }
    let full = 1u64 << sq;
    let dropped = 1u64 << (sq - u);
    (full - dropped)
        .checked_mul(num_users as u64)
        .ok_or(RegionError::CountOverflow { num_users })
}

/// Constraint set of receiver `rx` for decoded set `decoded`
/// (which must contain all of the receiver's own streams).
///
/// Emits one constraint per subset of `decoded` that intersects the own
/// streams, i.e. `2^|A| - 2^(|A|-U)` constraints, in ascending subset
/// bitmask order.
pub fn partial_mac_constraints(
    rx: usize,
    decoded: SubUserSet,
    p: &PowerAllocation,
    ch: &Channel,
) -> PartialMacPolytope {
    let u = ch.num_users();
    let own = SubUserSet::own_streams(rx, u);
    assert!(
        own.is_subset_of(decoded),
        "decoded set must contain the receiver's own streams"
    );

    let outside = SubUserSet::all(u).difference(decoded);
    let noise_out = effective_noise(rx, outside, p, ch);

    // Received power per decoded stream, so subset sums are cheap.
    let members: Vec<usize> = decoded.iter_flat().collect();
    let powers: Vec<f64> = members
        .iter()
        .map(|&f| ch.gain(rx, f / u) * p.flat()[f])
        .collect();

    let mut constraints = Vec::new();
    let m = members.len();
    for pick in 1u64..(1u64 << m) {
        let mut subset = SubUserSet::EMPTY;
        let mut signal = 0.0;
        for (pos, &f) in members.iter().enumerate() {
            if pick & (1 << pos) != 0 {
                subset = subset.union(SubUserSet::from_bits(1 << f));
                signal += powers[pos];
            }
        }
        if subset.intersection(own).is_empty() {
            continue;
        }
        constraints.push(RateConstraint {
            receiver: rx,
            subset,
            rhs: log2_1p(signal / noise_out),
        });
    }
    constraints.sort_by_key(|c| c.subset.bits());

    PartialMacPolytope {
        receiver: rx,
        decoded_set: decoded,
        constraints,
    }
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

/// Whether receiver `rx` admits the rate tuple `r` under powers `p`.
///
/// Returns the first decoded set (in enumeration order) whose polytope
/// admits `r` with additive slack `tol`, or `None` when no decoded set
/// does.
pub fn receiver_membership(
    rx: usize,
    r: &RateAllocation,
    p: &PowerAllocation,
    ch: &Channel,
    tol: f64,
) -> Result<Option<SubUserSet>, RegionError> {
    for decoded in enumerate_decoded_sets(rx, ch.num_users())? {
        if partial_mac_constraints(rx, decoded, p, ch).admits(r, tol) {
            return Ok(Some(decoded));
        }
    }
    Ok(None)
}

/// Whether every receiver admits the rate tuple, i.e. `r` lies in the
/// channel's achievable region for powers `p`.
pub fn ic_membership(
    r: &RateAllocation,
    p: &PowerAllocation,
    ch: &Channel,
    tol: f64,
) -> Result<bool, RegionError> {
    for rx in 0..ch.num_users() {
        if receiver_membership(rx, r, p, ch, tol)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Per-receiver configuration enumeration
// ---------------------------------------------------------------------------

/// Order enumeration stops here: the per-receiver alternative count is
/// `sum over decoded sets A of |A|!`, about `7e5` at `U = 3` and beyond
/// memory at `U = 4`.
pub const MAX_ORDER_ENUM_USERS: usize = 3;

/// All (decoded set, SIC order) alternatives for receiver `rx`:
/// for each decoded set in [`enumerate_decoded_sets`] order, every
/// permutation of its members in lexicographic order. At `U = 2` this is
/// `2! + 3! + 3! + 4! = 38` alternatives.
pub fn enumerate_receiver_configs(
    rx: usize,
    num_users: usize,
) -> Result<Vec<Vec<SubUserId>>, RegionError> {
    if num_users > MAX_ORDER_ENUM_USERS {
        return Err(RegionError::TooManyUsers {
            num_users,
            limit: MAX_ORDER_ENUM_USERS,
        });
    }
    let mut out = Vec::new();
    for decoded in enumerate_decoded_sets(rx, num_users)? {
        let base: Vec<SubUserId> = decoded.iter(num_users).collect();
        let mut perm: Vec<usize> = (0..base.len()).collect();
        loop {
            out.push(perm.iter().map(|&i| base[i]).collect());
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }
    Ok(out)
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Lazy cartesian product of per-receiver configuration alternatives.
///
/// Tuple `id` decodes mixed-radix: receiver 0 is the most significant
/// digit. The product count is astronomical for `U = 3` (about `7e5` per
/// receiver), so callers should iterate lazily and prune.
#[derive(Debug, Clone)]
pub struct ConfigFamily {
    num_users: usize,
    per_rx: Vec<Vec<Vec<SubUserId>>>,
}

impl ConfigFamily {
    pub fn full(num_users: usize) -> Result<Self, RegionError> {
        let per_rx = (0..num_users)
            .map(|rx| enumerate_receiver_configs(rx, num_users))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { num_users, per_rx })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn per_receiver_counts(&self) -> Vec<usize> {
        self.per_rx.iter().map(|v| v.len()).collect()
    }

    /// Number of configuration tuples (product of per-receiver counts).
    pub fn len(&self) -> u64 {
        self.per_rx
            .iter()
            .fold(1u64, |acc, v| acc.saturating_mul(v.len() as u64))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Decode tuple `id` into a decoding configuration.
    pub fn config_at(&self, id: u64) -> DecodingConfig {
        let mut rem = id;
        let mut orders = vec![Vec::new(); self.num_users];
        for rx in (0..self.num_users).rev() {
            let n = self.per_rx[rx].len() as u64;
            orders[rx] = self.per_rx[rx][(rem % n) as usize].clone();
            rem /= n;
        }
        debug_assert_eq!(rem, 0);
        DecodingConfig::new(orders, self.num_users).expect("enumerated configuration is valid")
    }

    pub fn receiver_alternatives(&self, rx: usize) -> &[Vec<SubUserId>] {
        &self.per_rx[rx]
    }
}

// ---------------------------------------------------------------------------
// Two-user boundary scan
// ---------------------------------------------------------------------------

/// One sampled point on the two-user boundary with the power split and
/// configuration tuple that achieves it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub r1: f64,
    pub r2: f64,
    pub config_id: u64,
    /// Stream powers in flat order: `(p11, p12, p21, p22)`.
    pub powers: [f64; 4],
}

/// Upper-right boundary of the two-user region at a fixed total power,
/// sorted by `r1` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub points: Vec<BoundaryPoint>,
}

impl BoundarySample {
    /// Value of the boundary polyline at abscissa `r1`, linearly
    /// interpolating between neighbouring points. `None` outside the
    /// sampled range.
    pub fn r2_at(&self, r1: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty() || r1 < pts[0].r1 - 1e-12 || r1 > pts[pts.len() - 1].r1 + 1e-12 {
            return None;
        }
        if pts.len() == 1 {
            return Some(pts[0].r2);
        }
        for w in pts.windows(2) {
            if r1 <= w[1].r1 + 1e-12 {
                let (a, b) = (&w[0], &w[1]);
                if (b.r1 - a.r1).abs() < 1e-15 {
                    return Some(a.r2.max(b.r2));
                }
                let t = ((r1 - a.r1) / (b.r1 - a.r1)).clamp(0.0, 1.0);
                return Some(a.r2 + t * (b.r2 - a.r2));
            }
        }
        Some(pts[pts.len() - 1].r2)
    }
}

/// Scan the two-user achievable region at total power `total_power`.
///
/// Grids all four stream powers over compositions of `grid_n`, evaluates
/// every decoding-configuration tuple per split (a stream's rate is the
/// smallest cap among the receivers that decode it), and returns the
/// upper-right convex hull of the collected `(R1, R2)` points — the
/// time-sharing closure of the sampled operating points.
pub fn boundary_scan_2user(
    ch: &Channel,
    total_power: f64,
    grid_n: usize,
) -> Result<BoundarySample, RegionError> {
    scan_2user(ch, total_power, grid_n, true)
}

/// Single-threaded variant of [`boundary_scan_2user`]; same output.
pub fn boundary_scan_2user_seq(
    ch: &Channel,
    total_power: f64,
    grid_n: usize,
) -> Result<BoundarySample, RegionError> {
    scan_2user(ch, total_power, grid_n, false)
}

fn scan_2user(
    ch: &Channel,
    total_power: f64,
    grid_n: usize,
    parallel: bool,
) -> Result<BoundarySample, RegionError> {
    if ch.num_users() != 2 {
        return Err(RegionError::RequiresTwoUsers {
            num_users: ch.num_users(),
        });
    }
    assert!(total_power >= 0.0, "total power must be nonnegative");
    assert!(grid_n >= 2);

    let family = ConfigFamily::full(2)?;
    let splits = power_compositions(grid_n, total_power);

    let eval_split = |powers: &[f64; 4]| -> Vec<BoundaryPoint> {
        pareto_filter(candidate_points(ch, &family, powers))
    };

    let candidates: Vec<BoundaryPoint> = {
        #[cfg(feature = "parallel")]
        {
            if parallel {
                splits
                    .par_iter()
                    .map(eval_split)
                    .reduce(Vec::new, |mut a, mut b| {
                        a.append(&mut b);
                        a
                    })
            } else {
                splits.iter().flat_map(eval_split).collect()
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = parallel;
            splits.iter().flat_map(eval_split).collect()
        }
    };

    let mut pareto = pareto_filter(candidates);
    pareto.sort_by(|a, b| {
        a.r1.partial_cmp(&b.r1)
            .unwrap()
            .then(b.r2.partial_cmp(&a.r2).unwrap())
            .then(a.config_id.cmp(&b.config_id))
            .then(a.powers.partial_cmp(&b.powers).unwrap())
    });
    pareto.dedup_by(|a, b| a.r1 == b.r1 && a.r2 == b.r2);

    Ok(BoundarySample {
        points: upper_hull(pareto),
    })
}

/// All nonnegative 4-part compositions of `grid_n`, scaled to sum to
/// `total`.
fn power_compositions(grid_n: usize, total: f64) -> Vec<[f64; 4]> {
    let step = if grid_n == 0 {
        0.0
    } else {
        total / grid_n as f64
    };
    let mut out = Vec::new();
    for a in 0..=grid_n {
        for b in 0..=grid_n - a {
            for c in 0..=grid_n - a - b {
                let d = grid_n - a - b - c;
                out.push([
                    a as f64 * step,
                    b as f64 * step,
                    c as f64 * step,
                    d as f64 * step,
                ]);
            }
        }
    }
    out
}

/// Rate points of every configuration tuple for one power split.
fn candidate_points(ch: &Channel, family: &ConfigFamily, powers: &[f64; 4]) -> Vec<BoundaryPoint> {
    let p = PowerAllocation::from_flat_unchecked(2, powers.to_vec());

    // Per receiver, caps of each alternative, indexed by flat stream id
    // (NaN when the stream is not decoded there).
    let caps_of = |rx: usize| -> Vec<[f64; 4]> {
        family
            .receiver_alternatives(rx)
            .iter()
            .map(|order| {
                let mut decoded = SubUserSet::EMPTY;
                for &s in order {
                    decoded.insert(s, 2);
                }
                let outside = SubUserSet::all(2).difference(decoded);
                let mut noise = effective_noise(rx, outside, &p, ch);
                let mut caps = [f64::NAN; 4];
                for &s in order.iter().rev() {
                    let signal = ch.gain(rx, s.user) * p.get_id(s);
                    caps[s.flat(2)] = if signal == 0.0 {
                        0.0
                    } else {
                        log2_1p(signal / noise)
                    };
                    noise += signal;
                }
                caps
            })
            .collect()
    };
    let caps0 = caps_of(0);
    let caps1 = caps_of(1);

    let n1 = caps1.len() as u64;
    let mut out = Vec::with_capacity(caps0.len() * caps1.len());
    for (i0, c0) in caps0.iter().enumerate() {
        for (i1, c1) in caps1.iter().enumerate() {
            // A stream's rate is capped at every receiver that decodes it.
            let rate = |f: usize| -> f64 {
                match (c0[f].is_nan(), c1[f].is_nan()) {
                    (false, false) => c0[f].min(c1[f]),
                    (false, true) => c0[f],
                    (true, false) => c1[f],
                    (true, true) => unreachable!("own receiver always decodes"),
                }
            };
            out.push(BoundaryPoint {
                r1: rate(0) + rate(1),
                r2: rate(2) + rate(3),
                config_id: i0 as u64 * n1 + i1 as u64,
                powers: *powers,
            });
        }
    }
    out
}

/// Keep points not dominated (<= in both coordinates) by another point.
/// Ties resolve toward the smallest configuration id, then the smallest
/// power split, so the survivor never depends on input order.
fn pareto_filter(mut pts: Vec<BoundaryPoint>) -> Vec<BoundaryPoint> {
    pts.sort_by(|a, b| {
        b.r1.partial_cmp(&a.r1)
            .unwrap()
            .then(b.r2.partial_cmp(&a.r2).unwrap())
            .then(a.config_id.cmp(&b.config_id))
            .then(a.powers.partial_cmp(&b.powers).unwrap())
    });
    let mut out: Vec<BoundaryPoint> = Vec::new();
    let mut best_r2 = f64::NEG_INFINITY;
    for pt in pts {
        if pt.r2 > best_r2 {
            best_r2 = pt.r2;
            out.push(pt);
        }
    }
    out
}

/// Upper concave chain of Pareto points sorted by `r1` ascending.
fn upper_hull(pts: Vec<BoundaryPoint>) -> Vec<BoundaryPoint> {
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<BoundaryPoint> = Vec::with_capacity(pts.len());
    for pt in pts {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // Drop b when it lies on or below chord a->pt.
            let cross = (b.r1 - a.r1) * (pt.r2 - a.r2) - (b.r2 - a.r2) * (pt.r1 - a.r1);
            if cross >= -1e-12 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    hull
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
