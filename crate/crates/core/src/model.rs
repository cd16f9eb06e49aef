//! Channel model and SINR rate arithmetic.
//!
//! A `U`-user interference channel carries `U * U` independently coded
//! streams: every transmitter splits its traffic into `U` sub-user
//! components. Each receiver runs successive interference cancellation
//! (SIC) over the subset of streams it decodes and treats everything else
//! as noise. This module holds the immutable value types shared by every
//! solver (power gains, power/rate matrices, decoding configurations) and
//! the per-stream rate caps they all evaluate.
//!
//! Rates are in bits per channel use; powers and noise variances share one
//! arbitrary linear power unit. All operations are pure, so values can be
//! shared freely across threads.

use std::f64::consts::LN_2;
use std::fmt;

/// Upper bound on the user count imposed by the `u64` bitmask
/// representation of stream sets (`U * U <= 64`).
pub const MAX_USERS: usize = 8;

/// log2(1 + x), accurate for small x.
#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// 2^r - 1, accurate for small r.
#[inline]
pub(crate) fn pow2_m1(r: f64) -> f64 {
    (r * LN_2).exp_m1()
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Validation failure when constructing a model value.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A matrix or vector has the wrong dimensions.
    Dimension {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    /// An entry violates its numeric requirement (sign, finiteness, ...).
    Value {
        field: &'static str,
        requirement: &'static str,
    },
    /// A decoding configuration is structurally invalid.
    Config(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Dimension {
                field,
                expected,
                got,
            } => write!(f, "{field}: expected dimension {expected}, got {got}"),
            ModelError::Value { field, requirement } => {
                write!(f, "{field}: entries must be {requirement}")
            }
            ModelError::Config(reason) => write!(f, "invalid decoding configuration: {reason}"),
        }
    }
}

impl std::error::Error for ModelError {}

// ---------------------------------------------------------------------------
// Stream identifiers and stream sets
// ---------------------------------------------------------------------------

/// Identifies the `component`-th stream of `user`.
///
/// Both indices are zero-based and must lie in `0..U`. The flat index
/// `user * U + component` is a bijection onto `0..U*U` and doubles as the
/// bit position inside a [`SubUserSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubUserId {
    pub user: usize,
    pub component: usize,
}

impl SubUserId {
    pub fn new(user: usize, component: usize) -> Self {
        Self { user, component }
    }

    /// Flat index `user * num_users + component`.
    #[inline]
    pub fn flat(self, num_users: usize) -> usize {
        self.user * num_users + self.component
    }

    /// Inverse of [`SubUserId::flat`].
    #[inline]
    pub fn from_flat(flat: usize, num_users: usize) -> Self {
        Self {
            user: flat / num_users,
            component: flat % num_users,
        }
    }

    pub fn is_valid(self, num_users: usize) -> bool {
        self.user < num_users && self.component < num_users
    }
}

impl fmt::Display for SubUserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x[{},{}]", self.user, self.component)
    }
}

/// Set of streams stored as a bitmask over flat indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SubUserSet(u64);

impl SubUserSet {
    pub const EMPTY: SubUserSet = SubUserSet(0);

    #[inline]
    pub fn from_bits(bits: u64) -> Self {
        SubUserSet(bits)
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    /// All `U * U` streams.
    pub fn all(num_users: usize) -> Self {
        let n = num_users * num_users;
        debug_assert!(n <= 64);
        if n == 64 {
            SubUserSet(u64::MAX)
        } else {
            SubUserSet((1u64 << n) - 1)
        }
    }

    /// The `U` streams transmitted by `user`.
    pub fn own_streams(user: usize, num_users: usize) -> Self {
        let mut set = SubUserSet::EMPTY;
        for component in 0..num_users {
            set.insert(SubUserId::new(user, component), num_users);
        }
        set
    }

    pub fn singleton(s: SubUserId, num_users: usize) -> Self {
        SubUserSet(1u64 << s.flat(num_users))
    }

    #[inline]
    pub fn insert(&mut self, s: SubUserId, num_users: usize) {
        self.0 |= 1u64 << s.flat(num_users);
    }

    #[inline]
    pub fn remove(&mut self, s: SubUserId, num_users: usize) {
        self.0 &= !(1u64 << s.flat(num_users));
    }

    #[inline]
    pub fn contains(self, s: SubUserId, num_users: usize) -> bool {
        self.contains_flat(s.flat(num_users))
    }

    #[inline]
    pub fn contains_flat(self, flat: usize) -> bool {
        self.0 & (1u64 << flat) != 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        SubUserSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        SubUserSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        SubUserSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Iterate over flat indices, ascending.
    pub fn iter_flat(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let f = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(f)
            }
        })
    }

    /// Iterate over members in ascending flat order.
    pub fn iter(self, num_users: usize) -> impl Iterator<Item = SubUserId> {
        self.iter_flat()
            .map(move |f| SubUserId::from_flat(f, num_users))
    }
}

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

/// Static channel description: power gains and receiver noise variances.
///
/// `gain(i, k)` is the power gain (squared amplitude) from transmitter `k`
/// to receiver `i`; phase never enters any rate expression, so only the
/// power gain is stored. Noise variances must be strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    num_users: usize,
    gain: Vec<f64>,
    noise: Vec<f64>,
}

impl Channel {
    /// Build a channel from gain rows (row `i` = receiver `i`) and per-receiver
    /// noise variances.
    pub fn new(gain: Vec<Vec<f64>>, noise: Vec<f64>) -> Result<Self, ModelError> {
        let num_users = noise.len();
        if num_users == 0 || num_users > MAX_USERS {
            return Err(ModelError::Dimension {
                field: "noise",
                expected: MAX_USERS,
                got: num_users,
            });
        }
        if gain.len() != num_users {
            return Err(ModelError::Dimension {
                field: "gain",
                expected: num_users,
                got: gain.len(),
            });
        }
        let mut flat = Vec::with_capacity(num_users * num_users);
        for row in &gain {
            if row.len() != num_users {
                return Err(ModelError::Dimension {
                    field: "gain",
                    expected: num_users,
                    got: row.len(),
                });
            }
            for &g in row {
                if !g.is_finite() || g < 0.0 {
                    return Err(ModelError::Value {
                        field: "gain",
                        requirement: "finite and >= 0",
                    });
                }
                flat.push(g);
            }
        }
        for &n in &noise {
            if !n.is_finite() || n <= 0.0 {
                return Err(ModelError::Value {
                    field: "noise",
                    requirement: "finite and > 0",
                });
            }
        }
        Ok(Self {
            num_users,
            gain: flat,
            noise,
        })
    }

    /// Convenience constructor for a channel with one direct gain on the
    /// diagonal and one cross gain everywhere else, equal noise at every
    /// receiver.
    pub fn symmetric(
        num_users: usize,
        direct: f64,
        cross: f64,
        noise: f64,
    ) -> Result<Self, ModelError> {
        let gain = (0..num_users)
            .map(|i| {
                (0..num_users)
                    .map(|k| if i == k { direct } else { cross })
                    .collect()
            })
            .collect();
        Self::new(gain, vec![noise; num_users])
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn gain(&self, rx: usize, tx: usize) -> f64 {
        self.gain[rx * self.num_users + tx]
    }

    #[inline]
    pub fn noise(&self, rx: usize) -> f64 {
        self.noise[rx]
    }

    pub fn max_noise(&self) -> f64 {
        self.noise.iter().cloned().fold(0.0, f64::max)
    }

    /// Copy with all noise variances multiplied by `factor` (> 0).
    pub fn scale_noise(&self, factor: f64) -> Self {
        let mut c = self.clone();
        for n in &mut c.noise {
            *n *= factor;
        }
        c
    }
}

// ---------------------------------------------------------------------------
// Power and rate matrices
// ---------------------------------------------------------------------------

fn validate_matrix(field: &'static str, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * n);
    for row in rows {
        if row.len() != n {
            return Err(ModelError::Dimension {
                field,
                expected: n,
                got: row.len(),
            });
        }
        for &v in row {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::Value {
                    field,
                    requirement: "finite and >= 0",
                });
            }
            flat.push(v);
        }
    }
    Ok(flat)
}

/// Nonnegative `U x U` matrix of stream transmit powers; entry `(k, j)` is
/// the power of user `k`'s component `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    num_users: usize,
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_users: usize) -> Self {
        Self {
            num_users,
            p: vec![0.0; num_users * num_users],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let num_users = rows.len();
        let p = validate_matrix("power", &rows)?;
        Ok(Self { num_users, p })
    }

    pub(crate) fn from_flat_unchecked(num_users: usize, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), num_users * num_users);
        Self { num_users, p }
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn get(&self, user: usize, component: usize) -> f64 {
        self.p[user * self.num_users + component]
    }

    #[inline]
    pub fn get_id(&self, s: SubUserId) -> f64 {
        self.p[s.flat(self.num_users)]
    }

    pub fn set(&mut self, user: usize, component: usize, value: f64) {
        assert!(value.is_finite() && value >= 0.0, "power must be >= 0");
        self.p[user * self.num_users + component] = value;
    }

    #[inline]
    pub fn flat(&self) -> &[f64] {
        &self.p
    }

    /// Sum of all stream powers.
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Copy with every entry multiplied by `factor` (>= 0).
    pub fn scale(&self, factor: f64) -> Self {
        Self {
            num_users: self.num_users,
            p: self.p.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Nonnegative `U x U` matrix of stream rates in bits per channel use;
/// entry `(k, j)` is the rate carried by user `k`'s component `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    num_users: usize,
    r: Vec<f64>,
}

impl RateAllocation {
    pub fn zeros(num_users: usize) -> Self {
        Self {
            num_users,
            r: vec![0.0; num_users * num_users],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let num_users = rows.len();
        let r = validate_matrix("rate", &rows)?;
        Ok(Self { num_users, r })
    }

    pub(crate) fn from_flat_unchecked(num_users: usize, r: Vec<f64>) -> Self {
        debug_assert_eq!(r.len(), num_users * num_users);
        Self { num_users, r }
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn get(&self, user: usize, component: usize) -> f64 {
        self.r[user * self.num_users + component]
    }

    #[inline]
    pub fn get_id(&self, s: SubUserId) -> f64 {
        self.r[s.flat(self.num_users)]
    }

    pub fn set(&mut self, user: usize, component: usize, value: f64) {
        assert!(value.is_finite() && value >= 0.0, "rate must be >= 0");
        self.r[user * self.num_users + component] = value;
    }

    #[inline]
    pub fn flat(&self) -> &[f64] {
        &self.r
    }
}

/// Per-user total rates: component `k` is the row sum of user `k`'s streams.
pub fn user_rates(r: &RateAllocation) -> Vec<f64> {
    let u = r.num_users();
    (0..u).map(|k| (0..u).map(|j| r.get(k, j)).sum()).collect()
}

// ---------------------------------------------------------------------------
// Decoding configurations
// ---------------------------------------------------------------------------

/// Per-receiver decoded stream sets and their SIC orders.
///
/// Receiver `i` decodes the streams in `order(i)` front to back,
/// subtracting each decoded stream before the next; all streams outside
/// the decoded set stay as noise. Every receiver must decode all of its
/// own user's streams.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingConfig {
    num_users: usize,
    orders: Vec<Vec<SubUserId>>,
    decoded: Vec<SubUserSet>,
}

impl DecodingConfig {
    pub fn new(orders: Vec<Vec<SubUserId>>, num_users: usize) -> Result<Self, ModelError> {
        if orders.len() != num_users {
            return Err(ModelError::Config(format!(
                "expected {} receiver orders, got {}",
                num_users,
                orders.len()
            )));
        }
        let mut decoded = Vec::with_capacity(num_users);
        for (rx, order) in orders.iter().enumerate() {
            let mut set = SubUserSet::EMPTY;
            for &s in order {
                if !s.is_valid(num_users) {
                    return Err(ModelError::Config(format!(
                        "receiver {rx}: stream {s} out of range"
                    )));
                }
                if set.contains(s, num_users) {
                    return Err(ModelError::Config(format!(
                        "receiver {rx}: stream {s} appears twice"
                    )));
                }
                set.insert(s, num_users);
            }
            let own = SubUserSet::own_streams(rx, num_users);
            if !own.is_subset_of(set) {
                return Err(ModelError::Config(format!(
                    "receiver {rx}: must decode all of its own user's streams"
                )));
            }
            decoded.push(set);
        }
        Ok(Self {
            num_users,
            orders,
            decoded,
        })
    }

    /// Every receiver decodes exactly its own user's streams, in component
    /// order.
    pub fn own_only(num_users: usize) -> Self {
        let orders = (0..num_users)
            .map(|i| {
                (0..num_users)
                    .map(|j| SubUserId::new(i, j))
                    .collect::<Vec<_>>()
            })
            .collect();
        Self::new(orders, num_users).expect("own-only configuration is always valid")
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// SIC order at receiver `rx` (first decoded stream first).
    #[inline]
    pub fn order(&self, rx: usize) -> &[SubUserId] {
        &self.orders[rx]
    }

    #[inline]
    pub fn decoded_set(&self, rx: usize) -> SubUserSet {
        self.decoded[rx]
    }

    /// Streams receiver `rx` treats as noise.
    #[inline]
    pub fn undecoded_set(&self, rx: usize) -> SubUserSet {
        SubUserSet::all(self.num_users).difference(self.decoded[rx])
    }
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// A problem instance: channel plus per-user minimum rates and optional
/// deployment metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    channel: Channel,
    rate_min: Vec<f64>,
    bandwidth_hz: Option<f64>,
    power_budget: Option<f64>,
}

impl Scenario {
    pub fn new(channel: Channel, rate_min: Vec<f64>) -> Result<Self, ModelError> {
        if rate_min.len() != channel.num_users() {
            return Err(ModelError::Dimension {
                field: "rate_min",
                expected: channel.num_users(),
                got: rate_min.len(),
            });
        }
        for &r in &rate_min {
            if !r.is_finite() || r < 0.0 {
                return Err(ModelError::Value {
                    field: "rate_min",
                    requirement: "finite and >= 0",
                });
            }
        }
        Ok(Self {
            channel,
            rate_min,
            bandwidth_hz: None,
            power_budget: None,
        })
    }

    pub fn with_bandwidth_hz(mut self, hz: f64) -> Result<Self, ModelError> {
        if !hz.is_finite() || hz <= 0.0 {
            return Err(ModelError::Value {
                field: "bandwidth_hz",
                requirement: "finite and > 0",
            });
        }
        self.bandwidth_hz = Some(hz);
        Ok(self)
    }

    pub fn with_power_budget(mut self, budget: f64) -> Result<Self, ModelError> {
        if !budget.is_finite() || budget <= 0.0 {
            return Err(ModelError::Value {
                field: "power_budget",
                requirement: "finite and > 0",
            });
        }
        self.power_budget = Some(budget);
        Ok(self)
    }

    #[inline]
    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.channel.num_users()
    }

    #[inline]
    pub fn rate_min(&self) -> &[f64] {
        &self.rate_min
    }

    #[inline]
    pub fn bandwidth_hz(&self) -> Option<f64> {
        self.bandwidth_hz
    }

    #[inline]
    pub fn power_budget(&self) -> Option<f64> {
        self.power_budget
    }
}

// ---------------------------------------------------------------------------
// Rate arithmetic
// ---------------------------------------------------------------------------

/// Noise-plus-interference power seen at receiver `rx` when the streams in
/// `interferers` remain unsubtracted. Always at least the receiver's noise
/// variance.
pub fn effective_noise(
    rx: usize,
    interferers: SubUserSet,
    p: &PowerAllocation,
    ch: &Channel,
) -> f64 {
    let u = ch.num_users();
    let mut noise = ch.noise(rx);
    for f in interferers.iter_flat() {
        noise += ch.gain(rx, f / u) * p.flat()[f];
    }
    noise
}

/// Rate cap (bits per channel use) for stream `s` decoded at receiver `rx`
/// while the streams in `interferers` remain unsubtracted. Zero exactly
/// when the stream's received power `gain * p` is zero.
pub fn sub_user_rate_cap(
    rx: usize,
    s: SubUserId,
    interferers: SubUserSet,
    p: &PowerAllocation,
    ch: &Channel,
) -> f64 {
    debug_assert!(!interferers.contains(s, ch.num_users()));
    let signal = ch.gain(rx, s.user) * p.get_id(s);
    if signal == 0.0 {
        return 0.0;
    }
    log2_1p(signal / effective_noise(rx, interferers, p, ch))
}

/// Per-receiver SIC rate caps for a decoding configuration.
///
/// Entry `[rx]` lists `(stream, cap)` pairs in receiver `rx`'s decoding
/// order. The cap of the `m`-th stream counts interference from every
/// later-decoded stream plus all undecoded streams; earlier streams have
/// already been subtracted.
pub fn sic_caps(
    cfg: &DecodingConfig,
    p: &PowerAllocation,
    ch: &Channel,
) -> Vec<Vec<(SubUserId, f64)>> {
    let u = ch.num_users();
    (0..u)
        .map(|rx| {
            // Walk the order back to front, accumulating each stream's
            // received power into the noise seen by earlier steps.
            let mut noise = effective_noise(rx, cfg.undecoded_set(rx), p, ch);
            let order = cfg.order(rx);
            let mut caps = vec![(SubUserId::new(0, 0), 0.0); order.len()];
            for (m, &s) in order.iter().enumerate().rev() {
                let signal = ch.gain(rx, s.user) * p.get_id(s);
                let cap = if signal == 0.0 {
                    0.0
                } else {
                    log2_1p(signal / noise)
                };
                caps[m] = (s, cap);
                noise += signal;
            }
            caps
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::Lcg64;

    fn two_user_channel() -> Channel {
        // g[0][0] = 1, g[0][1] = 0.5, g[1][0] = 0.3, g[1][1] = 1, noise 1.
        Channel::new(vec![vec![1.0, 0.5], vec![0.3, 1.0]], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn flat_index_is_bijective() {
        for u in 1..=MAX_USERS {
            let mut seen = vec![false; u * u];
            for user in 0..u {
                for component in 0..u {
                    let s = SubUserId::new(user, component);
                    let f = s.flat(u);
                    assert!(!seen[f]);
                    seen[f] = true;
                    assert_eq!(SubUserId::from_flat(f, u), s);
                }
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn effective_noise_empty_set_is_noise_floor() {
        let ch = two_user_channel();
        let p = PowerAllocation::from_rows(vec![vec![4.0, 4.0], vec![4.0, 4.0]]).unwrap();
        assert_eq!(effective_noise(0, SubUserSet::EMPTY, &p, &ch), 1.0);
    }

    #[test]
    fn effective_noise_cross_user() {
        // interferers = both of user 1's streams, g[0][1] = 0.5, p = 1 each.
        let ch = two_user_channel();
        let p = PowerAllocation::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let interferers = SubUserSet::own_streams(1, 2);
        assert!((effective_noise(0, interferers, &p, &ch) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn effective_noise_own_component() {
        let ch = two_user_channel();
        let p = PowerAllocation::from_rows(vec![vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let interferers = SubUserSet::singleton(SubUserId::new(0, 1), 2);
        assert!((effective_noise(0, interferers, &p, &ch) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rate_cap_interference_free() {
        let ch = Channel::new(vec![vec![1.0]], vec![1.0]).unwrap();
        let p = PowerAllocation::from_rows(vec![vec![3.0]]).unwrap();
        let cap = sub_user_rate_cap(0, SubUserId::new(0, 0), SubUserSet::EMPTY, &p, &ch);
        assert!((cap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rate_cap_zero_power_is_zero() {
        let ch = two_user_channel();
        let p = PowerAllocation::zeros(2);
        let cap = sub_user_rate_cap(0, SubUserId::new(0, 0), SubUserSet::EMPTY, &p, &ch);
        assert_eq!(cap, 0.0);
    }

    #[test]
    fn rate_cap_with_interference() {
        // own signal g*p = 1, interference power 3, noise 1 -> log2(1.25).
        let ch = Channel::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 1.0]).unwrap();
        let p = PowerAllocation::from_rows(vec![vec![1.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let interferers = SubUserSet::singleton(SubUserId::new(1, 0), 2);
        let cap = sub_user_rate_cap(0, SubUserId::new(0, 0), interferers, &p, &ch);
        assert!((cap - 1.25f64.log2()).abs() < 1e-12);
        assert!((cap - 0.321928).abs() < 1e-6);
    }

    #[test]
    fn sic_caps_two_user_example() {
        // Receiver 0 decodes own streams in order ((0,0), (0,1)); user 1's
        // streams (1 power each through gain 0.5) stay as noise.
        let ch = Channel::new(vec![vec![1.0, 0.5], vec![0.5, 1.0]], vec![1.0, 1.0]).unwrap();
        let p = PowerAllocation::from_rows(vec![vec![1.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let cfg = DecodingConfig::own_only(2);
        let caps = sic_caps(&cfg, &p, &ch);
        // cap(0,0): noise 1 + 0.5*2 + 1*2 = 4, signal 1 -> log2(1.25)
        assert!((caps[0][0].1 - 1.25f64.log2()).abs() < 1e-12);
        // cap(0,1): noise 1 + 0.5*2 = 2, signal 2 -> log2(2)
        assert!((caps[0][1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sic_caps_zero_cross_gain() {
        let ch = Channel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap();
        let p = PowerAllocation::from_rows(vec![vec![1.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let cfg = DecodingConfig::own_only(2);
        let caps = sic_caps(&cfg, &p, &ch);
        // Only (0,1) interferes with (0,0): log2(1 + 1/3); then log2(3).
        assert!((caps[0][0].1 - (4.0f64 / 3.0).log2()).abs() < 1e-12);
        assert!((caps[0][0].1 - 0.415037).abs() < 1e-6);
        assert!((caps[0][1].1 - 3.0f64.log2()).abs() < 1e-12);
        assert!((caps[0][1].1 - 1.584963).abs() < 1e-6);
    }

    #[test]
    fn sic_caps_all_zero_power() {
        let ch = two_user_channel();
        let cfg = DecodingConfig::own_only(2);
        let caps = sic_caps(&cfg, &PowerAllocation::zeros(2), &ch);
        for rx_caps in caps {
            for (_, cap) in rx_caps {
                assert_eq!(cap, 0.0);
            }
        }
    }

    #[test]
    fn user_rates_row_sums() {
        assert_eq!(user_rates(&RateAllocation::zeros(2)), vec![0.0, 0.0]);
        let r = RateAllocation::from_rows(vec![vec![1.0, 0.5], vec![0.0, 2.0]]).unwrap();
        assert_eq!(user_rates(&r), vec![1.5, 2.0]);
        let mut r = RateAllocation::zeros(2);
        r.set(1, 0, 0.7);
        assert_eq!(user_rates(&r), vec![0.0, 0.7]);
    }

    fn random_config(rng: &mut Lcg64, u: usize) -> DecodingConfig {
        let orders = (0..u)
            .map(|rx| {
                let mut members: Vec<SubUserId> = SubUserSet::own_streams(rx, u).iter(u).collect();
                for user in 0..u {
                    if user == rx {
                        continue;
                    }
                    for component in 0..u {
                        if rng.next_f64() < 0.5 {
                            members.push(SubUserId::new(user, component));
                        }
                    }
                }
                // Fisher-Yates
                for i in (1..members.len()).rev() {
                    let j = rng.next_usize(i + 1);
                    members.swap(i, j);
                }
                members
            })
            .collect();
        DecodingConfig::new(orders, u).unwrap()
    }

    fn random_instance(rng: &mut Lcg64, u: usize) -> (Channel, PowerAllocation) {
        let gain = (0..u)
            .map(|_| (0..u).map(|_| rng.range_f64(0.05, 2.0)).collect())
            .collect();
        let noise = (0..u).map(|_| rng.range_f64(0.2, 2.0)).collect();
        let ch = Channel::new(gain, noise).unwrap();
        let rows = (0..u)
            .map(|_| (0..u).map(|_| rng.range_f64(0.0, 5.0)).collect())
            .collect();
        (ch, PowerAllocation::from_rows(rows).unwrap())
    }

    #[test]
    fn telescoping_identity_random_orders() {
        let mut rng = Lcg64::new(7);
        for _ in 0..200 {
            let u = 2 + rng.next_usize(2); // 2 or 3 users
            let (ch, p) = random_instance(&mut rng, u);
            let cfg = random_config(&mut rng, u);
            let caps = sic_caps(&cfg, &p, &ch);
            for rx in 0..u {
                let cap_sum: f64 = caps[rx].iter().map(|&(_, c)| c).sum();
                let decoded_power: f64 = cfg
                    .decoded_set(rx)
                    .iter(u)
                    .map(|s| ch.gain(rx, s.user) * p.get_id(s))
                    .sum();
                let outside = effective_noise(rx, cfg.undecoded_set(rx), &p, &ch);
                let joint = log2_1p(decoded_power / outside);
                assert!(
                    (cap_sum - joint).abs() < 1e-9,
                    "telescoping failed: {cap_sum} vs {joint}"
                );
            }
        }
    }

    #[test]
    fn rate_cap_monotone_in_powers() {
        let mut rng = Lcg64::new(11);
        for _ in 0..100 {
            let (ch, p) = random_instance(&mut rng, 2);
            let s = SubUserId::new(0, 0);
            let mut interferers = SubUserSet::own_streams(1, 2);
            interferers.insert(SubUserId::new(0, 1), 2);
            let base = sub_user_rate_cap(0, s, interferers, &p, &ch);

            // Strictly increasing in own power when the gain is positive.
            let mut p_up = p.clone();
            p_up.set(0, 0, p.get(0, 0) + 1.0);
            if ch.gain(0, 0) > 0.0 {
                assert!(sub_user_rate_cap(0, s, interferers, &p_up, &ch) > base);
            }

            // Non-increasing in any interferer's power.
            let mut p_int = p.clone();
            p_int.set(1, 0, p.get(1, 0) + 1.0);
            assert!(sub_user_rate_cap(0, s, interferers, &p_int, &ch) <= base);
        }
    }

    #[test]
    fn rate_caps_scale_invariant() {
        let mut rng = Lcg64::new(13);
        for _ in 0..100 {
            let (ch, p) = random_instance(&mut rng, 2);
            let cfg = random_config(&mut rng, 2);
            let factor = rng.range_f64(0.1, 10.0);
            let caps = sic_caps(&cfg, &p, &ch);
            let caps_scaled = sic_caps(&cfg, &p.scale(factor), &ch.scale_noise(factor));
            for rx in 0..2 {
                for (a, b) in caps[rx].iter().zip(&caps_scaled[rx]) {
                    assert!((a.1 - b.1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn effective_noise_floor_equality() {
        let ch = two_user_channel();
        let p = PowerAllocation::from_rows(vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        // (1,1) carries zero power: contribution is zero, equality holds.
        let zero_contrib = SubUserSet::singleton(SubUserId::new(1, 1), 2);
        assert_eq!(effective_noise(0, zero_contrib, &p, &ch), ch.noise(0));
        // (1,0) carries power: strictly above the floor.
        let live = SubUserSet::singleton(SubUserId::new(1, 0), 2);
        assert!(effective_noise(0, live, &p, &ch) > ch.noise(0));
    }

    #[test]
    fn config_validation() {
        // Missing own stream.
        let bad = DecodingConfig::new(vec![vec![SubUserId::new(0, 0)]], 2);
        assert!(bad.is_err());
        // Duplicate stream.
        let bad = DecodingConfig::new(
            vec![
                vec![
                    SubUserId::new(0, 0),
                    SubUserId::new(0, 1),
                    SubUserId::new(0, 0),
                ],
                vec![SubUserId::new(1, 0), SubUserId::new(1, 1)],
            ],
            2,
        );
        assert!(bad.is_err());
        // Own-only always valid.
        let cfg = DecodingConfig::own_only(3);
        assert_eq!(cfg.decoded_set(1), SubUserSet::own_streams(1, 3));
        assert_eq!(cfg.undecoded_set(1).len(), 6);
    }

    #[test]
    fn channel_validation() {
        assert!(Channel::new(vec![vec![1.0]], vec![0.0]).is_err());
        assert!(Channel::new(vec![vec![-1.0]], vec![1.0]).is_err());
        assert!(Channel::new(vec![vec![1.0, 2.0]], vec![1.0]).is_err());
        assert!(Channel::new(vec![vec![f64::NAN]], vec![1.0]).is_err());
    }

    #[test]
    fn scenario_validation() {
        let ch = two_user_channel();
        assert!(Scenario::new(ch.clone(), vec![1.0]).is_err());
        assert!(Scenario::new(ch.clone(), vec![1.0, -0.5]).is_err());
        let sc = Scenario::new(ch, vec![1.0, 0.5]).unwrap();
        assert!(sc.clone().with_bandwidth_hz(-1.0).is_err());
        assert!(sc.with_power_budget(10.0).unwrap().power_budget() == Some(10.0));
    }
}
