//! Seeded scenario generation.
//!
//! Randomized scenarios derive from a small linear-congruential generator
//! so that results are reproducible across runs, platforms and
//! reimplementations. The generator and the sampling recipe below are part
//! of the tool's contract: the same seed always yields the same scenario.

use crate::model::{Channel, Scenario};

/// 64-bit linear-congruential generator.
///
/// State update: `state <- state * 6364136223846793005 + 1442695040888963407`
/// (mod 2^64). `next_u64` advances once and returns the new state;
/// `next_f64` maps the top 53 bits uniformly onto `[0, 1)`.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

const LCG_MUL: u64 = 6364136223846793005;
const LCG_ADD: u64 = 1442695040888963407;

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(LCG_MUL).wrapping_add(LCG_ADD);
        self.state
    }

    /// Uniform sample in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform sample in `[lo, hi)`.
    #[inline]
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform sample in `0..bound` (`bound > 0`).
    #[inline]
    pub fn next_usize(&mut self, bound: usize) -> usize {
        ((self.next_u64() >> 33) as usize) % bound
    }
}

/// Deterministic random scenario for `num_users` users.
///
/// Sampling order (each draw one `next_f64` call on `Lcg64::new(seed)`):
///
/// 1. direct gains `g[k][k]`, `k = 0..U`, uniform in `[0.5, 1.5)`;
/// 2. cross gains `g[i][k]`, row-major over `i != k`, uniform in
///    `[0.01, 0.25) / max(U - 1, 1)`;
/// 3. noise variances, `i = 0..U`, uniform in `[0.5, 1.5)`;
/// 4. minimum rates (bits/use), `k = 0..U`, uniform in `[0.4, 1.4)`.
///
/// The cross-gain range keeps interference weak enough that decoding only
/// one's own streams always admits a finite-power solution, so every
/// generated scenario is feasible.
pub fn seeded_scenario(seed: u64, num_users: usize) -> Scenario {
    let mut rng = Lcg64::new(seed);
    let u = num_users;
    let cross_scale = 1.0 / (u.saturating_sub(1).max(1) as f64);

    let mut gain = vec![vec![0.0; u]; u];
    for (k, row) in gain.iter_mut().enumerate() {
        row[k] = rng.range_f64(0.5, 1.5);
    }
    for i in 0..u {
        for k in 0..u {
            if i != k {
                gain[i][k] = rng.range_f64(0.01, 0.25) * cross_scale;
            }
        }
    }
    let noise = (0..u).map(|_| rng.range_f64(0.5, 1.5)).collect();
    let rate_min = (0..u).map(|_| rng.range_f64(0.4, 1.4)).collect();

    let channel = Channel::new(gain, noise).expect("generated channel is valid");
    Scenario::new(channel, rate_min).expect("generated scenario is valid")
}
