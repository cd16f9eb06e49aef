//! Orthogonal multiple access baseline.
//!
//! Under OMA every user occupies a disjoint time fraction `alpha_k` of the
//! channel, so nobody interferes with anybody. Meeting a rate floor
//! `R_k` (bits/use, averaged over the whole frame) inside a fraction
//! `alpha_k` needs an in-slot rate of `R_k / alpha_k`, which costs
//!
//! ```text
//! avg power = alpha_k * noise_k * (2^(R_k / alpha_k) - 1) / g[k][k]
//! ```
//!
//! after averaging the burst power over the frame. TDMA and FDMA are
//! numerically identical under this normalization, so only the fraction
//! vector matters.

use crate::model::{pow2_m1, Scenario};
use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// OMA operating point: time fractions and the powers they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct OmaSolution {
    pub fractions: Vec<f64>,
    pub per_user_power: Vec<f64>,
    pub total_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OmaError {
    /// A user with a positive rate floor received a zero time fraction.
    ZeroFraction { user: usize },
    /// A user with a positive rate floor has a zero direct gain.
    ZeroGain { user: usize },
    /// Fractions exceed the unit budget.
    BudgetExceeded { total: f64 },
    /// No grid point of the fraction simplex is feasible.
    AllInfeasible,
}

impl fmt::Display for OmaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmaError::ZeroFraction { user } => {
                write!(
                    f,
                    "user {user} has a positive rate floor but no time fraction"
                )
            }
            OmaError::ZeroGain { user } => {
                write!(
                    f,
                    "user {user} has a positive rate floor but zero direct gain"
                )
            }
            OmaError::BudgetExceeded { total } => {
                write!(f, "time fractions sum to {total}, exceeding 1")
            }
            OmaError::AllInfeasible => write!(f, "no point of the fraction grid is feasible"),
        }
    }
}

impl std::error::Error for OmaError {}

/// Average powers for a fixed fraction vector.
///
/// Users with a zero rate floor cost nothing for any fraction (including
/// zero); every user with a positive floor needs `alpha > 0` and a
/// positive direct gain.
pub fn oma_min_power(sc: &Scenario, alphas: &[f64]) -> Result<OmaSolution, OmaError> {
    let ch = sc.channel();
    let u = ch.num_users();
    assert_eq!(alphas.len(), u);
    let total_alpha: f64 = alphas.iter().sum();
    if total_alpha > 1.0 + 1e-9 {
        return Err(OmaError::BudgetExceeded { total: total_alpha });
    }

    let mut per_user_power = Vec::with_capacity(u);
    for k in 0..u {
        let rate = sc.rate_min()[k];
        if rate <= 0.0 {
            per_user_power.push(0.0);
            continue;
        }
        let alpha = alphas[k];
        if alpha <= 0.0 {
            return Err(OmaError::ZeroFraction { user: k });
        }
        let gain = ch.gain(k, k);
        if gain <= 0.0 {
            return Err(OmaError::ZeroGain { user: k });
        }
        per_user_power.push(alpha * ch.noise(k) * pow2_m1(rate / alpha) / gain);
    }
    let total_power = per_user_power.iter().sum();
    Ok(OmaSolution {
        fractions: alphas.to_vec(),
        per_user_power,
        total_power,
    })
}

/// Search the fraction simplex `sum alpha = 1` on a grid of resolution
/// `grid_n`, then refine the best point by golden-section sweeps over
/// coordinate pairs. Deterministic for fixed inputs.
pub fn oma_optimize_fractions(sc: &Scenario, grid_n: usize) -> Result<OmaSolution, OmaError> {
    assert!(grid_n >= 2);
    let u = sc.num_users();

    if u == 1 {
        return oma_min_power(sc, &[1.0]);
    }

    // Grid stage.
    let mut grid_points: Vec<Vec<f64>> = Vec::new();
    let mut counts = vec![0usize; u];
    simplex_grid(grid_n, u, &mut counts, 0, &mut |c| {
        grid_points.push(c.iter().map(|&m| m as f64 / grid_n as f64).collect());
    });

    let eval = |alphas: &[f64]| -> Option<(f64, Vec<f64>)> {
        oma_min_power(sc, alphas)
            .ok()
            .map(|s| (s.total_power, alphas.to_vec()))
    };

    let best_grid: Option<(f64, Vec<f64>)> = {
        #[cfg(feature = "parallel")]
        {
            grid_points
                .par_iter()
                .filter_map(|a| eval(a))
                .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
        }
        #[cfg(not(feature = "parallel"))]
        {
            grid_points
                .iter()
                .filter_map(|a| eval(a))
                .reduce(|a, b| if b.0 < a.0 { b } else { a })
        }
    };
    let (mut best_total, mut best) = best_grid.ok_or(OmaError::AllInfeasible)?;

    // Refinement stage: golden-section the transfer between each ordered
    // coordinate pair, holding the rest fixed; sweep until stable.
    for _ in 0..50 {
        let mut improved = false;
        for i in 0..u {
            for j in 0..u {
                if i == j {
                    continue;
                }
                let (t, total) = golden_transfer(&best, i, j, |a| {
                    oma_min_power(sc, a).map(|s| s.total_power).ok()
                });
                if total < best_total - 1e-12 {
                    best[i] += t;
                    best[j] -= t;
                    best_total = total;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    oma_min_power(sc, &best)
}

/// Golden-section search over the transfer `t` moving fraction mass from
/// coordinate `j` to coordinate `i`. Returns the best transfer and its
/// objective value.
fn golden_transfer(
    alphas: &[f64],
    i: usize,
    j: usize,
    objective: impl Fn(&[f64]) -> Option<f64>,
) -> (f64, f64) {
    const PHI: f64 = 0.6180339887498949;
    let lo = -alphas[i];
    let hi = alphas[j];
    let apply = |t: f64| -> Option<f64> {
        let mut a = alphas.to_vec();
        a[i] += t;
        a[j] -= t;
        if a[i] < 0.0 || a[j] < 0.0 {
            return None;
        }
        objective(&a)
    };
    let score = |t: f64| apply(t).unwrap_or(f64::INFINITY);

    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - PHI * (b - a);
    let mut x2 = a + PHI * (b - a);
    let mut f1 = score(x1);
    let mut f2 = score(x2);
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - PHI * (b - a);
            f1 = score(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + PHI * (b - a);
            f2 = score(x2);
        }
    }
    let t = if f1 <= f2 { x1 } else { x2 };
    (t, score(t))
}

fn simplex_grid(
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
        simplex_grid(total - v, parts, scratch, idx + 1, emit);
    }
}
