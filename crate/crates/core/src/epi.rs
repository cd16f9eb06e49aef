//! Entropy-power arithmetic and sum-rate outer bounds.
//!
//! Everything in this module works in nats (natural logarithms); the
//! `2*pi*e` constants force that choice. Converting to bits is a display
//! concern.
//!
//! Provided here:
//!
//! * differential entropy of a Gaussian and the entropy power
//!   `N(X) = exp(2 h(X) / n) / (2 pi e)`, which equals the variance for a
//!   scalar Gaussian;
//! * the entropy-power gap `N(X+Y) - N(X) - N(Y)` (nonnegative for
//!   independent inputs, zero exactly for Gaussians);
//! * a one-dimensional symmetric decreasing rearrangement on discretized
//!   densities, plus entropy quadrature for them;
//! * sum-rate bounds for a `K x K` crosstalk matrix: correlated inputs via
//!   a Cholesky factor, non-Gaussian noise via its entropy power, and a
//!   joint determinant bound across receivers;
//! * the identity between the SNR derivative of Gaussian mutual
//!   information and half the MMSE, checked against finite differences.

use std::f64::consts::PI;
use std::fmt;

fn two_pi_e() -> f64 {
    2.0 * PI * std::f64::consts::E
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum EpiError {
    /// Variance (or another required-positive scalar) was not positive.
    NonPositive { what: &'static str },
    /// A density failed validation.
    BadDensity { reason: String },
    /// Cholesky factorization hit a non-positive pivot; the index is the
    /// 1-based order of the failing leading minor.
    NotPositiveDefinite { pivot: usize },
    /// A matrix argument is not square / sizes disagree.
    Dimension { what: &'static str },
}

impl fmt::Display for EpiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpiError::NonPositive { what } => write!(f, "{what} must be positive"),
            EpiError::BadDensity { reason } => write!(f, "invalid density: {reason}"),
            EpiError::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            EpiError::Dimension { what } => write!(f, "dimension mismatch in {what}"),
        }
    }
}

impl std::error::Error for EpiError {}

// ---------------------------------------------------------------------------
// Entropy power basics
// ---------------------------------------------------------------------------

/// Differential entropy of a scalar Gaussian: `0.5 * ln(2 pi e v)` nats.
pub fn gaussian_entropy(variance: f64) -> Result<f64, EpiError> {
    if !variance.is_finite() || variance <= 0.0 {
        return Err(EpiError::NonPositive { what: "variance" });
    }
    Ok(0.5 * (two_pi_e() * variance).ln())
}

/// Entropy power of an `n`-dimensional variable with differential entropy
/// `h` nats: `exp(2 h / n) / (2 pi e)`. Strictly increasing in `h`; for a
/// scalar Gaussian it recovers the variance exactly.
pub fn entropy_power(h: f64, n: usize) -> f64 {
    assert!(n >= 1);
    (2.0 * h / n as f64).exp() / two_pi_e()
}

/// Slack of the entropy-power inequality: `nsum - (nx + ny)`.
/// Zero (to rounding) when the summands are independent Gaussians,
/// nonnegative for any independent pair.
pub fn epi_gap(nx: f64, ny: f64, nsum: f64) -> f64 {
    nsum - (nx + ny)
}

// ---------------------------------------------------------------------------
// Discretized densities
// ---------------------------------------------------------------------------

/// A probability density sampled on a centered uniform grid: cell `i`
/// sits at `(i - (len-1)/2) * step` and carries density value
/// `values[i] >= 0`, with `sum(values) * step = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDensity1D {
    step: f64,
    values: Vec<f64>,
}

impl DiscreteDensity1D {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self, EpiError> {
        if !step.is_finite() || step <= 0.0 {
            return Err(EpiError::NonPositive { what: "step" });
        }
        if values.is_empty() {
            return Err(EpiError::BadDensity {
                reason: "empty grid".into(),
            });
        }
        for &v in &values {
            if !v.is_finite() || v < 0.0 {
                return Err(EpiError::BadDensity {
                    reason: "values must be finite and nonnegative".into(),
                });
            }
        }
        let mass: f64 = values.iter().sum::<f64>() * step;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(EpiError::BadDensity {
                reason: format!("total mass {mass} is not 1"),
            });
        }
        Ok(Self { step, values })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Uniform density of the given total `width`, sampled on `cells`
    /// cells.
    pub fn uniform(width: f64, cells: usize) -> Result<Self, EpiError> {
        let step = width / cells as f64;
        Self::new(step, vec![1.0 / width; cells])
    }

    /// Discretized zero-mean Gaussian, truncated at +-`half_width` and
    /// renormalized to unit mass.
    pub fn gaussian(variance: f64, half_width: f64, cells: usize) -> Result<Self, EpiError> {
        if !variance.is_finite() || variance <= 0.0 {
            return Err(EpiError::NonPositive { what: "variance" });
        }
        let step = 2.0 * half_width / cells as f64;
        let center = (cells as f64 - 1.0) / 2.0;
        let mut values: Vec<f64> = (0..cells)
            .map(|i| {
                let x = (i as f64 - center) * step;
                (-x * x / (2.0 * variance)).exp()
            })
            .collect();
        let mass: f64 = values.iter().sum::<f64>() * step;
        for v in &mut values {
            *v /= mass;
        }
        Self::new(step, values)
    }

    /// Density of the sum of two independent discretized variables
    /// (discrete convolution scaled by the grid step). Both inputs must
    /// share the same step.
    pub fn convolve(&self, other: &Self) -> Result<Self, EpiError> {
        if (self.step - other.step).abs() > 1e-12 {
            return Err(EpiError::Dimension {
                what: "convolution steps",
            });
        }
        let n = self.values.len() + other.values.len() - 1;
        let mut out = vec![0.0; n];
        for (i, &a) in self.values.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.values.iter().enumerate() {
                out[i + j] += a * b * self.step;
            }
        }
        // The discrete convolution preserves mass up to rounding.
        let mass: f64 = out.iter().sum::<f64>() * self.step;
        for v in &mut out {
            *v /= mass;
        }
        Self::new(self.step, out)
    }
}

/// Symmetric decreasing rearrangement of a discretized density.
///
/// The value multiset is kept and re-placed center-out: the largest value
/// goes to the center cell (`len / 2`), then alternately one cell right,
/// one cell left, in descending order. The result is symmetric-decreasing
/// up to the one-cell parity of even grids; total mass and the value
/// multiset are preserved exactly.
pub fn rearrange_decreasing_1d(d: &DiscreteDensity1D) -> DiscreteDensity1D {
    let n = d.values.len();
    let mut sorted = d.values.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let center = n / 2;
    let mut out = vec![0.0; n];
    let mut right = center;
    let mut left = center;
    let mut take_right = true; // the center itself counts as the first "right" slot
    for v in sorted {
        loop {
            if take_right && right < n {
                out[right] = v;
                right += 1;
                take_right = false;
                break;
            }
            if !take_right && left > 0 {
                left -= 1;
                out[left] = v;
                take_right = true;
                break;
            }
            // One side exhausted; flip and continue on the other.
            take_right = !take_right;
        }
    }
    DiscreteDensity1D {
        step: d.step,
        values: out,
    }
}

/// Differential-entropy quadrature: `-sum f_i ln(f_i) * step` over cells
/// with positive density.
pub fn discrete_entropy(d: &DiscreteDensity1D) -> f64 {
    d.values
        .iter()
        .filter(|&&f| f > 0.0)
        .map(|&f| -f * f.ln() * d.step)
        .sum()
}

// ---------------------------------------------------------------------------
// Cholesky factor
// ---------------------------------------------------------------------------

/// Lower-triangular factor `A` of an input covariance, together with the
/// per-component powers `P` of the underlying independent components
/// (so the covariance is `A * diag(P) * A'`).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceFactor {
    /// Row-major lower-triangular `K x K` factor.
    pub lower: Vec<Vec<f64>>,
    /// Component powers; all ones when produced by [`factor_covariance`].
    pub powers: Vec<f64>,
}

/// Cholesky factorization `sigma = A * A'` of a symmetric positive
/// definite matrix. Fails with the 1-based pivot order when a leading
/// minor is not positive.
pub fn factor_covariance(sigma: &[Vec<f64>]) -> Result<CovarianceFactor, EpiError> {
    let k = sigma.len();
    if sigma.iter().any(|row| row.len() != k) || k == 0 {
        return Err(EpiError::Dimension { what: "sigma" });
    }
    let mut lower = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut sum = sigma[i][j];
            for m in 0..j {
                sum -= lower[i][m] * lower[j][m];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(EpiError::NotPositiveDefinite { pivot: i + 1 });
                }
                lower[i][j] = sum.sqrt();
            } else {
                lower[i][j] = sum / lower[j][j];
            }
        }
    }
    Ok(CovarianceFactor {
        lower,
        powers: vec![1.0; k],
    })
}

/// `ln det` of a symmetric positive definite matrix via its Cholesky
/// pivots.
fn ln_det_spd(m: &[Vec<f64>]) -> Result<f64, EpiError> {
    let factor = factor_covariance(m)?;
    Ok(factor
        .lower
        .iter()
        .enumerate()
        .map(|(i, row)| 2.0 * row[i].ln())
        .sum())
}

// ---------------------------------------------------------------------------
// Sum-rate bounds
// ---------------------------------------------------------------------------

/// Receiver noise description: the variance `N_j` and the entropy power
/// `N*_j` of the (possibly rearranged non-Gaussian) noise. For Gaussian
/// noise the two coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub variance: Vec<f64>,
    pub entropy_power: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(variance: Vec<f64>, entropy_power: Vec<f64>) -> Result<Self, EpiError> {
        if variance.len() != entropy_power.len() {
            return Err(EpiError::Dimension { what: "noise spec" });
        }
        if variance
            .iter()
            .chain(entropy_power.iter())
            .any(|&v| !v.is_finite() || v <= 0.0)
        {
            return Err(EpiError::NonPositive {
                what: "noise variance / entropy power",
            });
        }
        Ok(Self {
            variance,
            entropy_power,
        })
    }

    /// Gaussian noise: entropy power equals the variance.
    pub fn gaussian(variance: Vec<f64>) -> Result<Self, EpiError> {
        Self::new(variance.clone(), variance)
    }
}

/// Which noise figure enters the signal-side (numerator) term of the
/// per-receiver bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Gaussian noise: the bound is `0.5 ln(1 + S / (I + N))` per
    /// receiver.
    Gaussian,
    /// Non-Gaussian noise characterized by its entropy power `N*`: the
    /// bound is `0.5 ln((S + N*) / (I + N))` per receiver.
    EntropyPower,
}

/// Sum-rate bound (nats) for correlated Gaussian inputs through the
/// amplitude crosstalk matrix `h` (`h[j][i]` from transmitter `i` to
/// receiver `j`).
///
/// With the input covariance factored as `A * diag(P) * A'`, the
/// effective coefficient of component `k` at receiver `j` is
/// `c_jk = sum_i h[j][i] * A[i][k]`; receiver `j` contributes
///
/// ```text
/// S_j = sum_k c_jk^2 P_k
/// I_j = sum_{i != j} sum_k h[j][i]^2 A[i][k]^2 P_k
/// ```
///
/// combined per [`NoiseModel`].
pub fn sum_rate_bound_correlated(
    h: &[Vec<f64>],
    a: &[Vec<f64>],
    p: &[f64],
    noise: &NoiseSpec,
    model: NoiseModel,
) -> f64 {
    let k = p.len();
    assert!(h.len() == k && a.len() == k, "shape mismatch");
    assert!(h.iter().all(|r| r.len() == k) && a.iter().all(|r| r.len() == k));
    assert_eq!(noise.variance.len(), k);
    assert!(p.iter().all(|&v| v >= 0.0));

    let mut sum = 0.0;
    for j in 0..k {
        let mut signal = 0.0;
        for kk in 0..k {
            let c_jk: f64 = (0..k).map(|i| h[j][i] * a[i][kk]).sum();
            signal += c_jk * c_jk * p[kk];
        }
        let mut interference = 0.0;
        for i in 0..k {
            if i == j {
                continue;
            }
            for kk in 0..k {
                interference += h[j][i] * h[j][i] * a[i][kk] * a[i][kk] * p[kk];
            }
        }
        let denom = interference + noise.variance[j];
        sum += match model {
            NoiseModel::Gaussian => 0.5 * (signal / denom).ln_1p(),
            NoiseModel::EntropyPower => 0.5 * ((signal + noise.entropy_power[j]) / denom).ln(),
        };
    }
    sum
}

/// Joint sum-rate bound (nats) across all receivers:
/// `0.5 * ln det(I + Ncov^{-1} * s * I)` with `s = sum_j h_diag[j]^2 P_j`,
/// evaluated as `0.5 * (ln det(Ncov + s I) - ln det(Ncov))` through
/// Cholesky pivots. An outer-bound figure for cooperative decoding.
pub fn joint_sum_rate_bound(h_diag: &[f64], p: &[f64], ncov: &[Vec<f64>]) -> Result<f64, EpiError> {
    let k = h_diag.len();
    if p.len() != k || ncov.len() != k || ncov.iter().any(|r| r.len() != k) {
        return Err(EpiError::Dimension {
            what: "joint bound inputs",
        });
    }
    let s: f64 = h_diag.iter().zip(p).map(|(&h, &pw)| h * h * pw).sum();
    let shifted: Vec<Vec<f64>> = ncov
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| if i == j { v + s } else { v })
                .collect()
        })
        .collect();
    Ok(0.5 * (ln_det_spd(&shifted)? - ln_det_spd(ncov)?))
}

// ---------------------------------------------------------------------------
// MMSE identity
// ---------------------------------------------------------------------------

/// Both sides of the SNR-derivative identity for a Gaussian input of
/// power `P` at SNR `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseCheck {
    /// `0.5 * P / (1 + gamma * P)` — half the Gaussian MMSE.
    pub analytic: f64,
    /// Central finite difference of `0.5 * ln(1 + gamma * P)` at `gamma`.
    pub finite_difference: f64,
}

/// Evaluate the identity `d/d gamma I(X; Y) = mmse(gamma) / 2` for a
/// Gaussian input. The two fields agree within about 1e-6 for moderate
/// arguments.
pub fn mmse_identity_check(gamma: f64, power: f64) -> MmseCheck {
    assert!(gamma > 0.0 && power > 0.0);
    let analytic = 0.5 * power / (1.0 + gamma * power);
    let h = 1e-6;
    let mi = |g: f64| 0.5 * (g * power).ln_1p();
    let finite_difference = (mi(gamma + h) - mi(gamma - h)) / (2.0 * h);
    MmseCheck {
        analytic,
        finite_difference,
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
