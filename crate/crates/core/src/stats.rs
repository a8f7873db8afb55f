//! Small numerical helpers shared by the Monte Carlo harnesses.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal upper tail `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `ln Q(x)`, finite far beyond the point where `Q(x)` underflows.
///
/// For `x > 5` the Mills ratio is evaluated with its continued fraction
/// `Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + …))))`.
pub fn ln_q(x: f64) -> f64 {
    if x <= 5.0 {
        return q_function(x).ln();
    }
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + f64::from(k) / tail;
    }
    -0.5 * x * x - LN_SQRT_2PI - tail.ln()
}

/// Inverse of the standard normal CDF.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided Gaussian quantile: `z` with `P(|N(0,1)| ≤ z) = p`.
pub fn two_sided_quantile(p: f64) -> f64 {
    normal_quantile(0.5 * (1.0 + p))
}

/// `ln Σ exp(v)` over the iterator; `-inf` for an empty input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Composite Simpson nodes and weights on `[a, b]` with `panels` (rounded up
/// to even) sub-intervals.
pub fn simpson_rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let panels = (panels.max(2) + 1) & !1;
    let h = (b - a) / panels as f64;
    (0..=panels)
        .map(|k| {
            let w = if k == 0 || k == panels {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (a + h * k as f64, w * h / 3.0)
        })
        .collect()
}

/// Trials below this count get the uninformative interval `[0, 1]`.
pub const MIN_TRIALS_FOR_INTERVAL: u64 = 1_000;

/// Error count over a number of Bernoulli trials with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialEstimate {
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BinomialEstimate {
    /// Normal-approximation 95% interval, clamped to `[0, 1]`.
    pub fn new(errors: u64, trials: u64) -> Self {
        let rate = if trials == 0 {
            0.0
        } else {
            errors as f64 / trials as f64
        };
        let (ci_low, ci_high) = if trials < MIN_TRIALS_FOR_INTERVAL {
            (0.0, 1.0)
        } else {
            let half = 1.96 * (rate * (1.0 - rate) / trials as f64).sqrt();
            ((rate - half).max(0.0), (rate + half).min(1.0))
        };
        Self {
            trials,
            errors,
            rate,
            ci_low,
            ci_high,
        }
    }

    /// Binomial standard deviation of the rate under the hypothesis `p`.
    pub fn sigma_under(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// `|rate - p| ≤ k·σ(p)`.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        (self.rate - p).abs() <= k * self.sigma_under(p)
    }
}
