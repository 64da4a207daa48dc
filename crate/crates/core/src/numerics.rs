//! Small numerical helpers shared across the fitting stack.

use statrs::distribution::{ContinuousCDF, Normal};

/// Compensated accumulator (Neumaier variant of Kahan summation).
///
/// Prefix scans over 1e5-1e6 terms lose digits under naive accumulation;
/// the compensation keeps the running sums accurate enough for the oracle
/// comparisons at 1e-10.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    // unwrap: the unit normal parameters are always valid
    let n = Normal::new(0.0, 1.0).unwrap();
    n.cdf(x)
}

/// Standard normal quantile, `z_q` with `P(Z <= z_q) = q`.
pub fn normal_quantile(q: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    n.inverse_cdf(q)
}

/// Two-sided p-value for a standard normal test statistic.
pub fn two_sided_p(z: f64) -> f64 {
    2.0 * (1.0 - normal_cdf(z.abs()))
}

/// Nearest-rank percentile of a sample: the smallest element with at least
/// `q * len` elements at or below it. `q` in (0, 1].
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}
