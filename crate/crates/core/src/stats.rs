//! Small numeric helpers shared by the estimators: compensated summation and
//! mergeable moment accumulators.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Count / sum / sum-of-squares accumulator. Merging is associative, so
/// partial results from fixed path-index chunks can be reduced in chunk order
/// to get bit-identical totals for any worker count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    sum: KahanSum,
    sum_sq: KahanSum,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        self.count += other.count;
        self.sum.add(other.sum.value());
        self.sum_sq.add(other.sum_sq.value());
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean(),
            std_error: self.std_error(),
        }
    }
}

impl FromIterator<f64> for MomentAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MomentAccumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// A point estimate with its standard error. A standard error of exactly
/// zero marks a deterministic quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn deterministic(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
        }
    }

    /// `|value - target| <= k * std_error`.
    pub fn within_se(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }

    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Ordinary (optionally weighted) least squares fit of `y = intercept + slope * x`.
/// Returns the per-observation coefficients `c_i` such that
/// `intercept = sum_i c_i * y_i`, which lets callers propagate the exact
/// sampling error of correlated observations.
pub fn intercept_coefficients(xs: &[f64], weights: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(xs.len(), weights.len());
    let sw: f64 = weights.iter().sum();
    let sx: f64 = xs.iter().zip(weights).map(|(x, w)| w * x).sum();
    let sxx: f64 = xs.iter().zip(weights).map(|(x, w)| w * x * x).sum();
    let det = sw * sxx - sx * sx;
    if !(det.is_finite() && det.abs() > 1e-300) || sw <= 0.0 {
        return None;
    }
    Some(
        xs.iter()
            .zip(weights)
            .map(|(x, w)| w * (sxx - sx * x) / det)
            .collect(),
    )
}
