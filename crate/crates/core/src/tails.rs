//! Tail-curve estimation and the Tauberian cross-check.
//!
//! A [`TailCurve`] holds `lambda * P(X^{1/2} > lambda)` (or `lambda * P(X > lambda)`)
//! on a grid. Every summary drawn from a curve (plateau, extrapolated limit)
//! is a fixed linear combination of the per-lambda estimates, and so equals
//! the sample mean of `h(X) = sum_i c_i lambda_i 1{X > lambda_i}`. Its
//! standard error is computed exactly from the nested exceedance counts
//! instead of pretending the grid points are independent.
//!
//! Grid points with no exceedances would get zero variance and swamp any
//! inverse-variance weighting, so variances are floored at one exceedance
//! (`p >= 1/N`).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{intercept_coefficients, Estimate, MomentAccumulator};

/// `sqrt(2 / pi)`.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Points on the default asymptotic grid.
pub const BIG_GRID_POINTS: usize = 12;

/// Default small-lambda grid for the transform side.
pub const DEFAULT_SMALL_LAMBDAS: [f64; 5] = [0.5, 0.2, 0.1, 0.05, 0.02];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TailError {
    #[error("sample set is empty")]
    EmptySamples,
    #[error("samples must be finite and nonnegative, found {0}")]
    InvalidSample(f64),
    #[error("lambda grid must be positive, finite and strictly increasing")]
    InvalidGrid,
    #[error("extrapolation needs at least 3 grid points, got {0}")]
    IllConditioned(usize),
    #[error("cannot build a grid: lower end {lo} is not below upper end {hi}")]
    DegenerateGrid { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// `lambda * P(X^{1/2} > lambda)`.
    SqrtTail,
    /// `lambda * P(X > lambda)`.
    PlainTail,
}

impl fmt::Display for TailMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailMode::SqrtTail => "sqrt_tail",
            TailMode::PlainTail => "plain_tail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_samples: u64,
    pub mode: TailMode,
}

impl TailCurve {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_samples as f64;
        self.counts.iter().map(move |&c| c as f64 / n)
    }

    fn floored_probability(&self, i: usize) -> f64 {
        let n = self.n_samples as f64;
        (self.counts[i] as f64 / n).max(1.0 / n)
    }

    /// Variance of `values[i]` with the one-exceedance floor.
    fn floored_variance(&self, i: usize) -> f64 {
        let p = self.floored_probability(i);
        self.lambdas[i].powi(2) * p * (1.0 - p) / self.n_samples as f64
    }

    /// Mean and exact standard error of `sum_i c_i values[i]` over `indices`.
    fn linear_functional(&self, indices: &[usize], coeffs: &[f64]) -> Estimate {
        let value = indices
            .iter()
            .zip(coeffs)
            .map(|(&i, c)| c * self.values[i])
            .sum();
        // Cov(1{X > l_i}, 1{X > l_k}) = p_max(i,k) - p_i p_k for increasing lambdas.
        let mut var = 0.0;
        for (a, (&i, ci)) in indices.iter().zip(coeffs).enumerate() {
            for (&k, ck) in indices[a..].iter().zip(&coeffs[a..]) {
                let (pi, pk) = (self.floored_probability(i), self.floored_probability(k));
                let cov = self.floored_probability(i.max(k)) - pi * pk;
                let term = ci * ck * self.lambdas[i] * self.lambdas[k] * cov;
                var += if i == k { term } else { 2.0 * term };
            }
        }
        Estimate {
            value,
            std_error: (var.max(0.0) / self.n_samples as f64).sqrt(),
        }
    }

    fn weighted_mean_over(&self, indices: &[usize]) -> Estimate {
        let weights: Vec<f64> = indices
            .iter()
            .map(|&i| 1.0 / self.floored_variance(i))
            .collect();
        let total: f64 = weights.iter().sum();
        let coeffs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        self.linear_functional(indices, &coeffs)
    }

    /// Inverse-variance weighted mean over the whole grid.
    pub fn plateau(&self) -> Estimate {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.weighted_mean_over(&idx)
    }

    /// Inverse-variance weighted mean over the last third of the grid.
    pub fn last_third_plateau(&self) -> Estimate {
        let m = self.len();
        let start = m - m.div_ceil(3);
        let idx: Vec<usize> = (start..m).collect();
        self.weighted_mean_over(&idx)
    }

    fn first_third_plateau(&self) -> Estimate {
        let idx: Vec<usize> = (0..self.len().div_ceil(3)).collect();
        self.weighted_mean_over(&idx)
    }

    /// Weighted least-squares intercept of `value = c + d / lambda`, i.e. the
    /// `lambda -> inf` limit with a first-order correction.
    pub fn extrapolated_limit(&self) -> Result<Estimate, TailError> {
        if self.len() < 3 {
            return Err(TailError::IllConditioned(self.len()));
        }
        let xs: Vec<f64> = self.lambdas.iter().map(|l| 1.0 / l).collect();
        let ws: Vec<f64> = (0..self.len())
            .map(|i| 1.0 / self.floored_variance(i))
            .collect();
        let coeffs =
            intercept_coefficients(&xs, &ws).ok_or(TailError::IllConditioned(self.len()))?;
        let idx: Vec<usize> = (0..self.len()).collect();
        Ok(self.linear_functional(&idx, &coeffs))
    }
}

fn validate_grid(lambdas: &[f64]) -> Result<(), TailError> {
    let ok = lambdas.iter().all(|l| l.is_finite() && *l > 0.0)
        && lambdas.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(TailError::InvalidGrid)
    }
}

fn validate_samples(samples: &[f64]) -> Result<(), TailError> {
    if samples.is_empty() {
        return Err(TailError::EmptySamples);
    }
    match samples.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        Some(&bad) => Err(TailError::InvalidSample(bad)),
        None => Ok(()),
    }
}

/// Exceedance counts on a sorted copy of the (transformed) samples.
pub fn empirical_tail_curve(
    samples: &[f64],
    lambdas: &[f64],
    mode: TailMode,
) -> Result<TailCurve, TailError> {
    validate_samples(samples)?;
    validate_grid(lambdas)?;
    let mut sorted: Vec<f64> = match mode {
        TailMode::SqrtTail => samples.iter().map(|x| x.sqrt()).collect(),
        TailMode::PlainTail => samples.to_vec(),
    };
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as u64;
    let nf = n as f64;
    let counts: Vec<u64> = lambdas
        .iter()
        .map(|&l| n - sorted.partition_point(|&v| v <= l) as u64)
        .collect();
    let values = lambdas
        .iter()
        .zip(&counts)
        .map(|(l, &c)| l * c as f64 / nf)
        .collect();
    let std_errors = lambdas
        .iter()
        .zip(&counts)
        .map(|(l, &c)| {
            let p = c as f64 / nf;
            l * (p * (1.0 - p) / nf).sqrt()
        })
        .collect();
    Ok(TailCurve {
        lambdas: lambdas.to_vec(),
        values,
        std_errors,
        counts,
        n_samples: n,
        mode,
    })
}

pub fn sup_neg_tail_curve(samples: &[f64], lambdas: &[f64]) -> Result<TailCurve, TailError> {
    empirical_tail_curve(samples, lambdas, TailMode::PlainTail)
}

fn median(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Geometric grid of [`BIG_GRID_POINTS`] points from `5 * median` (at least 1)
/// to `0.3 * cap`, where the median is taken of `X^{1/2}` or `X` per `mode`.
pub fn default_big_grid(samples: &[f64], cap: f64, mode: TailMode) -> Result<Vec<f64>, TailError> {
    validate_samples(samples)?;
    let med = match mode {
        TailMode::SqrtTail => median(samples).sqrt(),
        TailMode::PlainTail => median(samples),
    };
    geometric_grid((5.0 * med).max(1.0), 0.3 * cap, BIG_GRID_POINTS)
}

pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, TailError> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi && points >= 2) {
        return Err(TailError::DegenerateGrid { lo, hi });
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (ratio * i as f64).exp()).collect())
}

/// `(1/lambda) (1 - E exp(-lambda^2 X / 2))` with its standard error.
pub fn laplace_side(samples: &[f64], lambda: f64) -> Result<Estimate, TailError> {
    validate_samples(samples)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(TailError::InvalidGrid);
    }
    let half_l2 = 0.5 * lambda * lambda;
    let acc: MomentAccumulator = samples
        .iter()
        .map(|&x| -(-half_l2 * x).exp_m1() / lambda)
        .collect();
    Ok(acc.estimate())
}

/// Upper bound on the upward bias of [`laplace_side`] from censored samples
/// whose predictable bracket was cut at `qv_cap`.
pub fn laplace_censoring_bias(n_censored: u64, n: u64, qv_cap: f64, lambda: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    n_censored as f64 / n as f64 * (-0.5 * lambda * lambda * qv_cap).exp() / lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacePoint {
    pub lambda: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauberianReport {
    /// Intercept of an OLS fit of the transform side against `lambda`.
    pub laplace_limit: Estimate,
    /// Inverse-variance weighted plateau of `lambda P(X^{1/2} > lambda)`.
    pub tail_limit: Estimate,
    /// `tail_limit / (sqrt(2/pi) laplace_limit)`; `None` when the
    /// transform limit is not distinguishable from zero.
    pub ratio: Option<Estimate>,
    pub mean_terminal: Estimate,
    pub laplace_points: Vec<LaplacePoint>,
}

/// Compares both sides of the Tauberian relation on samples of `X`.
///
/// `terminal_values` are the uncensored `M_inf` draws used for `E M_inf`.
pub fn tauberian_compare(
    samples: &[f64],
    terminal_values: &[f64],
    small_lambdas: &[f64],
    big_lambdas: &[f64],
) -> Result<TauberianReport, TailError> {
    validate_samples(samples)?;
    if small_lambdas.len() < 3 {
        return Err(TailError::IllConditioned(small_lambdas.len()));
    }
    if small_lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(TailError::InvalidGrid);
    }
    let coeffs = intercept_coefficients(small_lambdas, &vec![1.0; small_lambdas.len()])
        .ok_or(TailError::IllConditioned(small_lambdas.len()))?;
    let halves: Vec<f64> = small_lambdas.iter().map(|l| 0.5 * l * l).collect();
    let mut combined = MomentAccumulator::new();
    let mut per_lambda = vec![MomentAccumulator::new(); small_lambdas.len()];
    for &x in samples {
        let mut h = 0.0;
        for (i, (&l, &half)) in small_lambdas.iter().zip(&halves).enumerate() {
            let v = -(-half * x).exp_m1() / l;
            per_lambda[i].push(v);
            h += coeffs[i] * v;
        }
        combined.push(h);
    }
    let laplace_limit = combined.estimate();
    let laplace_points = small_lambdas
        .iter()
        .zip(&per_lambda)
        .map(|(&lambda, acc)| LaplacePoint {
            lambda,
            estimate: acc.estimate(),
        })
        .collect();

    let curve = empirical_tail_curve(samples, big_lambdas, TailMode::SqrtTail)?;
    let tail_limit = curve.plateau();

    let ratio = (laplace_limit.value.abs() > 3.0 * laplace_limit.std_error
        && laplace_limit.value != 0.0)
        .then(|| {
            let denom = SQRT_2_OVER_PI * laplace_limit.value;
            let r = tail_limit.value / denom;
            let rel_t = if tail_limit.value != 0.0 {
                tail_limit.std_error / tail_limit.value
            } else {
                0.0
            };
            let rel_l = laplace_limit.std_error / laplace_limit.value;
            Estimate {
                value: r,
                std_error: r.abs() * (rel_t * rel_t + rel_l * rel_l).sqrt(),
            }
        });

    let mean_terminal = if terminal_values.is_empty() {
        Estimate {
            value: f64::NAN,
            std_error: f64::NAN,
        }
    } else {
        terminal_values
            .iter()
            .copied()
            .collect::<MomentAccumulator>()
            .estimate()
    };

    Ok(TauberianReport {
        laplace_limit,
        tail_limit,
        ratio,
        mean_terminal,
        laplace_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassDVerdict {
    ConsistentWithD,
    NotD,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDDiagnostic {
    pub verdict: ClassDVerdict,
    /// Last-third plateau of each input curve, in input order.
    pub plateaus: Vec<Estimate>,
}

/// A curve "trends to zero" when its last-third plateau is within 3 SE of
/// 0, and "plateaus" when it sits more than 3 SE above 0 without decaying
/// from its first third by more than 3 combined SE.
pub fn class_d_diagnostic(curves: &[&TailCurve; 3]) -> ClassDDiagnostic {
    if curves.iter().any(|c| c.len() < 3) {
        return ClassDDiagnostic {
            verdict: ClassDVerdict::Inconclusive,
            plateaus: curves.iter().map(|c| c.plateau()).collect(),
        };
    }
    let plateaus: Vec<Estimate> = curves.iter().map(|c| c.last_third_plateau()).collect();
    let all_zero = plateaus.iter().all(|p| p.value <= 3.0 * p.std_error);
    let any_plateau = curves.iter().zip(&plateaus).any(|(c, last)| {
        let first = c.first_third_plateau();
        let combined = (first.std_error.powi(2) + last.std_error.powi(2)).sqrt();
        last.value > 3.0 * last.std_error && first.value - last.value <= 3.0 * combined
    });
    let verdict = if all_zero {
        ClassDVerdict::ConsistentWithD
    } else if any_plateau {
        ClassDVerdict::NotD
    } else {
        ClassDVerdict::Inconclusive
    };
    ClassDDiagnostic { verdict, plateaus }
}
