//! Numerical checks of the statements the tail limits rest on: the mean-one
//! density, the `E sup |L|^2 <= C K^2 E<M>` inequality, the explicit
//! sandwich on `log E_inf(lambda)`, and empirical envelopes for the
//! `zeta_1, zeta_2` condition.
//!
//! All densities are evaluated at the stopping time (or the censoring time),
//! where `M` is frozen; every catalog model stops almost surely.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{generate_path, sample_terminal, ModelError, ModelSpec, PathRecord};
use crate::quadvar::{discrepancy, discrepancy_bracket};
use crate::rng::derive_stream;
use crate::runner::map_paths;
use crate::stats::{Estimate, MomentAccumulator};
use crate::stochexp::{density_at, log_stochastic_exponential_at, sandwich_bounds, StochExpError};

/// Violations kept in full; the rest are only counted.
pub const MAX_DUMPED_VIOLATIONS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    StochExp(#[from] StochExpError),
    #[error("the inequality is vacuous for K = 0 models")]
    ZeroJumpBound,
    #[error("lambda grid is empty")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanOneResult {
    pub lambda: f64,
    pub mean: Estimate,
    pub z_score: f64,
    pub n_paths: u64,
}

/// Monte Carlo mean of the terminal density `exp(lambda M - log E)`.
pub fn mean_one_density_check(
    model: &ModelSpec,
    lambda: f64,
    n_paths: u64,
    master: u64,
    step: f64,
) -> Result<MeanOneResult, CheckError> {
    model.validate()?;
    log_stochastic_exponential_at(model, lambda, 0.0)?;
    let values = map_paths(master, n_paths, |_, seed| -> Result<f64, CheckError> {
        let s = sample_terminal(model, seed, step)?;
        Ok(density_at(model, lambda, s.m_inf, s.stop_time)?)
    });
    let mut acc = MomentAccumulator::new();
    for v in values {
        acc.push(v?);
    }
    let mean = acc.estimate();
    Ok(MeanOneResult {
        lambda,
        mean,
        z_score: mean.z_score(1.0),
        n_paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdgPoint {
    pub horizon: f64,
    /// `E sup_{s <= t} L_s^2 / (K^2 E <M>_t)`.
    pub ratio: f64,
    pub mean_sup_l_sq: Estimate,
    pub mean_qv_pred: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdgReport {
    pub points: Vec<BdgPoint>,
    /// `(max - min) / max` of the ratio across horizons.
    pub variation: f64,
    /// Largest `<L>_t - K^2 <M>_t` seen on any path; never positive.
    pub max_bracket_excess: f64,
    /// Paths (over all horizons) where `<L>_t = K^2 <M>_t` holds exactly.
    pub bracket_equality_paths: u64,
    pub total_paths: u64,
}

pub fn bdg_ratio_check(
    model: &ModelSpec,
    horizons: &[f64],
    n_paths: u64,
    master: u64,
    step: f64,
) -> Result<BdgReport, CheckError> {
    model.validate()?;
    if model.jump_bound == 0.0 {
        return Err(CheckError::ZeroJumpBound);
    }
    let k2 = model.jump_bound * model.jump_bound;
    let mut points = Vec::with_capacity(horizons.len());
    let mut max_excess = f64::NEG_INFINITY;
    let mut equal = 0u64;
    for &horizon in horizons {
        let capped = model.clone().with_horizon(horizon);
        let per_path = map_paths(
            master,
            n_paths,
            |_, seed| -> Result<(f64, f64, f64), CheckError> {
                let path = generate_path(&capped, seed, step.min(horizon))?;
                let d = discrepancy(&path, &capped)?;
                let t = path.end_time();
                Ok((
                    d.sup_abs * d.sup_abs,
                    capped.predictable_qv_at(t),
                    discrepancy_bracket(&capped, t),
                ))
            },
        );
        let mut sup_acc = MomentAccumulator::new();
        let mut qv_acc = MomentAccumulator::new();
        for r in per_path {
            let (sup_sq, qv, bracket_l) = r?;
            sup_acc.push(sup_sq);
            qv_acc.push(qv);
            let excess = bracket_l - k2 * qv;
            max_excess = max_excess.max(excess);
            if excess == 0.0 {
                equal += 1;
            }
        }
        points.push(BdgPoint {
            horizon,
            ratio: sup_acc.mean() / (k2 * qv_acc.mean()),
            mean_sup_l_sq: sup_acc.estimate(),
            mean_qv_pred: qv_acc.estimate(),
        });
    }
    let max = points
        .iter()
        .map(|p| p.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let variation = if max > 0.0 { (max - min) / max } else { 0.0 };
    Ok(BdgReport {
        points,
        variation,
        max_bracket_excess: max_excess,
        bracket_equality_paths: equal,
        total_paths: n_paths * horizons.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub path_index: u64,
    pub lambda: f64,
    pub lower: f64,
    pub log_e: f64,
    pub upper: f64,
    /// Full path, regenerated from the same seed when the model allows it.
    pub path: Option<PathRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// Share of checked `(path, lambda)` pairs with `lower <= log E <= upper`.
    pub fraction: f64,
    pub pairs_checked: u64,
    pub pairs_violated: u64,
    /// Lambdas skipped because the lower factor is not positive.
    pub invalid_lambdas: Vec<f64>,
    pub violations: Vec<SandwichViolation>,
    /// `max |log E / (lambda^2/2 <M>) - 1| / lambda` over checked pairs:
    /// the smallest constant `C` in `[1 - C l, 1 + C l]` this sample supports.
    pub implied_c: f64,
    /// Largest relative gap between the bounds and `log E` (meaningful for K = 0).
    pub max_relative_gap: f64,
}

/// Relative slack allowed for rounding in the bound comparison.
pub const SANDWICH_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Compares `log E_inf(lambda)` with its explicit bounds on every path.
///
/// Both sides depend only on the stopping time, so terminal sampling
/// suffices; violating paths are regenerated in full for the dump.
pub fn sandwich_check(
    model: &ModelSpec,
    lambdas: &[f64],
    n_paths: u64,
    master: u64,
    step: f64,
) -> Result<SandwichReport, CheckError> {
    model.validate()?;
    if lambdas.is_empty() {
        return Err(CheckError::EmptyGrid);
    }
    for &l in lambdas {
        log_stochastic_exponential_at(model, l, 0.0)?;
    }
    let k = model.jump_bound;
    let (valid, invalid): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .partition(|&&l| sandwich_bounds(l, k, 1.0).valid);

    struct PathOutcome {
        checked: u64,
        violations: Vec<(f64, f64, f64, f64)>,
        implied_c: f64,
        max_gap: f64,
    }

    let outcomes = map_paths(
        master,
        n_paths,
        |_, seed| -> Result<PathOutcome, CheckError> {
            let t = sample_terminal(model, seed, step)?.stop_time;
            let qv = model.predictable_qv_at(t);
            let mut out = PathOutcome {
                checked: 0,
                violations: Vec::new(),
                implied_c: 0.0,
                max_gap: 0.0,
            };
            for &l in &valid {
                let log_e = log_stochastic_exponential_at(model, l, t)?;
                let b = sandwich_bounds(l, k, qv);
                out.checked += 1;
                let slack = SANDWICH_RELATIVE_TOLERANCE * log_e.abs();
                if b.lower - log_e > slack || log_e - b.upper > slack {
                    out.violations.push((l, b.lower, log_e, b.upper));
                }
                if qv > 0.0 {
                    let r = log_e / (0.5 * l * l * qv);
                    out.implied_c = out.implied_c.max((r - 1.0).abs() / l);
                }
                if log_e != 0.0 {
                    let gap = ((b.upper - log_e).abs()).max((log_e - b.lower).abs()) / log_e.abs();
                    out.max_gap = out.max_gap.max(gap);
                }
            }
            Ok(out)
        },
    );

    let mut report = SandwichReport {
        fraction: 1.0,
        pairs_checked: 0,
        pairs_violated: 0,
        invalid_lambdas: invalid,
        violations: Vec::new(),
        implied_c: 0.0,
        max_relative_gap: 0.0,
    };
    for (index, outcome) in outcomes.into_iter().enumerate() {
        let o = outcome?;
        report.pairs_checked += o.checked;
        report.pairs_violated += o.violations.len() as u64;
        report.implied_c = report.implied_c.max(o.implied_c);
        report.max_relative_gap = report.max_relative_gap.max(o.max_gap);
        for (lambda, lower, log_e, upper) in o.violations {
            if report.violations.len() < MAX_DUMPED_VIOLATIONS {
                let seed = derive_stream(master, index as u64);
                report.violations.push(SandwichViolation {
                    path_index: index as u64,
                    lambda,
                    lower,
                    log_e,
                    upper,
                    path: generate_path(model, seed, step).ok(),
                });
            }
        }
    }
    if report.pairs_checked > 0 {
        report.fraction =
            (report.pairs_checked - report.pairs_violated) as f64 / report.pairs_checked as f64;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaEnvelope {
    pub zeta1_mean: Estimate,
    pub zeta1_max: f64,
    pub zeta2_mean: Estimate,
    pub zeta2_max: f64,
    pub n_used: u64,
    /// Paths with `<M>_inf = 0`, where the ratio is undefined.
    pub n_excluded: u64,
}

/// Per path, the smallest nonnegative `zeta_1, zeta_2` with
/// `l^2/2 <M> (1 - l zeta_1) <= log E(l) <= l^2/2 <M> (1 + l zeta_2)` for
/// every `l` on the grid.
pub fn zeta_condition_check(
    model: &ModelSpec,
    lambdas: &[f64],
    n_paths: u64,
    master: u64,
    step: f64,
) -> Result<ZetaEnvelope, CheckError> {
    model.validate()?;
    if lambdas.is_empty() {
        return Err(CheckError::EmptyGrid);
    }
    for &l in lambdas {
        log_stochastic_exponential_at(model, l, 0.0)?;
    }
    let per_path = map_paths(
        master,
        n_paths,
        |_, seed| -> Result<Option<(f64, f64)>, CheckError> {
            let s = sample_terminal(model, seed, step)?;
            let qv = model.predictable_qv_at(s.stop_time);
            if qv <= 0.0 {
                return Ok(None);
            }
            let (mut z1, mut z2) = (0.0_f64, 0.0_f64);
            for &l in lambdas {
                let l = l.abs();
                let r = log_stochastic_exponential_at(model, l, s.stop_time)? / (0.5 * l * l * qv);
                z1 = z1.max((1.0 - r) / l);
                z2 = z2.max((r - 1.0) / l);
            }
            Ok(Some((z1, z2)))
        },
    );
    let (mut a1, mut a2) = (MomentAccumulator::new(), MomentAccumulator::new());
    let (mut max1, mut max2) = (0.0_f64, 0.0_f64);
    let mut excluded = 0;
    for r in per_path {
        match r? {
            Some((z1, z2)) => {
                a1.push(z1);
                a2.push(z2);
                max1 = max1.max(z1);
                max2 = max2.max(z2);
            }
            None => excluded += 1,
        }
    }
    Ok(ZetaEnvelope {
        zeta1_mean: a1.estimate(),
        zeta1_max: max1,
        zeta2_mean: a2.estimate(),
        zeta2_max: max2,
        n_used: a1.count(),
        n_excluded: excluded,
    })
}
