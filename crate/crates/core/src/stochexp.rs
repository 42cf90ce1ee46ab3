//! Cumulant process, stochastic exponential and the exponential density.
//!
//! For the catalog the compensator is deterministic, so
//!
//! ```text
//! G_t(l)        = int_0^t int (e^{l z} - 1 - l z) nu(ds, dz)
//! log E_t(l)    = l^2/2 <M^c>_t + G_t(l) + sum_{s <= t} [log(1 + dG_s(l)) - dG_s(l)]
//! z_t(l)        = exp(l M_t - log E_t(l))
//! ```
//!
//! are closed-form functions of elapsed time. Only model E has atoms
//! (`dG = cosh(l) - 1` at every integer time).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{ModelError, ModelKind, ModelSpec, PathRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochExpError {
    #[error("lambda = {lambda} is outside [-{epsilon}, {epsilon}]")]
    LambdaOutOfDomain { lambda: f64, epsilon: f64 },
    #[error("time must be finite and >= 0, got {0}")]
    InvalidTime(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub time: f64,
    /// `dG_t(lambda) >= 0`.
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantValue {
    pub lambda: f64,
    /// Integral against the continuous part of the compensator.
    pub continuous_part: f64,
    pub atoms: Vec<Atom>,
}

impl CumulantValue {
    /// `G_t(lambda)`, atoms included.
    pub fn total(&self) -> f64 {
        self.continuous_part + self.atoms.iter().map(|a| a.jump).sum::<f64>()
    }
}

/// `log(1 + x) - x` for `x >= 0`, using the series below `1e-4`.
pub fn log1p_minus_x(x: f64) -> f64 {
    if x < 1e-4 {
        let x2 = x * x;
        x2 * (-0.5 + x * (1.0 / 3.0 + x * (-0.25 + x * 0.2)))
    } else {
        x.ln_1p() - x
    }
}

/// `sinh(x)/x - 1`, accurate near zero.
fn sinhc_minus_one(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0))
    } else {
        x.sinh() / x - 1.0
    }
}

/// `e^x - 1 - x`, accurate near zero.
fn exp_minus_linear(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x2 / 2.0 * (1.0 + x / 3.0 * (1.0 + x / 4.0 * (1.0 + x / 5.0)))
    } else {
        x.exp_m1() - x
    }
}

fn check_lambda(model: &ModelSpec, lambda: f64) -> Result<(), StochExpError> {
    if !(lambda.is_finite() && lambda.abs() <= model.epsilon) {
        return Err(StochExpError::LambdaOutOfDomain {
            lambda,
            epsilon: model.epsilon,
        });
    }
    Ok(())
}

/// Continuous-compensator part of `G` per unit time.
fn cumulant_rate(model: &ModelSpec, lambda: f64) -> f64 {
    match model.kind {
        ModelKind::CompensatedPoissonUpper => model.jump_rate * exp_minus_linear(lambda),
        // E over z ~ U[-K, K] of e^{lz} - 1 - lz.
        ModelKind::JumpDiffusionTwoSided => {
            model.jump_rate * sinhc_minus_one(lambda * model.jump_bound)
        }
        _ => 0.0,
    }
}

/// Per-atom jump of `G` (model E).
fn atom_jump(lambda: f64) -> f64 {
    // cosh(l) - 1 = 2 sinh^2(l/2), no cancellation.
    2.0 * (0.5 * lambda).sinh().powi(2)
}

pub fn cumulant(model: &ModelSpec, lambda: f64, t: f64) -> Result<CumulantValue, StochExpError> {
    model.validate()?;
    check_lambda(model, lambda)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(StochExpError::InvalidTime(t));
    }
    let jump = atom_jump(lambda);
    let atoms = (1..=model.atoms_up_to(t))
        .map(|n| Atom {
            time: n as f64,
            jump,
        })
        .collect();
    Ok(CumulantValue {
        lambda,
        continuous_part: cumulant_rate(model, lambda) * t,
        atoms,
    })
}

/// `log E_t(lambda)` for a path still running at time `t`.
pub fn log_stochastic_exponential_at(
    model: &ModelSpec,
    lambda: f64,
    t: f64,
) -> Result<f64, StochExpError> {
    check_lambda(model, lambda)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(StochExpError::InvalidTime(t));
    }
    let half_l2 = 0.5 * lambda * lambda;
    let mut log_e = half_l2 * model.continuous_qv_at(t) + cumulant_rate(model, lambda) * t;
    let atoms = model.atoms_up_to(t);
    if atoms > 0 {
        let dg = atom_jump(lambda);
        let n = atoms as f64;
        log_e += n * dg + n * log1p_minus_x(dg);
    }
    Ok(log_e)
}

/// Terminal `log E(lambda)` along a recorded path.
pub fn stochastic_exponential(
    path: &PathRecord,
    model: &ModelSpec,
    lambda: f64,
) -> Result<f64, StochExpError> {
    if path.kind != model.kind {
        return Err(ModelError::KindMismatch {
            path: path.kind,
            model: model.kind,
        }
        .into());
    }
    log_stochastic_exponential_at(model, lambda, path.end_time())
}

/// `z = exp(lambda M - log E)` given the terminal value and elapsed time.
pub fn density_at(model: &ModelSpec, lambda: f64, m: f64, t: f64) -> Result<f64, StochExpError> {
    Ok((lambda * m - log_stochastic_exponential_at(model, lambda, t)?).exp())
}

/// Terminal density along a recorded path.
pub fn density(path: &PathRecord, model: &ModelSpec, lambda: f64) -> Result<f64, StochExpError> {
    let log_e = stochastic_exponential(path, model, lambda)?;
    Ok((lambda * path.terminal_value() - log_e).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichBound {
    pub lower: f64,
    pub upper: f64,
    pub lambda: f64,
    pub k: f64,
    pub qv_pred: f64,
    /// `false` when `lambda` is too large for the lower factor to be positive.
    pub valid: bool,
}

/// `Phi(lambda, K) = 1 - lambda K e^{lambda K}`.
pub fn phi(lambda: f64, k: f64) -> f64 {
    1.0 - lambda * k * (lambda * k).exp()
}

/// Explicit two-sided bound on `log E_inf(lambda)` in terms of `<M>_inf`:
///
/// ```text
/// upper = l^2/2 <M> (1 + (l/3) K e^{lK})
/// lower = l^2/2 <M> (Phi - (l^2/8) K^2 Phi^2)
/// ```
pub fn sandwich_bounds(lambda: f64, k: f64, qv_pred: f64) -> SandwichBound {
    let base = 0.5 * lambda * lambda * qv_pred;
    let upper_factor = 1.0 + lambda / 3.0 * k * (lambda * k).exp();
    let phi = phi(lambda, k);
    let lower_factor = phi - lambda * lambda / 8.0 * k * k * phi * phi;
    SandwichBound {
        lower: base * lower_factor,
        upper: base * upper_factor,
        lambda,
        k,
        qv_pred,
        valid: phi > 0.0 && lower_factor > 0.0,
    }
}
