//! Predictable and optional quadratic variation along recorded paths, and
//! the purely discontinuous discrepancy `L = [M, M] - <M>`.
//!
//! The predictable bracket always comes from the model's closed-form
//! compensator. For `L` the continuous contributions are taken as exactly
//! cancelling, so `L` is driven by the jumps alone.

use serde::{Deserialize, Serialize};

use crate::models::{ModelError, ModelKind, ModelSpec, PathRecord};
use crate::stats::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictableQv {
    /// `<M^c>`.
    pub continuous: f64,
    /// `int int z^2 nu(ds, dz)`.
    pub jumps: f64,
}

impl PredictableQv {
    pub fn total(&self) -> f64 {
        self.continuous + self.jumps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OptionalQv {
    /// Realized variance of the continuous component on the grid.
    pub continuous: f64,
    /// Sum of squared jumps.
    pub jumps: f64,
}

impl OptionalQv {
    pub fn total(&self) -> f64 {
        self.continuous + self.jumps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QvBreakdown {
    pub qv_cont: f64,
    pub qv_jump_pred: f64,
    pub qv_opt_cont: f64,
    pub qv_jump_opt: f64,
}

impl QvBreakdown {
    pub fn qv_pred(&self) -> f64 {
        self.qv_cont + self.qv_jump_pred
    }

    pub fn qv_opt(&self) -> f64 {
        self.qv_opt_cont + self.qv_jump_opt
    }
}

fn check_kind(path: &PathRecord, model: &ModelSpec) -> Result<(), ModelError> {
    if path.kind != model.kind {
        return Err(ModelError::KindMismatch {
            path: path.kind,
            model: model.kind,
        });
    }
    Ok(())
}

/// `<M>` at the end of the path, from the compensator.
pub fn predictable_qv(path: &PathRecord, model: &ModelSpec) -> Result<PredictableQv, ModelError> {
    check_kind(path, model)?;
    let t = path.end_time();
    Ok(PredictableQv {
        continuous: model.continuous_qv_at(t),
        jumps: model.jump_qv_at(t),
    })
}

/// `[M, M]` at the end of the path, realized on the grid.
pub fn optional_qv(path: &PathRecord) -> OptionalQv {
    let continuous: KahanSum = path
        .cont_values
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .collect();
    let jumps: KahanSum = path.jumps.iter().map(|j| j.size * j.size).collect();
    OptionalQv {
        continuous: continuous.value(),
        jumps: jumps.value(),
    }
}

pub fn breakdown(path: &PathRecord, model: &ModelSpec) -> Result<QvBreakdown, ModelError> {
    let pred = predictable_qv(path, model)?;
    let opt = optional_qv(path);
    Ok(QvBreakdown {
        qv_cont: pred.continuous,
        qv_jump_pred: pred.jumps,
        qv_opt_cont: opt.continuous,
        qv_jump_opt: opt.jumps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    /// `L` at the end of the path.
    pub terminal: f64,
    /// `sup_t |L_t|` over the path.
    pub sup_abs: f64,
}

/// Jump compensator `<M^d>` just before time `t`.
fn jump_compensator_left(model: &ModelSpec, t: f64) -> f64 {
    match model.kind {
        ModelKind::RandomWalkAtomsUpper => {
            let strictly_before = if t.fract() == 0.0 { t - 1.0 } else { t.floor() };
            strictly_before.max(0.0)
        }
        _ => model.jump_qv_at(t),
    }
}

/// Tracks `L = sum (dM)^2 - <M^d>` on the jump skeleton. Between jumps `L`
/// is monotone, so its extremes sit at left and right limits of jump times
/// and at the end of the path.
pub fn discrepancy(path: &PathRecord, model: &ModelSpec) -> Result<Discrepancy, ModelError> {
    check_kind(path, model)?;
    let mut squares = KahanSum::new();
    let mut sup_abs: f64 = 0.0;
    for j in &path.jumps {
        let before = squares.value() - jump_compensator_left(model, j.time);
        squares.add(j.size * j.size);
        let after = squares.value() - model.jump_qv_at(j.time);
        sup_abs = sup_abs.max(before.abs()).max(after.abs());
    }
    let terminal = squares.value() - model.jump_qv_at(path.end_time());
    sup_abs = sup_abs.max(terminal.abs());
    Ok(Discrepancy { terminal, sup_abs })
}

/// `<L>_t = int int z^4 nu(ds, dz) - sum_s (int z^2 nu({s}, dz))^2` for a
/// path still running at `t`.
pub fn discrepancy_bracket(model: &ModelSpec, t: f64) -> f64 {
    match model.kind {
        ModelKind::CompensatedPoissonUpper => model.jump_rate * t,
        ModelKind::JumpDiffusionTwoSided => model.jump_rate * model.jump_bound.powi(4) / 5.0 * t,
        // Each atom: z^4 = 1 integrates to 1, minus (z^2 integrated = 1)^2.
        ModelKind::RandomWalkAtomsUpper => 0.0,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{generate_path, Jump};
    use crate::rng::derive_stream;

    fn empty_path(kind: ModelKind) -> PathRecord {
        PathRecord {
            kind,
            times: vec![0.0, 1.0, 2.0],
            values: vec![0.0; 3],
            cont_values: vec![0.0; 3],
            jumps: vec![],
            stop_time: None,
            sup_neg: 0.0,
        }
    }

    #[test]
    fn zero_increments_give_zero() {
        let opt = optional_qv(&empty_path(ModelKind::StoppedBrownianUpper));
        assert_eq!(opt.total(), 0.0);
    }

    #[test]
    fn model_d_predictable_closed_form() {
        let m = ModelSpec::jump_diffusion_two_sided(1.0, 2.0, 1.0, 1.0, 2.0);
        let mut p = empty_path(ModelKind::JumpDiffusionTwoSided);
        p.times = vec![0.0, 3.0];
        p.values = vec![0.0, 0.0];
        p.cont_values = vec![0.0, 0.0];
        let q = predictable_qv(&p, &m).unwrap();
        assert!((q.total() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn model_e_seven_steps() {
        let m = ModelSpec::random_walk_atoms_upper(1);
        let mut p = empty_path(ModelKind::RandomWalkAtomsUpper);
        p.times = (0..=7).map(f64::from).collect();
        p.values = vec![0.0, -1.0, -2.0, -1.0, 0.0, -1.0, 0.0, 1.0];
        p.cont_values = vec![0.0; 8];
        p.jumps = p
            .values
            .windows(2)
            .enumerate()
            .map(|(i, w)| Jump {
                time: (i + 1) as f64,
                size: w[1] - w[0],
            })
            .collect();
        assert_eq!(predictable_qv(&p, &m).unwrap().total(), 7.0);
        assert_eq!(optional_qv(&p).total(), 7.0);
        let d = discrepancy(&p, &m).unwrap();
        assert_eq!(d.terminal, 0.0);
        assert_eq!(d.sup_abs, 0.0);
    }

    #[test]
    fn mismatched_model_rejected() {
        let p = empty_path(ModelKind::RandomWalkAtomsUpper);
        let m = ModelSpec::default_for(ModelKind::CompensatedPoissonUpper);
        assert!(predictable_qv(&p, &m).is_err());
        assert!(discrepancy(&p, &m).is_err());
    }

    #[test]
    fn model_c_discrepancy_is_the_martingale() {
        let m = ModelSpec::compensated_poisson_upper(1.0, 1.0).with_horizon(500.0);
        for i in 0..500 {
            let p = generate_path(&m, derive_stream(3, i), 0.01).unwrap();
            let d = discrepancy(&p, &m).unwrap();
            assert!((d.terminal - p.terminal_value()).abs() < 1e-9);
            // sup |M| over the skeleton: post-jump values and pre-jump left limits.
            let mut sup_m: f64 = p.values.iter().fold(0.0, |acc, v| acc.max(v.abs()));
            for (k, j) in p.jumps.iter().enumerate() {
                sup_m = sup_m.max((k as f64 - j.time).abs());
            }
            assert!(
                (d.sup_abs - sup_m).abs() < 1e-9,
                "{} vs {}",
                d.sup_abs,
                sup_m
            );
        }
    }

    #[test]
    fn model_e_discrepancy_vanishes_pathwise() {
        let m = ModelSpec::random_walk_atoms_upper(3).with_horizon(10_000.0);
        for i in 0..300 {
            let p = generate_path(&m, derive_stream(4, i), 1.0).unwrap();
            let d = discrepancy(&p, &m).unwrap();
            assert_eq!(d.terminal, 0.0);
            assert_eq!(d.sup_abs, 0.0);
            let b = breakdown(&p, &m).unwrap();
            assert_eq!(b.qv_pred(), b.qv_opt());
        }
    }

    #[test]
    fn bracket_of_l_dominated_by_k2_bracket_of_m() {
        for kind in [
            ModelKind::CompensatedPoissonUpper,
            ModelKind::JumpDiffusionTwoSided,
            ModelKind::RandomWalkAtomsUpper,
        ] {
            let m = ModelSpec::default_for(kind);
            for t in [0.5, 1.0, 10.0, 1000.0] {
                let k2 = m.jump_bound.powi(2);
                assert!(discrepancy_bracket(&m, t) <= k2 * m.predictable_qv_at(t));
            }
        }
        let c = ModelSpec::compensated_poisson_upper(1.0, 1.0);
        assert_eq!(discrepancy_bracket(&c, 10.0), c.predictable_qv_at(10.0));
    }

    #[test]
    fn realized_variance_of_brownian_motion() {
        // Unstopped on [0, 1]: Var(sum dW^2) = 2h, so the RMS error is sqrt(2h).
        let m = ModelSpec::stopped_brownian_upper(100.0).with_horizon(1.0);
        let h = 1e-3;
        let n = 1000;
        let mse: f64 = (0..n)
            .map(|i| {
                let p = generate_path(&m, derive_stream(10, i), h).unwrap();
                let b = breakdown(&p, &m).unwrap();
                (b.qv_opt() - b.qv_pred()).powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let rms = mse.sqrt();
        assert!(
            (rms - (2.0 * h).sqrt()).abs() < 0.15 * (2.0 * h).sqrt(),
            "rms {rms}"
        );
    }
}
