//! Catalog of stopped martingales with bounded jumps.
//!
//! | letter | kind | jumps | sampler |
//! |---|---|---|---|
//! | A | [`ModelKind::StoppedBrownianUpper`] | none | exact (`tau = a^2 / Z^2`) |
//! | B | [`ModelKind::StoppedBrownianTwoSided`] | none | Euler grid + bridge test |
//! | C | [`ModelKind::CompensatedPoissonUpper`] | +1 at rate rho | exact, event driven |
//! | D | [`ModelKind::JumpDiffusionTwoSided`] | U[-K, K] at rate rho | Euler grid + exact jump times |
//! | E | [`ModelKind::RandomWalkAtomsUpper`] | +-1 at t = 1, 2, ... | exact, bit-parallel |
//!
//! Every catalog model has a deterministic compensator, so `<M>_t` is a
//! closed-form function of elapsed time; see [`ModelSpec::predictable_qv_at`].
//!
//! Model A's `sup M^-` is drawn from its exact marginal law
//! `P(sup M^- > x) = a / (a + x)`, independently of the hitting time. All
//! checks built on it are marginal, so the joint law is never needed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{Seed, Stream};
use crate::stats::KahanSum;

/// Default censoring horizon.
pub const DEFAULT_HORIZON_CAP: f64 = 1e6;
/// Default Euler step for the discretized models.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Event-driven models censor after this many jumps.
pub const MAX_EVENTS_PER_PATH: u64 = 100_000_000;
/// Recorded paths refuse to allocate more grid points than this.
pub const MAX_PATH_POINTS: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("step {step} is too large relative to the barrier distance {distance}")]
    StepTooLarge { step: f64, distance: f64 },
    #[error("step must be positive and at most the horizon cap, got {0}")]
    InvalidStep(f64),
    #[error("recorded path would need about {0} grid points")]
    PathTooLong(u64),
    #[error("query parameter must be positive, got {0}")]
    InvalidQuery(f64),
    #[error("path was generated by model {path} but evaluated against model {model}")]
    KindMismatch { path: ModelKind, model: ModelKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    StoppedBrownianUpper,
    StoppedBrownianTwoSided,
    CompensatedPoissonUpper,
    JumpDiffusionTwoSided,
    RandomWalkAtomsUpper,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::StoppedBrownianUpper,
        ModelKind::StoppedBrownianTwoSided,
        ModelKind::CompensatedPoissonUpper,
        ModelKind::JumpDiffusionTwoSided,
        ModelKind::RandomWalkAtomsUpper,
    ];

    pub fn letter(self) -> char {
        match self {
            ModelKind::StoppedBrownianUpper => 'A',
            ModelKind::StoppedBrownianTwoSided => 'B',
            ModelKind::CompensatedPoissonUpper => 'C',
            ModelKind::JumpDiffusionTwoSided => 'D',
            ModelKind::RandomWalkAtomsUpper => 'E',
        }
    }

    /// Kebab-case name used in config files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::StoppedBrownianUpper => "stopped-brownian-upper",
            ModelKind::StoppedBrownianTwoSided => "stopped-brownian-two-sided",
            ModelKind::CompensatedPoissonUpper => "compensated-poisson-upper",
            ModelKind::JumpDiffusionTwoSided => "jump-diffusion-two-sided",
            ModelKind::RandomWalkAtomsUpper => "random-walk-atoms-upper",
        }
    }

    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            ModelKind::StoppedBrownianUpper | ModelKind::StoppedBrownianTwoSided
        )
    }

    pub fn is_two_sided(self) -> bool {
        matches!(
            self,
            ModelKind::StoppedBrownianTwoSided | ModelKind::JumpDiffusionTwoSided
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    /// Accepts the letter, the kebab-case name, or the CamelCase type name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        ModelKind::ALL
            .into_iter()
            .find(|k| {
                norm == k.letter().to_ascii_lowercase().to_string()
                    || norm == k.name().replace('-', "")
            })
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

/// Full description of one catalog model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Diffusion coefficient of the continuous part.
    pub sigma: f64,
    pub jump_rate: f64,
    /// Uniform bound on `|dM|`.
    pub jump_bound: f64,
    pub barrier_up: f64,
    pub barrier_down: Option<f64>,
    /// Paths still running at this time are censored.
    pub horizon_cap: f64,
    /// Exponential-moment margin: `E exp(eps * M_inf) < inf` holds for this eps.
    /// Cumulant evaluations are restricted to `|lambda| <= epsilon`.
    pub epsilon: f64,
}

impl ModelSpec {
    /// Catalog defaults: A(a=1), B(a=1, b=2), C(a=1, rho=1),
    /// D(sigma=1, rho=2, K=1, a=1, b=2), E(a=1).
    pub fn default_for(kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::StoppedBrownianUpper => ModelSpec::stopped_brownian_upper(1.0),
            ModelKind::StoppedBrownianTwoSided => ModelSpec::stopped_brownian_two_sided(1.0, 2.0),
            ModelKind::CompensatedPoissonUpper => ModelSpec::compensated_poisson_upper(1.0, 1.0),
            ModelKind::JumpDiffusionTwoSided => {
                ModelSpec::jump_diffusion_two_sided(1.0, 2.0, 1.0, 1.0, 2.0)
            }
            ModelKind::RandomWalkAtomsUpper => ModelSpec::random_walk_atoms_upper(1),
        }
    }

    fn base(kind: ModelKind) -> ModelSpec {
        ModelSpec {
            kind,
            sigma: 0.0,
            jump_rate: 0.0,
            jump_bound: 0.0,
            barrier_up: 1.0,
            barrier_down: None,
            horizon_cap: DEFAULT_HORIZON_CAP,
            epsilon: 1.0,
        }
    }

    pub fn stopped_brownian_upper(a: f64) -> ModelSpec {
        ModelSpec {
            sigma: 1.0,
            barrier_up: a,
            ..ModelSpec::base(ModelKind::StoppedBrownianUpper)
        }
    }

    pub fn stopped_brownian_two_sided(a: f64, b: f64) -> ModelSpec {
        ModelSpec {
            sigma: 1.0,
            barrier_up: a,
            barrier_down: Some(b),
            ..ModelSpec::base(ModelKind::StoppedBrownianTwoSided)
        }
    }

    pub fn compensated_poisson_upper(a: f64, rate: f64) -> ModelSpec {
        ModelSpec {
            jump_rate: rate,
            jump_bound: 1.0,
            barrier_up: a,
            ..ModelSpec::base(ModelKind::CompensatedPoissonUpper)
        }
    }

    pub fn jump_diffusion_two_sided(
        sigma: f64,
        rate: f64,
        bound: f64,
        a: f64,
        b: f64,
    ) -> ModelSpec {
        ModelSpec {
            sigma,
            jump_rate: rate,
            jump_bound: bound,
            barrier_up: a,
            barrier_down: Some(b),
            ..ModelSpec::base(ModelKind::JumpDiffusionTwoSided)
        }
    }

    pub fn random_walk_atoms_upper(a: u32) -> ModelSpec {
        ModelSpec {
            jump_bound: 1.0,
            barrier_up: a as f64,
            ..ModelSpec::base(ModelKind::RandomWalkAtomsUpper)
        }
    }

    pub fn with_horizon(mut self, horizon_cap: f64) -> ModelSpec {
        self.horizon_cap = horizon_cap;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> ModelSpec {
        self.sigma = sigma;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> ModelSpec {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        fn bad(name: &'static str, reason: impl Into<String>) -> ModelError {
            ModelError::InvalidParameter {
                name,
                reason: reason.into(),
            }
        }
        let finite_nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(bad(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        finite_nonneg("sigma", self.sigma)?;
        finite_nonneg("jump_rate", self.jump_rate)?;
        finite_nonneg("jump_bound", self.jump_bound)?;
        if !(self.barrier_up.is_finite() && self.barrier_up > 0.0) {
            return Err(bad(
                "barrier_up",
                format!("must be positive, got {}", self.barrier_up),
            ));
        }
        if !(self.horizon_cap.is_finite() && self.horizon_cap > 0.0) {
            return Err(bad(
                "horizon_cap",
                format!("must be positive, got {}", self.horizon_cap),
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(bad(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        match (self.kind.is_two_sided(), self.barrier_down) {
            (true, None) => return Err(bad("barrier_down", "required for two-sided models")),
            (true, Some(b)) if !(b.is_finite() && b > 0.0) => {
                return Err(bad("barrier_down", format!("must be positive, got {b}")))
            }
            (false, Some(_)) => return Err(bad("barrier_down", "only two-sided models take one")),
            _ => {}
        }
        if self.kind.is_continuous() {
            if self.jump_bound != 0.0 || self.jump_rate != 0.0 {
                return Err(bad(
                    "jump_bound",
                    "continuous models have K = 0 and no jumps",
                ));
            }
            if self.sigma <= 0.0 {
                return Err(bad("sigma", "continuous models need sigma > 0"));
            }
        } else if self.jump_bound <= 0.0 {
            return Err(bad("jump_bound", "jump models need K > 0"));
        }
        match self.kind {
            ModelKind::CompensatedPoissonUpper => {
                if self.jump_bound != 1.0 {
                    return Err(bad("jump_bound", "unit jumps: K must be 1"));
                }
                if self.jump_rate <= 0.0 {
                    return Err(bad("jump_rate", "must be positive"));
                }
                if self.sigma != 0.0 {
                    return Err(bad("sigma", "model C has no continuous part"));
                }
            }
            ModelKind::JumpDiffusionTwoSided => {
                if self.jump_rate <= 0.0 {
                    return Err(bad("jump_rate", "must be positive"));
                }
            }
            ModelKind::RandomWalkAtomsUpper => {
                if self.jump_bound != 1.0 {
                    return Err(bad("jump_bound", "unit steps: K must be 1"));
                }
                if self.sigma != 0.0 || self.jump_rate != 0.0 {
                    return Err(bad("sigma", "model E has only unit atoms"));
                }
                if self.barrier_up.fract() != 0.0 || self.barrier_up > u32::MAX as f64 {
                    return Err(bad("barrier_up", "model E needs an integer level"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `<M^c>` accrued per unit time.
    pub fn continuous_qv_rate(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// `int z^2 nu(dz)` per unit time for the quasi-left-continuous models.
    /// Model E's compensator lives on atoms instead; see [`Self::jump_qv_at`].
    pub fn jump_qv_rate(&self) -> f64 {
        match self.kind {
            ModelKind::CompensatedPoissonUpper => self.jump_rate,
            ModelKind::JumpDiffusionTwoSided => self.jump_rate * self.jump_bound.powi(2) / 3.0,
            _ => 0.0,
        }
    }

    /// Number of compensator atoms in `(0, t]` (model E: one per integer time).
    pub fn atoms_up_to(&self, t: f64) -> u64 {
        match self.kind {
            ModelKind::RandomWalkAtomsUpper if t >= 1.0 => t.floor() as u64,
            _ => 0,
        }
    }

    pub fn continuous_qv_at(&self, t: f64) -> f64 {
        self.continuous_qv_rate() * t
    }

    pub fn jump_qv_at(&self, t: f64) -> f64 {
        match self.kind {
            ModelKind::RandomWalkAtomsUpper => self.atoms_up_to(t) as f64,
            _ => self.jump_qv_rate() * t,
        }
    }

    /// `<M>_t` for a path still running at `t`.
    pub fn predictable_qv_at(&self, t: f64) -> f64 {
        self.continuous_qv_at(t) + self.jump_qv_at(t)
    }

    /// Drift removed from the raw jump sum to get `M^d` (`rho * E z` per unit time).
    pub fn compensator_drift(&self) -> f64 {
        match self.kind {
            ModelKind::CompensatedPoissonUpper => self.jump_rate,
            _ => 0.0,
        }
    }

    /// Largest `lambda` for which `{<M>^{1/2} > lambda}` is decided correctly
    /// on censored paths.
    pub fn sqrt_tail_cap(&self) -> f64 {
        self.predictable_qv_at(self.horizon_cap).sqrt()
    }
}

/// Per-path summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalSample {
    /// `M` at the stopping time, or at the cap when censored.
    pub m_inf: f64,
    pub qv_pred: f64,
    /// `[M, M]` with the exact continuous bracket plus the squared jumps.
    pub qv_opt: f64,
    pub sup_neg: f64,
    pub censored: bool,
    /// Stopping time, or the time of censoring.
    pub stop_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// One recorded sample path. Grid points are right-continuous values; jump
/// times are inserted into the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub kind: ModelKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub cont_values: Vec<f64>,
    pub jumps: Vec<Jump>,
    /// `None` when the path was censored.
    pub stop_time: Option<f64>,
    /// Running `sup_t M^-_t`, including pre-jump left limits.
    pub sup_neg: f64,
}

impl PathRecord {
    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn terminal_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn censored(&self) -> bool {
        self.stop_time.is_none()
    }

    /// Largest `|values - (cont_values + M^d)|` over the grid.
    pub fn reconstruction_error(&self, model: &ModelSpec) -> f64 {
        let drift = model.compensator_drift();
        let mut jump_sum = KahanSum::new();
        let mut next = 0;
        let mut worst: f64 = 0.0;
        for ((&t, &v), &c) in self.times.iter().zip(&self.values).zip(&self.cont_values) {
            while next < self.jumps.len() && self.jumps[next].time <= t {
                jump_sum.add(self.jumps[next].size);
                next += 1;
            }
            let rebuilt = c + jump_sum.value() - drift * t;
            worst = worst.max((v - rebuilt).abs());
        }
        worst
    }

    pub fn terminal_sample(&self, model: &ModelSpec) -> TerminalSample {
        let t = self.end_time();
        let jump_sq: KahanSum = self.jumps.iter().map(|j| j.size * j.size).collect();
        TerminalSample {
            m_inf: self.terminal_value(),
            qv_pred: model.predictable_qv_at(t),
            qv_opt: model.continuous_qv_at(t) + jump_sq.value(),
            sup_neg: self.sup_neg,
            censored: self.censored(),
            stop_time: t,
        }
    }
}

trait PathObserver {
    const RECORDS: bool;
    fn grid(&mut self, t: f64, value: f64, cont: f64);
    fn jump(&mut self, t: f64, size: f64);
}

struct Discard;

impl PathObserver for Discard {
    const RECORDS: bool = false;
    #[inline(always)]
    fn grid(&mut self, _: f64, _: f64, _: f64) {}
    #[inline(always)]
    fn jump(&mut self, _: f64, _: f64) {}
}

#[derive(Default)]
struct Recorder {
    times: Vec<f64>,
    values: Vec<f64>,
    cont_values: Vec<f64>,
    jumps: Vec<Jump>,
}

impl PathObserver for Recorder {
    const RECORDS: bool = true;
    fn grid(&mut self, t: f64, value: f64, cont: f64) {
        self.times.push(t);
        self.values.push(value);
        self.cont_values.push(cont);
    }
    fn jump(&mut self, time: f64, size: f64) {
        self.jumps.push(Jump { time, size });
    }
}

impl Recorder {
    fn finish(self, kind: ModelKind, outcome: &Outcome) -> PathRecord {
        PathRecord {
            kind,
            times: self.times,
            values: self.values,
            cont_values: self.cont_values,
            jumps: self.jumps,
            stop_time: outcome.stopped.then_some(outcome.end_time),
            sup_neg: outcome.sup_neg,
        }
    }
}

struct Outcome {
    end_time: f64,
    stopped: bool,
    m_end: f64,
    sup_neg: f64,
    jump_sq: f64,
}

impl Outcome {
    fn into_sample(self, model: &ModelSpec) -> TerminalSample {
        TerminalSample {
            m_inf: self.m_end,
            qv_pred: model.predictable_qv_at(self.end_time),
            qv_opt: model.continuous_qv_at(self.end_time) + self.jump_sq,
            sup_neg: self.sup_neg,
            censored: !self.stopped,
            stop_time: self.end_time,
        }
    }
}

/// Draws one terminal sample. `step` is used only by the discretized
/// models (B, D); the others are sampled exactly.
pub fn sample_terminal(
    model: &ModelSpec,
    seed: Seed,
    step: f64,
) -> Result<TerminalSample, ModelError> {
    model.validate()?;
    let mut stream = Stream::new(seed);
    Ok(match model.kind {
        ModelKind::StoppedBrownianUpper => brownian_upper_exact(model, &mut stream),
        ModelKind::StoppedBrownianTwoSided | ModelKind::JumpDiffusionTwoSided => {
            check_step(model, step)?;
            run_diffusion(model, &mut stream, step, &mut Discard).into_sample(model)
        }
        ModelKind::CompensatedPoissonUpper => {
            run_poisson(model, &mut stream, &mut Discard).into_sample(model)
        }
        ModelKind::RandomWalkAtomsUpper => {
            run_walk(model, &mut stream, &mut Discard).into_sample(model)
        }
    })
}

/// Generates a recorded path. Models with a continuous part use an Euler
/// grid of spacing `step` with exact jump times inserted; the pure-jump
/// models (C, E) record their event skeleton. For B and D this consumes the
/// stream exactly like [`sample_terminal`], so both see the same path; the
/// same holds for C and E.
pub fn generate_path(model: &ModelSpec, seed: Seed, step: f64) -> Result<PathRecord, ModelError> {
    model.validate()?;
    check_step(model, step)?;
    let mut stream = Stream::new(seed);
    let mut rec = Recorder::default();
    let outcome = match model.kind {
        ModelKind::StoppedBrownianUpper => {
            let points = (model.horizon_cap / step).ceil();
            if points > MAX_PATH_POINTS as f64 {
                return Err(ModelError::PathTooLong(points as u64));
            }
            run_diffusion(model, &mut stream, step, &mut rec)
        }
        // Exit times from a strip have exponential tails.
        ModelKind::StoppedBrownianTwoSided | ModelKind::JumpDiffusionTwoSided => {
            run_diffusion(model, &mut stream, step, &mut rec)
        }
        ModelKind::CompensatedPoissonUpper => run_poisson(model, &mut stream, &mut rec),
        ModelKind::RandomWalkAtomsUpper => run_walk(model, &mut stream, &mut rec),
    };
    Ok(rec.finish(model.kind, &outcome))
}

fn check_step(model: &ModelSpec, step: f64) -> Result<(), ModelError> {
    if !(step.is_finite() && step > 0.0 && step <= model.horizon_cap) {
        return Err(ModelError::InvalidStep(step));
    }
    if model.sigma > 0.0 {
        let distance = model
            .barrier_down
            .map_or(model.barrier_up, |b| b.min(model.barrier_up));
        if 2.0 * model.sigma * step.sqrt() > distance {
            return Err(ModelError::StepTooLarge { step, distance });
        }
    }
    Ok(())
}

fn brownian_upper_exact(model: &ModelSpec, s: &mut Stream) -> TerminalSample {
    let a = model.barrier_up;
    let var_rate = model.continuous_qv_rate();
    let z = s.standard_normal();
    // Hitting time of a by sigma * W.
    let tau = (a / z).powi(2) / var_rate;
    // Exact marginal law of sup M^- by inversion of a / (a + x).
    let sup_neg = a / s.uniform_open01() - a;
    if tau <= model.horizon_cap {
        return TerminalSample {
            m_inf: a,
            qv_pred: model.predictable_qv_at(tau),
            qv_opt: model.predictable_qv_at(tau),
            sup_neg,
            censored: false,
            stop_time: tau,
        };
    }
    let t = model.horizon_cap;
    let m_cap = brownian_endpoint_before_hit(a, model.sigma * t.sqrt(), s);
    TerminalSample {
        m_inf: m_cap,
        qv_pred: model.predictable_qv_at(t),
        qv_opt: model.predictable_qv_at(t),
        sup_neg,
        censored: true,
        stop_time: t,
    }
}

/// `sigma W_T` conditioned on `a` not yet hit, by rejection against the
/// unconditioned normal: the killed density is `phi(x) (1 - exp(-2a(a-x)/s^2))`.
fn brownian_endpoint_before_hit(a: f64, scale: f64, s: &mut Stream) -> f64 {
    const MAX_TRIES: u32 = 10_000_000;
    for _ in 0..MAX_TRIES {
        let x = scale * s.standard_normal();
        if x >= a {
            continue;
        }
        let accept = -(-2.0 * a * (a - x) / (scale * scale)).exp_m1();
        if s.uniform01() < accept {
            return x;
        }
    }
    // Meander limit for a << scale.
    a - scale * (-2.0 * s.uniform_open01().ln()).sqrt()
}

/// Bridge test for a continuous increment `x0 -> x1` over a cell with
/// variance `var`. Returns the barrier that was crossed, if any.
#[inline]
fn crossing(
    x0: f64,
    x1: f64,
    upper: f64,
    lower: Option<f64>,
    var: f64,
    s: &mut Stream,
) -> Option<f64> {
    if x1 >= upper {
        return Some(upper);
    }
    if let Some(l) = lower {
        if x1 <= l {
            return Some(l);
        }
    }
    let exponent = 2.0 * (upper - x0) * (upper - x1) / var;
    if exponent < 745.0 && s.uniform01() < (-exponent).exp() {
        return Some(upper);
    }
    if let Some(l) = lower {
        let exponent = 2.0 * (x0 - l) * (x1 - l) / var;
        if exponent < 745.0 && s.uniform01() < (-exponent).exp() {
            return Some(l);
        }
    }
    None
}

/// Euler grid for `sigma W` with exact compound-Poisson jump times inserted.
/// Continuous crossings stop the path exactly at the barrier; jumps may
/// overshoot by at most `K`.
fn run_diffusion<O: PathObserver>(
    model: &ModelSpec,
    s: &mut Stream,
    h: f64,
    obs: &mut O,
) -> Outcome {
    let sigma = model.sigma;
    let var_rate = sigma * sigma;
    let upper = model.barrier_up;
    let lower = model.barrier_down.map(|b| -b);
    let t_max = model.horizon_cap;
    let rate = model.jump_rate;
    let bound = model.jump_bound;

    let (mut t, mut x, mut c) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut sup_neg = 0.0_f64;
    let mut jump_sq = KahanSum::new();
    let mut cell: u64 = 0;
    let mut next_jump = if rate > 0.0 {
        s.standard_exponential() / rate
    } else {
        f64::INFINITY
    };
    obs.grid(0.0, 0.0, 0.0);

    loop {
        let next_grid = ((cell + 1) as f64 * h).min(t_max);
        let t_next = next_grid.min(next_jump);
        let dt = t_next - t;
        if sigma > 0.0 && dt > 0.0 {
            let dw = sigma * dt.sqrt() * s.standard_normal();
            let x_new = x + dw;
            if let Some(level) = crossing(x, x_new, upper, lower, var_rate * dt, s) {
                c += level - x;
                x = level;
                sup_neg = sup_neg.max(-x);
                obs.grid(t_next, x, c);
                return Outcome {
                    end_time: t_next,
                    stopped: true,
                    m_end: x,
                    sup_neg,
                    jump_sq: jump_sq.value(),
                };
            }
            x = x_new;
            c += dw;
        }
        t = t_next;
        let jumped = t == next_jump;
        if jumped {
            let z = bound * (2.0 * s.uniform01() - 1.0);
            sup_neg = sup_neg.max(-x);
            x += z;
            jump_sq.add(z * z);
            obs.jump(t, z);
            next_jump = t + s.standard_exponential() / rate;
        }
        if t == next_grid {
            cell += 1;
        }
        sup_neg = sup_neg.max(-x);
        obs.grid(t, x, c);
        let stopped = jumped && (x >= upper || lower.is_some_and(|l| x <= l));
        if stopped || t >= t_max {
            return Outcome {
                end_time: t,
                stopped,
                m_end: x,
                sup_neg,
                jump_sq: jump_sq.value(),
            };
        }
    }
}

/// Event-driven `N_t - rho t`, stopped at the first jump that lifts it to `a`.
fn run_poisson<O: PathObserver>(model: &ModelSpec, s: &mut Stream, obs: &mut O) -> Outcome {
    let rate = model.jump_rate;
    let a = model.barrier_up;
    let t_max = model.horizon_cap;
    let mut t = 0.0_f64;
    let mut n: u64 = 0;
    let mut sup_neg = 0.0_f64;
    obs.grid(0.0, 0.0, 0.0);
    loop {
        let next = t + s.standard_exponential() / rate;
        if next > t_max || n >= MAX_EVENTS_PER_PATH {
            let end = if next > t_max { t_max } else { t };
            let m = n as f64 - rate * end;
            sup_neg = sup_neg.max(-m);
            if end > t {
                obs.grid(end, m, 0.0);
            }
            return Outcome {
                end_time: end,
                stopped: false,
                m_end: m,
                sup_neg,
                jump_sq: n as f64,
            };
        }
        t = next;
        // Left limit just before the jump is the running minimum candidate.
        sup_neg = sup_neg.max(-(n as f64 - rate * t));
        n += 1;
        let m = n as f64 - rate * t;
        obs.jump(t, 1.0);
        obs.grid(t, m, 0.0);
        if m >= a {
            return Outcome {
                end_time: t,
                stopped: true,
                m_end: m,
                sup_neg,
                jump_sq: n as f64,
            };
        }
    }
}

/// Per-byte summaries of eight +-1 steps (bit set = up step, LSB first):
/// net displacement, maximal prefix sum, minimal prefix sum.
struct ByteTables {
    sum: [i8; 256],
    max_prefix: [i8; 256],
    min_prefix: [i8; 256],
}

const fn build_byte_tables() -> ByteTables {
    let mut sum = [0i8; 256];
    let mut max_prefix = [0i8; 256];
    let mut min_prefix = [0i8; 256];
    let mut b = 0;
    while b < 256 {
        let mut pos: i8 = 0;
        let mut hi: i8 = i8::MIN;
        let mut lo: i8 = i8::MAX;
        let mut i = 0;
        while i < 8 {
            pos += if (b >> i) & 1 == 1 { 1 } else { -1 };
            if pos > hi {
                hi = pos;
            }
            if pos < lo {
                lo = pos;
            }
            i += 1;
        }
        sum[b] = pos;
        max_prefix[b] = hi;
        min_prefix[b] = lo;
        b += 1;
    }
    ByteTables {
        sum,
        max_prefix,
        min_prefix,
    }
}

static BYTE_TABLES: ByteTables = build_byte_tables();

/// Simple random walk at integer times, stopped on reaching the integer
/// level `a`. Steps come from the stream 64 at a time; bytes that cannot
/// reach the level are applied in one table lookup.
fn run_walk<O: PathObserver>(model: &ModelSpec, s: &mut Stream, obs: &mut O) -> Outcome {
    let level = model.barrier_up as i64;
    let cap = (model.horizon_cap.floor() as u64).min(MAX_EVENTS_PER_PATH);
    let tables = &BYTE_TABLES;
    let mut pos: i64 = 0;
    let mut low: i64 = 0;
    let mut n: u64 = 0;
    obs.grid(0.0, 0.0, 0.0);

    let finish = |n: u64, pos: i64, low: i64, stopped: bool| Outcome {
        end_time: n as f64,
        stopped,
        m_end: pos as f64,
        sup_neg: (-low).max(0) as f64,
        jump_sq: n as f64,
    };

    while n < cap {
        let word = s.next_u64();
        for byte_idx in 0..8 {
            if n >= cap {
                return finish(n, pos, low, false);
            }
            let byte = ((word >> (8 * byte_idx)) & 0xFF) as usize;
            let fast =
                !O::RECORDS && cap - n >= 8 && pos + (tables.max_prefix[byte] as i64) < level;
            if fast {
                low = low.min(pos + tables.min_prefix[byte] as i64);
                pos += tables.sum[byte] as i64;
                n += 8;
                continue;
            }
            for bit in 0..8 {
                let step = if (byte >> bit) & 1 == 1 { 1 } else { -1 };
                pos += step;
                n += 1;
                low = low.min(pos);
                obs.jump(n as f64, step as f64);
                obs.grid(n as f64, pos as f64, 0.0);
                if pos >= level {
                    return finish(n, pos, low, true);
                }
                if n >= cap {
                    return finish(n, pos, low, false);
                }
            }
        }
    }
    finish(n, pos, low, false)
}

/// Closed-form quantities available for a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleQuery {
    /// `P(<M>_inf^{1/2} > lambda)`.
    QvTail(f64),
    /// `P(sup_t M^-_t > lambda)`.
    SupNegTail(f64),
    /// `E exp(-lambda^2 <M>_inf / 2)`.
    Laplace(f64),
    /// `E M_inf`.
    MeanTerminal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleValue {
    Value(f64),
    Unavailable,
}

impl OracleValue {
    pub fn value(self) -> Option<f64> {
        match self {
            OracleValue::Value(v) => Some(v),
            OracleValue::Unavailable => None,
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn analytic_oracle(model: &ModelSpec, query: OracleQuery) -> Result<OracleValue, ModelError> {
    use OracleQuery::*;
    use OracleValue::*;
    if let QvTail(l) | SupNegTail(l) | Laplace(l) = query {
        if !(l.is_finite() && l > 0.0) {
            return Err(ModelError::InvalidQuery(l));
        }
    }
    let a = model.barrier_up;
    Ok(match (model.kind, query) {
        // 2 Phi(a / lambda) - 1, written with erf to keep precision for small arguments.
        (ModelKind::StoppedBrownianUpper, QvTail(l)) => {
            Value(libm::erf(a / (l * std::f64::consts::SQRT_2)))
        }
        (ModelKind::StoppedBrownianUpper, SupNegTail(l)) => Value(a / (a + l)),
        (ModelKind::StoppedBrownianUpper, Laplace(l)) => Value((-a * l).exp()),
        (ModelKind::StoppedBrownianUpper, MeanTerminal) => Value(a),
        (ModelKind::StoppedBrownianTwoSided, SupNegTail(l)) => {
            let b = model.barrier_down.unwrap_or(f64::INFINITY);
            Value(if l >= b { 0.0 } else { a / (a + l) })
        }
        (ModelKind::StoppedBrownianTwoSided, MeanTerminal) => Value(0.0),
        _ => Unavailable,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSchema {
    pub key: &'static str,
    pub constraint: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub letter: char,
    pub name: &'static str,
    pub description: &'static str,
    pub parameters: Vec<ParamSchema>,
    pub oracles: &'static str,
    pub defaults: ModelSpec,
}

const fn p(key: &'static str, constraint: &'static str) -> ParamSchema {
    ParamSchema { key, constraint }
}

/// Static catalog metadata.
pub fn list_models() -> Vec<ModelInfo> {
    let common = [
        p("horizon_cap", "T_max > 0 (default 1e6)"),
        p("epsilon", "eps > 0 (default 1)"),
    ];
    ModelKind::ALL
        .into_iter()
        .map(|kind| {
            let (description, mut parameters, oracles) = match kind {
                ModelKind::StoppedBrownianUpper => (
                    "sigma*W stopped on first hitting a; K = 0",
                    vec![
                        p("sigma", "sigma > 0"),
                        p("barrier_up", "a > 0"),
                        p("jump_bound", "K = 0"),
                    ],
                    "qv_tail, supneg_tail, laplace, mean_terminal",
                ),
                ModelKind::StoppedBrownianTwoSided => (
                    "sigma*W stopped on hitting a or -b; bounded, class D",
                    vec![
                        p("sigma", "sigma > 0"),
                        p("barrier_up", "a > 0"),
                        p("barrier_down", "b > 0"),
                        p("jump_bound", "K = 0"),
                    ],
                    "supneg_tail, mean_terminal",
                ),
                ModelKind::CompensatedPoissonUpper => (
                    "N_t - rho*t stopped at the first jump reaching a; unit jumps",
                    vec![
                        p("jump_rate", "rho > 0"),
                        p("barrier_up", "a > 0"),
                        p("jump_bound", "K = 1"),
                    ],
                    "brute-force",
                ),
                ModelKind::JumpDiffusionTwoSided => (
                    "sigma*W plus U[-K,K] jumps at rate rho, stopped outside (-b, a)",
                    vec![
                        p("sigma", "sigma >= 0"),
                        p("jump_rate", "rho > 0"),
                        p("jump_bound", "K > 0"),
                        p("barrier_up", "a > 0"),
                        p("barrier_down", "b > 0"),
                    ],
                    "brute-force",
                ),
                ModelKind::RandomWalkAtomsUpper => (
                    "+-1 steps at t = 1, 2, ... stopped on reaching integer a",
                    vec![p("barrier_up", "integer a >= 1"), p("jump_bound", "K = 1")],
                    "brute-force",
                ),
            };
            parameters.extend(common.iter().cloned());
            ModelInfo {
                letter: kind.letter(),
                name: kind.name(),
                description,
                parameters,
                oracles,
                defaults: ModelSpec::default_for(kind),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn terminal(model: &ModelSpec, i: u64) -> TerminalSample {
        sample_terminal(model, derive_stream(2024, i), DEFAULT_STEP).unwrap()
    }

    #[test]
    fn kinds_parse_from_any_spelling() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(k.letter().to_string().parse::<ModelKind>().unwrap(), k);
            assert_eq!(format!("{k:?}").parse::<ModelKind>().unwrap(), k);
        }
        assert!("Z".parse::<ModelKind>().is_err());
    }

    #[test]
    fn defaults_validate_and_k_zero_iff_continuous() {
        for k in ModelKind::ALL {
            let m = ModelSpec::default_for(k);
            m.validate().unwrap();
            assert_eq!(m.jump_bound == 0.0, k.is_continuous());
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut m = ModelSpec::stopped_brownian_upper(1.0);
        m.jump_bound = 0.5;
        assert!(m.validate().is_err());
        assert!(ModelSpec::stopped_brownian_upper(-1.0).validate().is_err());
        let mut c = ModelSpec::compensated_poisson_upper(1.0, 1.0);
        c.jump_bound = 2.0;
        assert!(c.validate().is_err());
        let mut d = ModelSpec::default_for(ModelKind::JumpDiffusionTwoSided);
        d.barrier_down = None;
        assert!(d.validate().is_err());
        let mut e = ModelSpec::random_walk_atoms_upper(2);
        e.barrier_up = 1.5;
        assert!(e.validate().is_err());
        assert!(ModelSpec::default_for(ModelKind::StoppedBrownianTwoSided)
            .with_horizon(f64::NAN)
            .validate()
            .is_err());
    }

    #[test]
    fn model_a_terminal_value_is_barrier() {
        let m = ModelSpec::stopped_brownian_upper(1.0);
        for i in 0..10_000 {
            let s = terminal(&m, i);
            if !s.censored {
                assert_eq!(s.m_inf, 1.0);
            }
            assert_eq!(s.qv_pred, s.qv_opt);
            assert!(s.sup_neg >= 0.0);
        }
    }

    #[test]
    fn model_a_censored_endpoint_below_barrier() {
        let m = ModelSpec::stopped_brownian_upper(1.0).with_horizon(4.0);
        let mut censored = 0;
        for i in 0..5_000 {
            let s = terminal(&m, i);
            if s.censored {
                censored += 1;
                assert!(s.m_inf < 1.0);
                assert_eq!(s.stop_time, 4.0);
                assert_eq!(s.qv_pred, 4.0);
            }
        }
        // P(tau > 4) = 2 Phi(1/2) - 1 = 0.3829.
        let frac = censored as f64 / 5_000.0;
        assert!((frac - 0.3829).abs() < 0.03, "censored fraction {frac}");
    }

    #[test]
    fn model_e_stops_exactly_at_level() {
        let m = ModelSpec::random_walk_atoms_upper(2);
        for i in 0..20_000 {
            let s = terminal(&m, i);
            if !s.censored {
                assert_eq!(s.m_inf, 2.0);
            }
            assert_eq!(s.qv_pred, s.qv_opt);
            assert_eq!(s.qv_pred, s.stop_time);
            assert_eq!(s.sup_neg.fract(), 0.0);
        }
    }

    #[test]
    fn model_e_terminal_and_path_modes_agree() {
        let m = ModelSpec::random_walk_atoms_upper(3).with_horizon(5_000.0);
        for i in 0..300 {
            let seed = derive_stream(5, i);
            let fast = sample_terminal(&m, seed, 1.0).unwrap();
            let path = generate_path(&m, seed, 1.0).unwrap();
            assert_eq!(fast, path.terminal_sample(&m), "path {i}");
        }
    }

    #[test]
    fn model_e_path_is_integer_valued_at_integer_times() {
        let m = ModelSpec::random_walk_atoms_upper(2).with_horizon(1_000.0);
        let p = generate_path(&m, derive_stream(9, 1), 1.0).unwrap();
        for (&t, &v) in p.times.iter().zip(&p.values) {
            assert_eq!(t.fract(), 0.0);
            assert_eq!(v.fract(), 0.0);
        }
        for j in &p.jumps {
            assert_eq!(j.time.fract(), 0.0);
            assert_eq!(j.size.abs(), 1.0);
        }
    }

    #[test]
    fn model_c_qv_identities() {
        let m = ModelSpec::compensated_poisson_upper(1.0, 1.5);
        for i in 0..5_000 {
            let s = terminal(&m, i);
            assert_eq!(s.qv_opt.fract(), 0.0);
            assert!(s.qv_opt >= 0.0);
            assert_eq!(s.qv_pred, 1.5 * s.stop_time);
            if !s.censored {
                assert!(s.m_inf >= 1.0 && s.m_inf < 2.0);
            }
        }
    }

    #[test]
    fn model_c_terminal_and_path_modes_agree() {
        let m = ModelSpec::compensated_poisson_upper(1.0, 1.0).with_horizon(10_000.0);
        for i in 0..300 {
            let seed = derive_stream(6, i);
            let fast = sample_terminal(&m, seed, 0.01).unwrap();
            let path = generate_path(&m, seed, 0.01).unwrap();
            assert_eq!(fast, path.terminal_sample(&m));
            assert!(path.reconstruction_error(&m) <= 1e-12 * path.times.len() as f64);
        }
    }

    #[test]
    fn two_sided_models_stay_bounded() {
        for m in [
            ModelSpec::default_for(ModelKind::StoppedBrownianTwoSided),
            ModelSpec::default_for(ModelKind::JumpDiffusionTwoSided),
        ] {
            let (a, b, k) = (m.barrier_up, m.barrier_down.unwrap(), m.jump_bound);
            for i in 0..300 {
                let seed = derive_stream(7, i);
                let path = generate_path(&m, seed, 1e-3).unwrap();
                for &v in &path.values {
                    assert!(v >= -b - k && v <= a + k, "value {v}");
                }
                for j in &path.jumps {
                    assert!(j.size.abs() <= k);
                }
                assert!(path.reconstruction_error(&m) <= 1e-12 * path.times.len() as f64);
                let fast = sample_terminal(&m, seed, 1e-3).unwrap();
                assert_eq!(fast, path.terminal_sample(&m));
            }
        }
    }

    #[test]
    fn model_d_jump_count_mean() {
        // Poisson count over [0, 3] at rate 2 has mean 6 and variance 6.
        let m = ModelSpec::jump_diffusion_two_sided(1.0, 2.0, 1.0, 1e9, 1e9).with_horizon(3.0);
        let n = 20_000;
        let mut total = 0usize;
        for i in 0..n {
            total += generate_path(&m, derive_stream(8, i), 0.05)
                .unwrap()
                .jumps
                .len();
        }
        let mean = total as f64 / n as f64;
        let se = (6.0 / n as f64).sqrt();
        assert!((mean - 6.0).abs() < 3.0 * se, "mean jump count {mean}");
    }

    #[test]
    fn path_step_errors() {
        let m = ModelSpec::stopped_brownian_upper(0.1).with_horizon(10.0);
        assert!(matches!(
            generate_path(&m, derive_stream(1, 1), 0.5),
            Err(ModelError::StepTooLarge { .. })
        ));
        assert!(matches!(
            generate_path(&m, derive_stream(1, 1), 0.0),
            Err(ModelError::InvalidStep(_))
        ));
        assert!(matches!(
            generate_path(&m, derive_stream(1, 1), 20.0),
            Err(ModelError::InvalidStep(_))
        ));
        let long = ModelSpec::stopped_brownian_upper(1.0);
        assert!(matches!(
            generate_path(&long, derive_stream(1, 1), 1e-3),
            Err(ModelError::PathTooLong(_))
        ));
    }

    #[test]
    fn oracle_values() {
        let a = ModelSpec::stopped_brownian_upper(1.0);
        let q = |query| analytic_oracle(&a, query).unwrap().value().unwrap();
        assert!((10.0 * q(OracleQuery::QvTail(10.0)) - 0.7966).abs() < 5e-5);
        assert!((99.0 * q(OracleQuery::SupNegTail(99.0)) - 0.99).abs() < 1e-12);
        assert!((q(OracleQuery::Laplace(0.1)) - 0.904837).abs() < 5e-7);
        assert_eq!(q(OracleQuery::MeanTerminal), 1.0);

        let b = ModelSpec::stopped_brownian_two_sided(1.0, 2.0);
        assert_eq!(
            analytic_oracle(&b, OracleQuery::SupNegTail(2.5)).unwrap(),
            OracleValue::Value(0.0)
        );
        assert_eq!(
            analytic_oracle(&b, OracleQuery::MeanTerminal).unwrap(),
            OracleValue::Value(0.0)
        );
        for k in [
            ModelKind::CompensatedPoissonUpper,
            ModelKind::JumpDiffusionTwoSided,
            ModelKind::RandomWalkAtomsUpper,
        ] {
            let m = ModelSpec::default_for(k);
            assert_eq!(
                analytic_oracle(&m, OracleQuery::QvTail(3.0)).unwrap(),
                OracleValue::Unavailable
            );
        }
        assert!(analytic_oracle(&a, OracleQuery::Laplace(0.0)).is_err());
    }

    #[test]
    fn oracle_qv_tail_matches_normal_cdf_form() {
        let a = ModelSpec::stopped_brownian_upper(1.5);
        for l in [0.5, 2.0, 10.0, 300.0] {
            let v = analytic_oracle(&a, OracleQuery::QvTail(l))
                .unwrap()
                .value()
                .unwrap();
            assert!((v - (2.0 * normal_cdf(1.5 / l) - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn catalog_lists_five_models() {
        let cat = list_models();
        assert_eq!(cat.len(), 5);
        assert!(cat.iter().all(|m| !m.oracles.is_empty()));
        assert!(cat
            .iter()
            .all(|m| m.parameters.iter().any(|p| p.key == "jump_bound")));
    }
}
