//! Monte Carlo laboratory for tail asymptotics of stopped martingales with
//! bounded jumps.
//!
//! For a square-integrable martingale `M` with jumps bounded by `K`, stopped
//! at a finite time, the library estimates
//!
//! * `lambda P(sqrt(<M>_inf) > lambda)` and `lambda P(sqrt([M, M]_inf) > lambda)`,
//! * `lambda P(sup_t M_t^- > lambda)`,
//! * the Laplace-side quantity `E(1 - exp(-lambda^2 <M>_inf / 2)) / lambda`,
//!
//! and compares their limits with `sqrt(2/pi) E M_inf`. Alongside it checks
//! the stochastic-exponential sandwich and the discrepancy inequality that
//! the limits rely on.
//!
//! Modules, bottom up: [`rng`] (seeded streams), [`stats`], [`models`]
//! (catalog and samplers), [`quadvar`], [`stochexp`], [`tails`], [`checks`],
//! and [`experiment`] (config-driven runs and their output files).

pub mod checks;
pub mod experiment;
pub mod models;
pub mod quadvar;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod stochexp;
pub mod tails;

pub use checks::{
    bdg_ratio_check, mean_one_density_check, sandwich_check, zeta_condition_check, BdgReport,
    CheckError, MeanOneResult, SandwichReport, ZetaEnvelope,
};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentError, ExperimentReport};
pub use models::{
    analytic_oracle, generate_path, list_models, sample_terminal, ModelError, ModelKind, ModelSpec,
    OracleQuery, OracleValue, PathRecord, TerminalSample,
};
pub use quadvar::{discrepancy, optional_qv, predictable_qv, QvBreakdown};
pub use rng::{derive_stream, RngError, Seed, Stream};
pub use stats::{Estimate, MomentAccumulator};
pub use stochexp::{
    density, log_stochastic_exponential_at, sandwich_bounds, stochastic_exponential, SandwichBound,
    StochExpError,
};
pub use tails::{
    class_d_diagnostic, empirical_tail_curve, laplace_side, sup_neg_tail_curve, tauberian_compare,
    ClassDVerdict, TailCurve, TailError, TailMode, TauberianReport,
};
