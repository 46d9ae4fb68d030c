//! Quantifying in-sample backtest overfitting.
//!
//! A strategy with true annualized Sharpe `sr_true` is backtested over
//! `t_years`; the realized Sharpe estimate is noisy, and a researcher only
//! pitches realizations that clear a committee threshold `theta`. Failing
//! backtests get "improved" by flipping the predictor sign on a random
//! fraction `f` of N PnL slices — a tweak that re-rolls the in-sample
//! Sharpe while degrading the deployed one to `(1-2f) * sr_true` — and the
//! improvements repeat until the backtest clears.
//!
//! The crate evaluates this model twice over and checks the two routes
//! against each other:
//!
//! * closed forms and adaptive quadrature ([`overfit_report`], the
//!   conditioned tweak density [`TweakDensity`]): acceptance probabilities,
//!   expected in- and out-of-sample Sharpes, and the overfitting factor
//!   `off = e_in / e_out` by which an in-sample Sharpe should be
//!   discounted;
//! * a Monte Carlo engine ([`mc`]) that simulates the slicing, flipping and
//!   researcher policies brute-force, path by path, with counter-based RNG
//!   substreams so ensembles are bit-reproducible at any worker count.
//!
//! [`experiments`] sweeps the closed forms over parameter grids and hosts
//! the MC-vs-analytic verification harness.
//!
//! The numeric core is generic over the scalar type via [`Real`]; the
//! aliases at the crate root pin the common `f64` case.

// `!(x > 0)` style comparisons are deliberate: they reject NaN along with
// the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod experiments;
pub mod mc;
pub mod normal;
pub mod params;
pub mod quad;
pub mod real;
pub mod report;

pub use density::{rho_pdf, rho_tail_mean, rho_tail_prob, TailEstimate, TweakDensity, TAIL_FLOOR};
pub use error::{Error, Result};
pub use experiments::{
    grid_evaluate, mc_vs_analytic, ComparisonReport, GridAxis, GridPoint, GridResult, GridSpec,
    McOverlay, MetricComparison, RunMetadata, SweepParam,
};
pub use mc::{
    choose_flips_maximal, choose_flips_random, flip_count, realized_sharpe, run_one_off,
    run_until_clear, sample_slice_sharpes_gaussian, simulate_daily_pnl, slice_sharpes, Estimate,
    MaximalFlips, McResult, PathConfig, SampleReal, SamplingMode, SliceScheme, SliceSet,
    DEFAULT_MAX_ATTEMPTS,
};
pub use normal::{truncated_mean_above, Sides, TruncatedMean};
pub use params::{sharpe_noise_scale, ModelParams, SharpeNoise, DEFAULT_DAYS_PER_YEAR};
pub use real::Real;
pub use report::{min_backtest_years, overfit_report, prob_clear, OverfitReport};

/// Concrete `f64` aliases for the common case.
pub type Params = ModelParams<f64>;
pub type Noise = SharpeNoise<f64>;
pub type Report = OverfitReport<f64>;
pub type Density = TweakDensity<f64>;
pub type SimConfig = PathConfig<f64>;
