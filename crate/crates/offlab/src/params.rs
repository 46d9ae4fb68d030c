//! Model parameters and the Sharpe estimation-noise scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{cast, Real};

/// Default trading-day convention.
pub const DEFAULT_DAYS_PER_YEAR: u32 = 252;

/// Parameters of the overfitting model.
///
/// * `sr_true` — annualized Sharpe ratio of the generating process,
/// * `theta` — annualized Sharpe threshold the committee requires,
/// * `f` — fraction of slices whose sign a tweak flips,
/// * `t_years` — backtest length in years.
///
/// The drift and volatility of the underlying PnL process enter only through
/// their ratio `sr_true`, so they are not stored here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<F> {
    pub sr_true: F,
    pub theta: F,
    pub f: F,
    pub t_years: F,
    pub days_per_year: u32,
    /// Keep the `SR_daily^2 / 2` term in the noise scale. The term is
    /// negligible at daily Sharpe magnitudes but retained by default for
    /// fidelity to the full formula.
    pub include_sr_correction: bool,
}

impl<F: Real> ModelParams<F> {
    pub fn new(sr_true: F, theta: F, f: F, t_years: F) -> Self {
        ModelParams {
            sr_true,
            theta,
            f,
            t_years,
            days_per_year: DEFAULT_DAYS_PER_YEAR,
            include_sr_correction: true,
        }
    }

    pub fn with_days_per_year(mut self, days: u32) -> Self {
        self.days_per_year = days;
        self
    }

    pub fn with_sr_correction(mut self, on: bool) -> Self {
        self.include_sr_correction = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sr_true.is_finite() {
            return Err(Error::invalid("sr_true", "must be finite", self.sr_true));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite", self.theta));
        }
        if !(self.f >= F::zero() && self.f <= F::one()) {
            return Err(Error::invalid("f", "must lie in [0, 1]", self.f));
        }
        if !(self.t_years > F::zero()) || !self.t_years.is_finite() {
            return Err(Error::invalid(
                "t_years",
                "must be a positive finite number",
                self.t_years,
            ));
        }
        if self.days_per_year < 1 {
            return Err(Error::invalid(
                "days_per_year",
                "must be at least 1",
                self.days_per_year,
            ));
        }
        Ok(())
    }

    /// Daily-scale true Sharpe, `sr_true / sqrt(days_per_year)`.
    pub fn sr_daily(&self) -> F {
        self.sr_true / cast::<F>(f64::from(self.days_per_year)).sqrt()
    }

    /// Annualized Sharpe of the deployed strategy after one tweak.
    pub fn tweaked_out_of_sample_sr(&self) -> F {
        (F::one() - cast::<F>(2.0) * self.f) * self.sr_true
    }
}

/// Standard deviation of Sharpe estimates implied by the backtest length.
///
/// `sigma_tot` is the noise on the full-sample estimate; a slice covering
/// 1/N of the sample carries `sqrt(N)` times that noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpeNoise<F> {
    pub sigma_tot: F,
}

impl<F: Real> SharpeNoise<F> {
    /// Per-slice standard deviation for an N-bucket decomposition.
    pub fn sigma_slice(&self, n_buckets: usize) -> F {
        self.sigma_slice_sq(n_buckets).sqrt()
    }

    /// `N * sigma_tot^2`, exact as a product.
    pub fn sigma_slice_sq(&self, n_buckets: usize) -> F {
        cast::<F>(n_buckets as f64) * self.sigma_tot * self.sigma_tot
    }
}

/// Noise scale of the full-sample Sharpe estimate:
/// `sigma_tot^2 = (1 + sr_daily^2 / 2) / t_years`, with the correction term
/// dropped when `include_sr_correction` is off.
pub fn sharpe_noise_scale<F: Real>(params: &ModelParams<F>) -> Result<SharpeNoise<F>> {
    params.validate()?;
    let correction = if params.include_sr_correction {
        let sr_daily = params.sr_daily();
        sr_daily * sr_daily * cast::<F>(0.5)
    } else {
        F::zero()
    };
    let variance = (F::one() + correction) / params.t_years;
    Ok(SharpeNoise {
        sigma_tot: variance.sqrt(),
    })
}
