//! Closed-form overfitting report.
//!
//! The expected in-sample Sharpe of the strategy eventually presented to the
//! committee mixes two branches: the original realization cleared the
//! threshold (truncated-normal mean above `theta`), or it failed and was
//! tweaked until it cleared (conditional tail mean of the tweaked density).
//! The expected out-of-sample Sharpe applies the same mixture to `sr_true`
//! and `(1-2f) sr_true`. Their ratio is the overfitting factor: the number
//! the in-sample PnL should be discounted by.

use serde::Serialize;

use crate::density::TweakDensity;
use crate::error::{Error, Result};
use crate::normal::{self, truncated_mean_above, Sides};
use crate::params::{sharpe_noise_scale, ModelParams};
use crate::real::{cast, Real};

/// All closed-form outputs for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverfitReport<F> {
    /// `p(SR > theta)` under the estimation noise.
    pub p_clear: F,
    /// `E[SR | SR > theta]`.
    pub e_sr_given_clear: F,
    /// `p(SR_m > theta | SR < theta)` — probability of one-off overfitting.
    pub poof: F,
    /// `E[SR_m | SR_m > theta, SR < theta]`.
    pub e_srm_given_accept: F,
    /// Expected in-sample Sharpe of the accepted strategy.
    pub e_in: F,
    /// Expected out-of-sample Sharpe of the accepted strategy.
    pub e_out: F,
    /// Overfitting factor `e_in / e_out`.
    pub off: F,
    /// Probability a one-off attempt is accepted.
    pub poa: F,
    /// Large-T limit of the overfitting factor, `theta / ((1-2f) sr_true)`.
    pub off_asymptote: F,
}

impl<F: Real> OverfitReport<F> {
    /// Names of the scalar metrics, in report order.
    pub const METRICS: [&'static str; 9] = [
        "p_clear",
        "e_sr_given_clear",
        "poof",
        "e_srm_given_accept",
        "e_in",
        "e_out",
        "off",
        "poa",
        "off_asymptote",
    ];

    /// Look a metric up by name.
    pub fn metric(&self, name: &str) -> Option<F> {
        match name {
            "p_clear" => Some(self.p_clear),
            "e_sr_given_clear" => Some(self.e_sr_given_clear),
            "poof" => Some(self.poof),
            "e_srm_given_accept" => Some(self.e_srm_given_accept),
            "e_in" => Some(self.e_in),
            "e_out" => Some(self.e_out),
            "off" => Some(self.off),
            "poa" => Some(self.poa),
            "off_asymptote" => Some(self.off_asymptote),
            _ => None,
        }
    }
}

/// Probability that the realized Sharpe clears the threshold.
pub fn prob_clear<F: Real>(params: &ModelParams<F>) -> Result<F> {
    let noise = sharpe_noise_scale(params)?;
    Ok(normal::sf(
        (params.theta - params.sr_true) / noise.sigma_tot,
    ))
}

/// Evaluate every closed-form quantity at one parameter point.
///
/// When the conditioning event `SR < theta` carries no probability mass the
/// tweak branch is dropped entirely: every realization clears on its own,
/// `poof = 0` and `poa = 1`.
pub fn overfit_report<F: Real>(params: &ModelParams<F>) -> Result<OverfitReport<F>> {
    let noise = sharpe_noise_scale(params)?;
    let sigma = noise.sigma_tot;
    let m = params.sr_true;
    let theta = params.theta;

    let p_fail = normal::cdf((theta - m) / sigma);
    let p_clear = F::one() - p_fail;
    let e_sr_given_clear = truncated_mean_above(m, sigma, theta)?.value;

    let out_tweaked = (F::one() - cast::<F>(2.0) * params.f) * m;
    let off_asymptote = if out_tweaked == F::zero() {
        F::infinity()
    } else {
        theta / out_tweaked
    };

    let (poof, e_srm) = if p_fail == F::zero() {
        // The tweak machinery never engages; report the degenerate branch
        // with zero weight. The conditional mean defaults to the threshold.
        (F::zero(), theta)
    } else {
        let tail = TweakDensity::new(*params)?.tail()?;
        (tail.prob, tail.mean)
    };

    let e_in = p_clear * e_sr_given_clear + p_fail * e_srm;
    let e_out = p_clear * m + p_fail * out_tweaked;
    if e_out == F::zero() {
        return Err(Error::UndefinedOff);
    }
    let off = e_in / e_out;
    // Exact algebraic identity, imposed by construction; written in terms of
    // p_clear so the reconstruction from report fields is bitwise.
    let poa = p_clear + (F::one() - p_clear) * poof;

    Ok(OverfitReport {
        p_clear,
        e_sr_given_clear,
        poof,
        e_srm_given_accept: e_srm,
        e_in,
        e_out,
        off,
        poa,
        off_asymptote,
    })
}

/// Smallest backtest length (in years) at which a Sharpe of `sr` is
/// statistically distinguishable from noise at the stated confidence,
/// using `sigma_SR = 1/sqrt(T)`: `T = (z / sr)^2`.
pub fn min_backtest_years<F: Real>(sr: F, confidence: F, sides: Sides) -> Result<F> {
    if sr == F::zero() || !sr.is_finite() {
        return Err(Error::invalid("sr", "must be finite and non-zero", sr));
    }
    let z = normal::z_value(confidence, sides)?;
    if z <= F::zero() {
        // Any positive length suffices at confidence levels at or below 1/2.
        return Ok(F::zero());
    }
    let ratio = z / sr.abs();
    Ok(ratio * ratio)
}
