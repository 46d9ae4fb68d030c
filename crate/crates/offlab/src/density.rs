//! Conditioned density of the tweaked Sharpe ratio.
//!
//! A tweak flips the sign of a random fraction `f` of the N slices of a
//! backtest. Writing `SR` for the realized Sharpe and `SR_m` for the tweaked
//! one, the pair is bivariate Gaussian with common variance `sigma_tot^2`,
//! means `(sr_true, (1-2f) sr_true)` and correlation `(1-2f)`; N drops out
//! entirely. [`TweakDensity`] is the law of `SR_m` conditioned on the
//! original realization failing the threshold, `SR < theta`:
//!
//! ```text
//! rho(y) = n(y; (1-2f) sr_true, sigma) * Phi(q(y)) / Phi(theta; sr_true, sigma)
//! q(y)   = (theta - sr_true + (1-2f) ((1-2f) sr_true - y)) / tau
//! tau    = 2 sigma sqrt(f (1-f))
//! ```
//!
//! `tau` is the conditional standard deviation of `SR_m` given the path.
//! The Gaussian factor carries the usual `1/(2 sigma^2)` exponent; that is
//! the unique normalization under which `rho` integrates to one and matches
//! brute-force quadrature over the underlying pair.
//!
//! Tail quantities are evaluated in log space relative to an anchor so that
//! conditional means stay well defined even when the absolute tail mass
//! underflows (long backtests push `p(SR_m > theta | SR < theta)` far below
//! double-precision floors while `E[SR_m | SR_m > theta]` stays a perfectly
//! regular number slightly above `theta`).

use crate::error::{Error, Result};
use crate::normal::{self, log_cdf};
use crate::params::{sharpe_noise_scale, ModelParams};
use crate::quad::{integrate_panels, Tolerance};
use crate::real::{cast, Real};

/// Floor on the scaled tail mass (in units of `tau`) below which a
/// conditional tail mean is reported as unreliable instead of silently
/// returned.
pub const TAIL_FLOOR: f64 = 1e-12;

/// Half-width of the integration window, in units of `sigma_tot`.
const WINDOW_SIGMAS: f64 = 12.0;

/// Tail probability and conditional tail mean of the density above `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate<F> {
    /// `p(SR_m > theta | SR < theta)` — the probability of one-off
    /// overfitting. May underflow to zero for very long backtests.
    pub prob: F,
    /// `E[SR_m | SR_m > theta, SR < theta]`, always at least `theta`.
    pub mean: F,
}

/// Density of the tweaked Sharpe conditioned on `SR < theta`.
#[derive(Debug, Clone, Copy)]
pub struct TweakDensity<F: Real> {
    params: ModelParams<F>,
    sigma: F,
    mu_m: F,
    tau: F,
    corr: F,
    p_fail: F,
    log_p_fail: F,
}

impl<F: Real> TweakDensity<F> {
    pub fn new(params: ModelParams<F>) -> Result<Self> {
        params.validate()?;
        if !(params.f > F::zero() && params.f < F::one()) {
            return Err(Error::DegenerateCorrelation {
                f: params.f.to_string(),
            });
        }
        let sigma = sharpe_noise_scale(&params)?.sigma_tot;
        let corr = F::one() - cast::<F>(2.0) * params.f;
        let mu_m = corr * params.sr_true;
        let tau = cast::<F>(2.0) * sigma * (params.f * (F::one() - params.f)).sqrt();
        let z_fail = (params.theta - params.sr_true) / sigma;
        let p_fail = normal::cdf(z_fail);
        if p_fail == F::zero() {
            return Err(Error::ConditioningEventVanishes);
        }
        Ok(TweakDensity {
            params,
            sigma,
            mu_m,
            tau,
            corr,
            p_fail,
            log_p_fail: log_cdf(z_fail),
        })
    }

    pub fn params(&self) -> &ModelParams<F> {
        &self.params
    }

    /// Noise scale of the full-sample Sharpe estimate.
    pub fn sigma_tot(&self) -> F {
        self.sigma
    }

    /// Mean of the unconditioned tweaked Sharpe, `(1-2f) sr_true`.
    pub fn tweaked_mean(&self) -> F {
        self.mu_m
    }

    /// Conditional standard deviation of `SR_m` given the path,
    /// `2 sigma sqrt(f(1-f))`.
    pub fn conditional_sd(&self) -> F {
        self.tau
    }

    /// Correlation between the original and tweaked Sharpe, `1-2f`.
    pub fn correlation(&self) -> F {
        self.corr
    }

    /// Probability that the original realization fails the threshold.
    pub fn p_fail(&self) -> F {
        self.p_fail
    }

    /// Argument of the Gaussian-CDF factor.
    fn q(&self, y: F) -> F {
        (self.params.theta - self.params.sr_true + self.corr * (self.mu_m - y)) / self.tau
    }

    /// Natural log of the density.
    pub fn log_pdf(&self, y: F) -> F {
        let z = (y - self.mu_m) / self.sigma;
        let log_gauss =
            -z * z * cast::<F>(0.5) - self.sigma.ln() - cast::<F>(0.918_938_533_204_672_8);
        log_gauss + log_cdf(self.q(y)) - self.log_p_fail
    }

    /// Density value at `y`.
    pub fn pdf(&self, y: F) -> F {
        self.log_pdf(y).exp()
    }

    /// `p(SR_m < x | SR < theta)`.
    pub fn cdf(&self, x: F) -> Result<F> {
        let lo = self.mu_m - cast::<F>(WINDOW_SIGMAS) * self.sigma;
        let hi = self.mu_m + cast::<F>(WINDOW_SIGMAS) * self.sigma;
        if x <= lo {
            return Ok(F::zero());
        }
        let upper = x.min(hi);
        let edges = self.panel_edges(lo, upper);
        let mass = integrate_panels(|y| self.pdf(y), &edges, Tolerance::default())?.value;
        let mass = if x >= hi { F::one() } else { mass };
        Ok(mass.max(F::zero()).min(F::one()))
    }

    /// Integral of the density over the full window; equals one up to
    /// quadrature error when the implementation is consistent.
    pub fn normalization(&self) -> Result<F> {
        let lo = self.mu_m - cast::<F>(WINDOW_SIGMAS) * self.sigma;
        let hi = self.mu_m + cast::<F>(WINDOW_SIGMAS) * self.sigma;
        let edges = self.panel_edges(lo, hi);
        Ok(integrate_panels(|y| self.pdf(y), &edges, Tolerance::default())?.value)
    }

    /// Tail probability and conditional tail mean above `theta`.
    pub fn tail(&self) -> Result<TailEstimate<F>> {
        let theta = self.params.theta;
        let hi = theta.max(self.mu_m) + cast::<F>(WINDOW_SIGMAS + 1.0) * self.sigma;
        let edges = self.panel_edges(theta, hi);

        // Anchor the scaled integrand at the largest log density over the
        // panel edges; the edges track every feature scale, so the true
        // maximum sits within a few nats of an edge and exp() cannot
        // overflow.
        let anchor = edges
            .iter()
            .map(|&y| self.log_pdf(y))
            .fold(F::neg_infinity(), F::max);
        if anchor.is_nan() {
            return Err(Error::UnreliableTail {
                tail_mass: f64::NAN,
                floor: TAIL_FLOOR,
            });
        }
        if anchor == F::neg_infinity() {
            // The tail carries no representable mass at all.
            return Err(Error::UnreliableTail {
                tail_mass: 0.0,
                floor: TAIL_FLOOR,
            });
        }

        let scaled = |y: F| (self.log_pdf(y) - anchor).exp();
        let i0 = integrate_panels(scaled, &edges, Tolerance::default())?.value;
        let i1 = integrate_panels(|y| (y - theta) * scaled(y), &edges, Tolerance::default())?.value;

        // Reliability is judged on the scaled mass measured in units of tau:
        // the absolute probability may legitimately underflow while the
        // conditional mean remains well defined.
        let scaled_mass = i0 / self.tau;
        if !(scaled_mass > cast::<F>(TAIL_FLOOR)) {
            return Err(Error::UnreliableTail {
                tail_mass: scaled_mass.to_f64().unwrap_or(0.0),
                floor: TAIL_FLOOR,
            });
        }

        let prob = (anchor + i0.ln()).exp().max(F::zero()).min(F::one());
        let mean = theta + (i1 / i0).max(F::zero());
        Ok(TailEstimate { prob, mean })
    }

    /// Panel edges covering `[lo, hi]` with refinement at every feature the
    /// density has: the Gaussian mode (scale `sigma`), the threshold, and the
    /// shoulder where the CDF factor switches on (scale `tau`).
    fn panel_edges(&self, lo: F, hi: F) -> Vec<F> {
        debug_assert!(lo <= hi);
        let mut edges: Vec<F> = vec![lo, hi];
        let steps = [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0];

        let mut push_around = |center: F, scale: F| {
            for &k in &steps {
                let y = center + cast::<F>(k) * scale;
                if y > lo && y < hi {
                    edges.push(y);
                }
            }
        };

        push_around(self.mu_m, self.sigma);
        // Shoulder of the Phi factor: q(y*) = 0.
        let shoulder = self.mu_m + (self.params.theta - self.params.sr_true) / self.corr;
        if shoulder.is_finite() {
            push_around(shoulder, self.tau);
        }
        push_around(self.params.theta, self.tau);

        edges.sort_by(|a, b| a.partial_cmp(b).expect("edges are finite"));
        edges.dedup();
        edges
    }
}

/// Density of the tweaked Sharpe conditioned on `SR < theta`, at `y`.
pub fn rho_pdf<F: Real>(y: F, params: &ModelParams<F>) -> Result<F> {
    Ok(TweakDensity::new(*params)?.pdf(y))
}

/// Probability of one-off overfitting,
/// `PoOF = p(SR_m > theta | SR < theta)`.
pub fn rho_tail_prob<F: Real>(params: &ModelParams<F>) -> Result<F> {
    Ok(TweakDensity::new(*params)?.tail()?.prob)
}

/// Conditional mean of the tweaked Sharpe above the threshold,
/// `E[SR_m | SR_m > theta, SR < theta]`.
pub fn rho_tail_mean<F: Real>(params: &ModelParams<F>) -> Result<F> {
    Ok(TweakDensity::new(*params)?.tail()?.mean)
}
