//! Brute-force simulation of the PnL process, the slice/flip tweak
//! mechanics, and the researcher behavior policies.
//!
//! Two sampling modes are supported:
//!
//! * **path level** — simulate every daily return of the drifted Brownian
//!   PnL, estimate Sharpe ratios from the series, slice the days into N
//!   buckets and flip signs by negating the bucket's daily returns;
//! * **gaussian slice** — sample the N per-slice Sharpes directly from
//!   `N(sr_true, sqrt(N) * sigma_tot)`, which is the exact distributional
//!   abstraction of the same mechanics and orders of magnitude faster.
//!
//! Every path owns its own counter-based generator substream, and ensemble
//! statistics are reduced in fixed chunk order, so results are bit-identical
//! for a given master seed no matter how many worker threads run.

mod path;
mod policy;
mod rng;
mod tweak;

pub use path::{realized_sharpe, simulate_daily_pnl, slice_sharpes, MIN_DAYS_PER_SLICE};
pub use policy::{
    run_one_off, run_until_clear, sample_slice_sharpes_gaussian, DEFAULT_MAX_ATTEMPTS,
};
pub use rng::substream;
pub use tweak::{choose_flips_maximal, choose_flips_random, flip_count, MaximalFlips};

use std::collections::BTreeMap;

use rand::distributions::{Distribution, Open01};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::real::{cast, Real};

/// Scalar that the random layers can sample directly.
pub trait SampleReal: Real {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl SampleReal for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Open01.sample(rng)
    }
}

impl SampleReal for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Open01.sample(rng)
    }
}

/// How the ensemble represents a backtest realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    PathLevel,
    GaussianSlice,
}

/// How daily returns are assigned to slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceScheme {
    /// Consecutive blocks of days.
    Contiguous,
    /// Day `d` goes to slice `d mod N` (day-of-week style labeling).
    Strided,
    /// Uniformly random assignment into N equal buckets.
    RandomAssignment,
}

/// Configuration of a simulated ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathConfig<F> {
    pub model: ModelParams<F>,
    pub n_buckets: usize,
    /// Daily volatility of the simulated returns. Sharpe-scale results do
    /// not depend on it.
    pub daily_vol: F,
    pub seed: u64,
    pub mode: SamplingMode,
    /// Binning used for the first tweak attempt (and for one-off tweaks) in
    /// path-level mode.
    pub scheme: SliceScheme,
}

pub const DEFAULT_DAILY_VOL: f64 = 0.01;

impl<F: Real> PathConfig<F> {
    pub fn gaussian_slice(model: ModelParams<F>, n_buckets: usize, seed: u64) -> Self {
        PathConfig {
            model,
            n_buckets,
            daily_vol: cast(DEFAULT_DAILY_VOL),
            seed,
            mode: SamplingMode::GaussianSlice,
            scheme: SliceScheme::Contiguous,
        }
    }

    pub fn path_level(model: ModelParams<F>, n_buckets: usize, seed: u64) -> Self {
        PathConfig {
            mode: SamplingMode::PathLevel,
            ..Self::gaussian_slice(model, n_buckets, seed)
        }
    }

    pub fn with_scheme(mut self, scheme: SliceScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_daily_vol(mut self, vol: F) -> Self {
        self.daily_vol = vol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_buckets < 1 {
            return Err(Error::invalid(
                "n_buckets",
                "must be at least 1",
                self.n_buckets,
            ));
        }
        if !(self.daily_vol > F::zero()) || !self.daily_vol.is_finite() {
            return Err(Error::invalid(
                "daily_vol",
                "must be a positive finite number",
                self.daily_vol,
            ));
        }
        Ok(())
    }

    /// Number of daily observations the model implies.
    pub fn total_days(&self) -> usize {
        let days = self.model.t_years * cast::<F>(f64::from(self.model.days_per_year));
        days.round().to_f64().unwrap_or(0.0).max(0.0) as usize
    }

    /// Slices flipped per tweak, `round(f * N)` with ties rounding up.
    pub fn flips_per_tweak(&self) -> Result<usize> {
        flip_count(self.n_buckets, self.model.f)
    }
}

/// N-bucket decomposition of one realization.
///
/// `modified_sr` restates the flip algebra exactly:
/// `modified_sr = original_sr - (2/N) * sum of the masked slice Sharpes`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSet<F> {
    pub slice_sharpes: Vec<F>,
    /// Indices of the flipped slices, sorted; empty when no tweak has been
    /// applied yet.
    pub flip_mask: Vec<usize>,
    pub original_sr: F,
    pub modified_sr: F,
}

impl<F: Real> SliceSet<F> {
    pub fn new(slice_sharpes: Vec<F>) -> Self {
        let n = cast::<F>(slice_sharpes.len() as f64);
        let original_sr = slice_sharpes.iter().copied().sum::<F>() / n;
        SliceSet {
            slice_sharpes,
            flip_mask: Vec::new(),
            original_sr,
            modified_sr: original_sr,
        }
    }

    pub fn n_buckets(&self) -> usize {
        self.slice_sharpes.len()
    }

    /// Modified Sharpe for an arbitrary mask, without storing it.
    pub fn modified_for_mask(&self, mask: &[usize]) -> F {
        let n = cast::<F>(self.slice_sharpes.len() as f64);
        let masked: F = mask.iter().map(|&i| self.slice_sharpes[i]).sum();
        self.original_sr - cast::<F>(2.0) * masked / n
    }

    /// Apply a flip mask, recording it and the resulting modified Sharpe.
    pub fn with_mask(mut self, mut mask: Vec<usize>) -> Self {
        mask.sort_unstable();
        self.modified_sr = self.modified_for_mask(&mask);
        self.flip_mask = mask;
        self
    }
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Metric names used in [`McResult::estimates`].
pub mod metric {
    pub const P_CLEAR: &str = "p_clear";
    pub const POOF: &str = "poof";
    pub const POA: &str = "poa";
    pub const CORR_SR_SRM: &str = "corr_sr_srm";
    pub const E_IN: &str = "e_in";
    pub const E_OUT: &str = "e_out";
    pub const OFF: &str = "off";
    pub const MEAN_ATTEMPTS: &str = "mean_attempts";
}

/// Ensemble estimates from a policy run.
///
/// Conditional metrics are simply absent from the map when their
/// conditioning set is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub n_paths: u64,
    pub estimates: BTreeMap<String, Estimate>,
    /// Histogram of tweak attempts per path (empty for one-off runs);
    /// attempt count 0 means the original realization cleared.
    pub attempts_histogram: Vec<(u32, u64)>,
    pub seed: u64,
    /// Paths whose original realization failed the threshold.
    pub n_conditioned: u64,
    /// Paths that hit the attempt cap in an until-clear run.
    pub n_exhausted: u64,
}

impl McResult {
    pub fn estimate(&self, name: &str) -> Option<Estimate> {
        self.estimates.get(name).copied()
    }
}

pub(crate) fn binomial_estimate(successes: u64, trials: u64) -> Estimate {
    let n = trials as f64;
    let p = successes as f64 / n;
    Estimate {
        mean: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
    }
}

pub(crate) fn mean_estimate(sum: f64, sum_sq: f64, n: u64) -> Estimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    Estimate {
        mean,
        std_error: (var / nf).sqrt(),
    }
}
