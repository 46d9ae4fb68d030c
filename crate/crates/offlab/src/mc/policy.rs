//! Researcher behavior policies over path ensembles.
//!
//! `run_one_off` models a single research attempt: keep the realization if
//! it clears, otherwise apply exactly one random tweak. `run_until_clear`
//! models the persistent researcher who keeps reworking a failed strategy
//! until the in-sample Sharpe clears the threshold.
//!
//! In gaussian-slice mode a rework is a fresh sub-threshold realization of
//! the strategy's slice noise (the radical-intervention reading: each rework
//! rebins the PnL so thoroughly that the slice decomposition is new), so the
//! accepted tweak reproduces the conditioned density's tail law exactly. In
//! path-level mode the daily realization is pinned once per path and every
//! rework only re-deals the same days into new buckets; deep-failing paths
//! then need astronomically many attempts to clear, which the attempt cap
//! surfaces honestly. The two policies agree on one-off quantities; for
//! until-clear quantities the path-level reading weighs deep failures more
//! heavily and sits slightly below the closed-form in-sample mean.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mc::tweak::sample_indices;
use crate::mc::{
    binomial_estimate, mean_estimate, metric, substream, Estimate, McResult, PathConfig,
    SampleReal, SamplingMode, SliceScheme, MIN_DAYS_PER_SLICE,
};
use crate::normal;
use crate::params::{sharpe_noise_scale, ModelParams};
use crate::real::{cast, Real};

/// Default cap on tweak attempts per path.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 10_000;

/// Fixed work unit for parallel evaluation; chunk boundaries (not the worker
/// count) determine the reduction order, so results are thread-count
/// independent.
const CHUNK: u64 = 4096;

/// Draw an N-bucket slice set directly from the Gaussian slice law
/// `SR_i ~ N(sr_true, sqrt(N) * sigma_tot)`.
pub fn sample_slice_sharpes_gaussian<F: SampleReal, R: Rng + ?Sized>(
    params: &ModelParams<F>,
    n_buckets: usize,
    rng: &mut R,
) -> Result<crate::mc::SliceSet<F>> {
    params.validate()?;
    if n_buckets < 1 {
        return Err(Error::invalid("n_buckets", "must be at least 1", n_buckets));
    }
    let sd = sharpe_noise_scale(params)?.sigma_slice(n_buckets);
    let m = params.sr_true;
    let sharpes: Vec<F> = (0..n_buckets)
        .map(|_| m + sd * F::standard_normal(rng))
        .collect();
    Ok(crate::mc::SliceSet::new(sharpes))
}

/// Shared per-run context.
struct RunCtx<F> {
    model: ModelParams<F>,
    n_buckets: usize,
    flips: usize,
    slice_sd: F,
    sigma_tot: F,
    /// Probability the original realization fails, used to redraw
    /// sub-threshold realizations by inverse CDF in gaussian mode.
    p_fail: F,
    daily_vol: F,
    scheme: SliceScheme,
    seed: u64,
}

impl<F: SampleReal> RunCtx<F> {
    fn new(config: &PathConfig<F>) -> Result<Self> {
        config.validate()?;
        let flips = config.flips_per_tweak()?;
        let noise = sharpe_noise_scale(&config.model)?;
        let sigma_tot = noise.sigma_tot;
        let p_fail = normal::cdf((config.model.theta - config.model.sr_true) / sigma_tot);
        Ok(RunCtx {
            model: config.model,
            n_buckets: config.n_buckets,
            flips,
            slice_sd: noise.sigma_slice(config.n_buckets),
            sigma_tot,
            p_fail,
            daily_vol: config.daily_vol,
            scheme: config.scheme,
            seed: config.seed,
        })
    }

    /// Days per path after truncation to a bucket multiple, plus the slice
    /// thickness check.
    fn path_days(&self, config: &PathConfig<F>) -> Result<(usize, usize)> {
        let total = config.total_days();
        let usable = total - total % self.n_buckets;
        let per_slice = usable / self.n_buckets;
        if per_slice < MIN_DAYS_PER_SLICE {
            return Err(Error::SliceTooThin {
                days_per_slice: per_slice,
                n_buckets: self.n_buckets,
                min_days: MIN_DAYS_PER_SLICE,
            });
        }
        Ok((usable, per_slice))
    }

    fn theta(&self) -> F {
        self.model.theta
    }
}

/// Daily returns of one path written into `buf`.
fn fill_returns<F: SampleReal, R: Rng + ?Sized>(
    ctx: &RunCtx<F>,
    days: usize,
    rng: &mut R,
    buf: &mut Vec<F>,
) {
    let sr_daily = ctx.model.sr_daily();
    buf.clear();
    buf.extend((0..days).map(|_| ctx.daily_vol * (sr_daily + F::standard_normal(rng))));
}

/// Sum and sum of squares of a return series.
fn series_sums<F: Real>(returns: &[F]) -> (F, F) {
    let mut s = F::zero();
    let mut q = F::zero();
    for &r in returns {
        s += r;
        q += r * r;
    }
    (s, q)
}

/// Annualized Sharpe from precomputed sums, population divisor.
fn sharpe_from_sums<F: Real>(s: F, q: F, n: usize, days_per_year: u32) -> Result<F> {
    let nf = cast::<F>(n as f64);
    let mean = s / nf;
    let var = q / nf - mean * mean;
    if crate::mc::path::variance_is_degenerate(var, q / nf, n) {
        return Err(Error::DegenerateSeries {
            reason: "zero variance",
        });
    }
    Ok(mean / var.sqrt() * cast::<F>(f64::from(days_per_year)).sqrt())
}

/// Sum of the daily returns that a bucket-mask flip negates, under the
/// configured binning scheme. Choosing `flips` random buckets of a uniformly
/// random equal binning is distributionally a uniformly random day subset of
/// size `flips * days_per_slice`, which is how the random-assignment arm
/// samples it.
fn flipped_day_sum<F: SampleReal, R: Rng + ?Sized>(
    returns: &[F],
    scheme: SliceScheme,
    n_buckets: usize,
    per_slice: usize,
    flips: usize,
    rng: &mut R,
) -> F {
    match scheme {
        SliceScheme::Contiguous => {
            let buckets = sample_indices(n_buckets, flips, rng);
            buckets
                .iter()
                .map(|&b| {
                    returns[b * per_slice..(b + 1) * per_slice]
                        .iter()
                        .copied()
                        .sum::<F>()
                })
                .sum()
        }
        SliceScheme::Strided => {
            let buckets = sample_indices(n_buckets, flips, rng);
            buckets
                .iter()
                .map(|&b| {
                    returns
                        .iter()
                        .skip(b)
                        .step_by(n_buckets)
                        .copied()
                        .sum::<F>()
                })
                .sum()
        }
        SliceScheme::RandomAssignment => {
            rand::seq::index::sample(rng, returns.len(), flips * per_slice)
                .into_iter()
                .map(|d| returns[d])
                .sum()
        }
    }
}

/// Sharpe of the series with the masked days sign-flipped. Negation leaves
/// every squared return unchanged, so only the mean moves.
fn flipped_sharpe<F: Real>(s: F, q: F, flipped_sum: F, n: usize, days_per_year: u32) -> Result<F> {
    sharpe_from_sums(s - cast::<F>(2.0) * flipped_sum, q, n, days_per_year)
}

// ---------------------------------------------------------------------------
// one-off policy
// ---------------------------------------------------------------------------

#[derive(Default, Clone)]
struct OneOffAccum {
    n: u64,
    n_clear: u64,
    n_cond: u64,
    n_tweak_clear: u64,
    sum_sr: f64,
    sum_srm: f64,
    sum_sr2: f64,
    sum_srm2: f64,
    sum_cross: f64,
}

impl OneOffAccum {
    fn add(&mut self, sr: f64, srm: f64, theta: f64) {
        self.n += 1;
        self.sum_sr += sr;
        self.sum_srm += srm;
        self.sum_sr2 += sr * sr;
        self.sum_srm2 += srm * srm;
        self.sum_cross += sr * srm;
        if sr > theta {
            self.n_clear += 1;
        } else {
            self.n_cond += 1;
            if srm > theta {
                self.n_tweak_clear += 1;
            }
        }
    }

    fn merge(&mut self, other: &OneOffAccum) {
        self.n += other.n;
        self.n_clear += other.n_clear;
        self.n_cond += other.n_cond;
        self.n_tweak_clear += other.n_tweak_clear;
        self.sum_sr += other.sum_sr;
        self.sum_srm += other.sum_srm;
        self.sum_sr2 += other.sum_sr2;
        self.sum_srm2 += other.sum_srm2;
        self.sum_cross += other.sum_cross;
    }

    fn correlation(&self) -> Estimate {
        let n = self.n as f64;
        let cov = self.sum_cross / n - (self.sum_sr / n) * (self.sum_srm / n);
        let var_sr = self.sum_sr2 / n - (self.sum_sr / n).powi(2);
        let var_srm = self.sum_srm2 / n - (self.sum_srm / n).powi(2);
        let r = cov / (var_sr * var_srm).sqrt();
        Estimate {
            mean: r,
            std_error: (1.0 - r * r) / n.sqrt(),
        }
    }
}

/// One realization plus exactly one random tweak, in the configured mode.
/// Returns `(sr, sr_m)`.
fn one_off_draw<F: SampleReal, R: Rng + ?Sized>(
    ctx: &RunCtx<F>,
    path_days: Option<(usize, usize)>,
    rng: &mut R,
    buf: &mut Vec<F>,
) -> Result<(F, F)> {
    match path_days {
        None => {
            // Gaussian-slice mode: slices are the realization.
            let m = ctx.model.sr_true;
            buf.clear();
            buf.extend((0..ctx.n_buckets).map(|_| m + ctx.slice_sd * F::standard_normal(rng)));
            let n = cast::<F>(ctx.n_buckets as f64);
            let sr = buf.iter().copied().sum::<F>() / n;
            let mask = sample_indices(ctx.n_buckets, ctx.flips, rng);
            let masked: F = mask.iter().map(|&i| buf[i]).sum();
            Ok((sr, sr - cast::<F>(2.0) * masked / n))
        }
        Some((days, per_slice)) => {
            fill_returns(ctx, days, rng, buf);
            let (s, q) = series_sums(buf);
            let sr = sharpe_from_sums(s, q, days, ctx.model.days_per_year)?;
            let flipped =
                flipped_day_sum(buf, ctx.scheme, ctx.n_buckets, per_slice, ctx.flips, rng);
            let srm = flipped_sharpe(s, q, flipped, days, ctx.model.days_per_year)?;
            Ok((sr, srm))
        }
    }
}

/// Simulate the one-off policy: accept a clearing realization as-is,
/// otherwise apply one random tweak. The tweak is drawn for every path so
/// the `(SR, SR_m)` correlation can be estimated unconditionally.
pub fn run_one_off<F: SampleReal>(config: &PathConfig<F>, n_paths: u64) -> Result<McResult> {
    let ctx = RunCtx::new(config)?;
    if n_paths < 1 {
        return Err(Error::invalid("n_paths", "must be at least 1", n_paths));
    }
    let path_days = match config.mode {
        SamplingMode::GaussianSlice => None,
        SamplingMode::PathLevel => Some(ctx.path_days(config)?),
    };
    let theta = ctx.theta().to_f64().expect("theta fits f64");

    let n_chunks = n_paths.div_ceil(CHUNK);
    let partials: Vec<OneOffAccum> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<OneOffAccum> {
            let mut acc = OneOffAccum::default();
            let mut buf: Vec<F> = Vec::new();
            let hi = ((c + 1) * CHUNK).min(n_paths);
            for i in (c * CHUNK)..hi {
                let mut rng = substream(ctx.seed, i);
                let (sr, srm) = one_off_draw(&ctx, path_days, &mut rng, &mut buf)?;
                acc.add(
                    sr.to_f64().expect("sr fits f64"),
                    srm.to_f64().expect("srm fits f64"),
                    theta,
                );
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = OneOffAccum::default();
    for p in &partials {
        total.merge(p);
    }

    let mut estimates = BTreeMap::new();
    estimates.insert(
        metric::P_CLEAR.to_string(),
        binomial_estimate(total.n_clear, total.n),
    );
    estimates.insert(
        metric::POA.to_string(),
        binomial_estimate(total.n_clear + total.n_tweak_clear, total.n),
    );
    if total.n_cond > 0 {
        estimates.insert(
            metric::POOF.to_string(),
            binomial_estimate(total.n_tweak_clear, total.n_cond),
        );
    }
    estimates.insert(metric::CORR_SR_SRM.to_string(), total.correlation());

    Ok(McResult {
        n_paths,
        estimates,
        attempts_histogram: Vec::new(),
        seed: ctx.seed,
        n_conditioned: total.n_cond,
        n_exhausted: 0,
    })
}

// ---------------------------------------------------------------------------
// until-clear policy
// ---------------------------------------------------------------------------

struct PathOutcome {
    in_value: f64,
    out_value: f64,
    attempts: u32,
    exhausted: bool,
}

#[derive(Default, Clone)]
struct UntilClearAccum {
    n_ok: u64,
    n_clear: u64,
    n_exhausted: u64,
    sum_in: f64,
    sum_in2: f64,
    sum_out: f64,
    sum_out2: f64,
    sum_cross: f64,
    sum_attempts: f64,
    sum_attempts2: f64,
    n_tweaked: u64,
    histogram: BTreeMap<u32, u64>,
}

impl UntilClearAccum {
    fn add(&mut self, o: &PathOutcome) {
        if o.exhausted {
            self.n_exhausted += 1;
            *self.histogram.entry(u32::MAX).or_insert(0) += 1;
            return;
        }
        self.n_ok += 1;
        if o.attempts == 0 {
            self.n_clear += 1;
        } else {
            self.n_tweaked += 1;
            self.sum_attempts += f64::from(o.attempts);
            self.sum_attempts2 += f64::from(o.attempts) * f64::from(o.attempts);
        }
        *self.histogram.entry(o.attempts).or_insert(0) += 1;
        self.sum_in += o.in_value;
        self.sum_in2 += o.in_value * o.in_value;
        self.sum_out += o.out_value;
        self.sum_out2 += o.out_value * o.out_value;
        self.sum_cross += o.in_value * o.out_value;
    }

    fn merge(&mut self, other: &UntilClearAccum) {
        self.n_ok += other.n_ok;
        self.n_clear += other.n_clear;
        self.n_exhausted += other.n_exhausted;
        self.sum_in += other.sum_in;
        self.sum_in2 += other.sum_in2;
        self.sum_out += other.sum_out;
        self.sum_out2 += other.sum_out2;
        self.sum_cross += other.sum_cross;
        self.sum_attempts += other.sum_attempts;
        self.sum_attempts2 += other.sum_attempts2;
        self.n_tweaked += other.n_tweaked;
        for (&k, &v) in &other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
    }
}

fn until_clear_gaussian<F: SampleReal, R: Rng + ?Sized>(
    ctx: &RunCtx<F>,
    max_attempts: u32,
    rng: &mut R,
    buf: &mut Vec<F>,
) -> Result<PathOutcome> {
    let m = ctx.model.sr_true;
    let theta = ctx.theta();
    let n = cast::<F>(ctx.n_buckets as f64);
    let two = cast::<F>(2.0);
    let out_tweaked = ctx.model.tweaked_out_of_sample_sr();

    buf.clear();
    buf.extend((0..ctx.n_buckets).map(|_| m + ctx.slice_sd * F::standard_normal(rng)));
    let sr = buf.iter().copied().sum::<F>() / n;
    if sr > theta {
        return Ok(PathOutcome {
            in_value: sr.to_f64().expect("fits"),
            out_value: m.to_f64().expect("fits"),
            attempts: 0,
            exhausted: false,
        });
    }

    for attempt in 1..=max_attempts {
        let total = if attempt == 1 {
            // First rework tweaks the original binning as-is.
            sr
        } else {
            // A radical rework re-realizes the slice decomposition of a
            // still-failing strategy: draw the full-sample Sharpe from the
            // sub-threshold truncation, then slice noise conditioned on it.
            let u: F = F::open01(rng);
            let tail_p = (u * ctx.p_fail).max(F::min_positive_value());
            let total = m + ctx.sigma_tot * normal::quantile(tail_p)?;
            buf.clear();
            buf.extend((0..ctx.n_buckets).map(|_| ctx.slice_sd * F::standard_normal(rng)));
            let g_bar = buf.iter().copied().sum::<F>() / n;
            for g in buf.iter_mut() {
                *g = total + *g - g_bar;
            }
            total
        };
        let mask = sample_indices(ctx.n_buckets, ctx.flips, rng);
        let masked: F = mask.iter().map(|&i| buf[i]).sum();
        let srm = total - two * masked / n;
        if srm > theta {
            return Ok(PathOutcome {
                in_value: srm.to_f64().expect("fits"),
                out_value: out_tweaked.to_f64().expect("fits"),
                attempts: attempt,
                exhausted: false,
            });
        }
    }
    Ok(PathOutcome {
        in_value: 0.0,
        out_value: 0.0,
        attempts: max_attempts,
        exhausted: true,
    })
}

fn until_clear_path<F: SampleReal, R: Rng + ?Sized>(
    ctx: &RunCtx<F>,
    days: usize,
    per_slice: usize,
    max_attempts: u32,
    rng: &mut R,
    buf: &mut Vec<F>,
) -> Result<PathOutcome> {
    let theta = ctx.theta();
    let out_tweaked = ctx.model.tweaked_out_of_sample_sr();

    fill_returns(ctx, days, rng, buf);
    let (s, q) = series_sums(buf);
    let sr = sharpe_from_sums(s, q, days, ctx.model.days_per_year)?;
    if sr > theta {
        return Ok(PathOutcome {
            in_value: sr.to_f64().expect("fits"),
            out_value: ctx.model.sr_true.to_f64().expect("fits"),
            attempts: 0,
            exhausted: false,
        });
    }

    for attempt in 1..=max_attempts {
        // First attempt flips buckets of the configured binning; later
        // reworks re-deal the same days into a fresh random binning, which
        // collapses to flipping a uniformly random day subset.
        let scheme = if attempt == 1 {
            ctx.scheme
        } else {
            SliceScheme::RandomAssignment
        };
        let flipped = flipped_day_sum(buf, scheme, ctx.n_buckets, per_slice, ctx.flips, rng);
        let srm = flipped_sharpe(s, q, flipped, days, ctx.model.days_per_year)?;
        if srm > theta {
            return Ok(PathOutcome {
                in_value: srm.to_f64().expect("fits"),
                out_value: out_tweaked.to_f64().expect("fits"),
                attempts: attempt,
                exhausted: false,
            });
        }
    }
    Ok(PathOutcome {
        in_value: 0.0,
        out_value: 0.0,
        attempts: max_attempts,
        exhausted: true,
    })
}

/// Simulate the until-clear policy: accept a clearing realization as-is,
/// otherwise rework and re-tweak until the modified Sharpe clears. The
/// out-of-sample Sharpe of an accepted tweak is `(1-2f) * sr_true` however
/// many reworks it took: every rework re-tweaks the original strategy, not
/// the previous tweak. (An alternative reading would compound the
/// decorrelation to `(1-2f)^k` after `k` reworks; that variant is not
/// modeled.)
///
/// Paths that exhaust `max_attempts` are counted and excluded from the
/// estimates; the run fails when they exceed 0.1% of the ensemble.
pub fn run_until_clear<F: SampleReal>(
    config: &PathConfig<F>,
    n_paths: u64,
    max_attempts: u32,
) -> Result<McResult> {
    let ctx = RunCtx::new(config)?;
    if n_paths < 1 {
        return Err(Error::invalid("n_paths", "must be at least 1", n_paths));
    }
    if max_attempts < 1 {
        return Err(Error::invalid(
            "max_attempts",
            "must be at least 1",
            max_attempts,
        ));
    }
    let path_days = match config.mode {
        SamplingMode::GaussianSlice => None,
        SamplingMode::PathLevel => Some(ctx.path_days(config)?),
    };

    let n_chunks = n_paths.div_ceil(CHUNK);
    let partials: Vec<UntilClearAccum> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<UntilClearAccum> {
            let mut acc = UntilClearAccum::default();
            let mut buf: Vec<F> = Vec::new();
            let hi = ((c + 1) * CHUNK).min(n_paths);
            for i in (c * CHUNK)..hi {
                let mut rng = substream(ctx.seed, i);
                let outcome = match path_days {
                    None => until_clear_gaussian(&ctx, max_attempts, &mut rng, &mut buf)?,
                    Some((days, per_slice)) => {
                        until_clear_path(&ctx, days, per_slice, max_attempts, &mut rng, &mut buf)?
                    }
                };
                acc.add(&outcome);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = UntilClearAccum::default();
    for p in &partials {
        total.merge(p);
    }

    if total.n_exhausted * 1000 > n_paths {
        return Err(Error::TooManyExhausted {
            exhausted: total.n_exhausted,
            n_paths,
            max_attempts,
        });
    }

    let mut estimates = BTreeMap::new();
    estimates.insert(
        metric::P_CLEAR.to_string(),
        binomial_estimate(total.n_clear, n_paths),
    );
    if total.n_ok > 0 {
        let e_in = mean_estimate(total.sum_in, total.sum_in2, total.n_ok);
        let e_out = mean_estimate(total.sum_out, total.sum_out2, total.n_ok);
        estimates.insert(metric::E_IN.to_string(), e_in);
        estimates.insert(metric::E_OUT.to_string(), e_out);
        if e_out.mean != 0.0 {
            let n = total.n_ok as f64;
            let off = e_in.mean / e_out.mean;
            let var_in = (total.sum_in2 / n - e_in.mean * e_in.mean).max(0.0);
            let var_out = (total.sum_out2 / n - e_out.mean * e_out.mean).max(0.0);
            let cov = total.sum_cross / n - e_in.mean * e_out.mean;
            let var_off = ((var_in + off * off * var_out - 2.0 * off * cov)
                / (n * e_out.mean * e_out.mean))
                .max(0.0);
            estimates.insert(
                metric::OFF.to_string(),
                Estimate {
                    mean: off,
                    std_error: var_off.sqrt(),
                },
            );
        }
    }
    if total.n_tweaked > 0 {
        estimates.insert(
            metric::MEAN_ATTEMPTS.to_string(),
            mean_estimate(total.sum_attempts, total.sum_attempts2, total.n_tweaked),
        );
    }

    let attempts_histogram: Vec<(u32, u64)> =
        total.histogram.iter().map(|(&k, &v)| (k, v)).collect();

    Ok(McResult {
        n_paths,
        estimates,
        attempts_histogram,
        seed: ctx.seed,
        n_conditioned: n_paths - total.n_clear,
        n_exhausted: total.n_exhausted,
    })
}
