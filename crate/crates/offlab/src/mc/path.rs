//! Daily PnL simulation and Sharpe estimation.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mc::{PathConfig, SampleReal, SliceScheme, SliceSet};
use crate::real::{cast, Real};

/// Minimum observations per slice for the per-slice Sharpe to be
/// approximately Gaussian.
pub const MIN_DAYS_PER_SLICE: usize = 20;

/// Simulate the daily returns of the drifted Brownian PnL:
/// `r_d = daily_vol * (sr_daily + g_d)` with `g_d` standard normal, so the
/// daily drift is `sr_daily * daily_vol`.
pub fn simulate_daily_pnl<F: SampleReal, R: Rng + ?Sized>(
    config: &PathConfig<F>,
    rng: &mut R,
) -> Result<Vec<F>> {
    config.validate()?;
    let n_days = config.total_days();
    if n_days < 2 {
        return Err(Error::invalid(
            "t_years",
            "implies fewer than 2 daily observations",
            config.model.t_years,
        ));
    }
    let sr_daily = config.model.sr_daily();
    let vol = config.daily_vol;
    Ok((0..n_days)
        .map(|_| vol * (sr_daily + F::standard_normal(rng)))
        .collect())
}

/// A variance is degenerate when it is indistinguishable from the rounding
/// noise of its own accumulation.
pub(crate) fn variance_is_degenerate<F: Real>(var: F, mean_sq: F, n: usize) -> bool {
    let eps = F::epsilon();
    !(var > mean_sq * cast::<F>(16.0 * n as f64) * eps * eps)
}

/// Population mean and variance in one pass.
fn mean_var<F: Real>(values: &[F]) -> (F, F) {
    let n = cast::<F>(values.len() as f64);
    let mean = values.iter().copied().sum::<F>() / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<F>()
        / n;
    (mean, var)
}

/// Annualized Sharpe estimate of a daily return series, with the
/// population (1/n) variance divisor so that slice averaging carries no
/// Bessel-correction mismatch.
pub fn realized_sharpe<F: Real>(returns: &[F], days_per_year: u32) -> Result<F> {
    if returns.len() < 2 {
        return Err(Error::DegenerateSeries {
            reason: "need at least 2 observations",
        });
    }
    let (mean, var) = mean_var(returns);
    let mean_sq = returns.iter().map(|&v| v * v).sum::<F>() / cast::<F>(returns.len() as f64);
    if variance_is_degenerate(var, mean_sq, returns.len()) {
        return Err(Error::DegenerateSeries {
            reason: "zero variance",
        });
    }
    Ok(mean / var.sqrt() * cast::<F>(f64::from(days_per_year)).sqrt())
}

/// Slice a return series into `n_buckets` equal groups and compute one
/// annualized Sharpe per slice.
///
/// The series is truncated to the largest multiple of `n_buckets`; slices
/// thinner than [`MIN_DAYS_PER_SLICE`] are rejected. The slice labeling does
/// not imply chronological order: `Strided` groups days by their position
/// modulo N (for N = 5, performance by day of the week), `RandomAssignment`
/// deals a shuffled deck into N equal buckets.
pub fn slice_sharpes<F: Real, R: Rng + ?Sized>(
    returns: &[F],
    days_per_year: u32,
    n_buckets: usize,
    scheme: SliceScheme,
    rng: &mut R,
) -> Result<SliceSet<F>> {
    if n_buckets < 1 {
        return Err(Error::invalid("n_buckets", "must be at least 1", n_buckets));
    }
    let usable = returns.len() - returns.len() % n_buckets;
    let days_per_slice = usable / n_buckets;
    if days_per_slice < MIN_DAYS_PER_SLICE {
        return Err(Error::SliceTooThin {
            days_per_slice,
            n_buckets,
            min_days: MIN_DAYS_PER_SLICE,
        });
    }
    let data = &returns[..usable];

    let mut sharpes = Vec::with_capacity(n_buckets);
    let mut scratch = Vec::with_capacity(days_per_slice);
    match scheme {
        SliceScheme::Contiguous => {
            for chunk in data.chunks_exact(days_per_slice) {
                sharpes.push(realized_sharpe(chunk, days_per_year)?);
            }
        }
        SliceScheme::Strided => {
            for slice_idx in 0..n_buckets {
                scratch.clear();
                scratch.extend(data.iter().skip(slice_idx).step_by(n_buckets).copied());
                sharpes.push(realized_sharpe(&scratch, days_per_year)?);
            }
        }
        SliceScheme::RandomAssignment => {
            let mut order: Vec<usize> = (0..usable).collect();
            for i in (1..usable).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            for bucket in order.chunks_exact(days_per_slice) {
                scratch.clear();
                scratch.extend(bucket.iter().map(|&d| data[d]));
                sharpes.push(realized_sharpe(&scratch, days_per_year)?);
            }
        }
    }
    Ok(SliceSet::new(sharpes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::substream;
    use crate::params::ModelParams;
    use approx::assert_relative_eq;

    fn config() -> PathConfig<f64> {
        PathConfig::path_level(ModelParams::new(0.4, 0.7, 0.05, 20.0), 10, 11)
    }

    #[test]
    fn path_length_matches_the_model() {
        let cfg = config();
        let r = simulate_daily_pnl(&cfg, &mut substream(cfg.seed, 0)).unwrap();
        assert_eq!(r.len(), 5040);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = config();
        let a = simulate_daily_pnl(&cfg, &mut substream(cfg.seed, 42)).unwrap();
        let b = simulate_daily_pnl(&cfg, &mut substream(cfg.seed, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_vol_is_rejected() {
        let mut cfg = config();
        cfg.daily_vol = 0.0;
        assert!(simulate_daily_pnl(&cfg, &mut substream(1, 0)).is_err());
    }

    #[test]
    fn sharpe_of_constant_series_is_degenerate() {
        let r = vec![0.01f64; 100];
        assert!(matches!(
            realized_sharpe(&r, 252),
            Err(Error::DegenerateSeries { .. })
        ));
    }

    #[test]
    fn sharpe_of_alternating_series_is_zero() {
        let r: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        assert_relative_eq!(realized_sharpe(&r, 252).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sharpe_is_scale_invariant() {
        let cfg = config();
        let r = simulate_daily_pnl(&cfg, &mut substream(cfg.seed, 7)).unwrap();
        let scaled: Vec<f64> = r.iter().map(|&x| 25.0 * x).collect();
        assert_relative_eq!(
            realized_sharpe(&r, 252).unwrap(),
            realized_sharpe(&scaled, 252).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn contiguous_slicing_shape() {
        let cfg = config();
        let r = simulate_daily_pnl(&cfg, &mut substream(cfg.seed, 0)).unwrap();
        let slices =
            slice_sharpes(&r, 252, 10, SliceScheme::Contiguous, &mut substream(1, 0)).unwrap();
        assert_eq!(slices.n_buckets(), 10);
        assert!(slices.flip_mask.is_empty());
        assert_eq!(slices.original_sr, slices.modified_sr);
    }

    #[test]
    fn strided_slicing_groups_by_position() {
        // Day d carries return d as a value; slice i must then hold values
        // congruent to i mod 5.
        let data: Vec<f64> = (0..100)
            .map(|d| d as f64 + 0.1 * ((d * d) % 7) as f64)
            .collect();
        let byhand: Vec<f64> = (0..5)
            .map(|i| {
                let vals: Vec<f64> = data.iter().skip(i).step_by(5).copied().collect();
                realized_sharpe(&vals, 252).unwrap()
            })
            .collect();
        let slices =
            slice_sharpes(&data, 252, 5, SliceScheme::Strided, &mut substream(1, 0)).unwrap();
        for (a, b) in slices.slice_sharpes.iter().zip(byhand.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_assignment_uses_every_day_once() {
        let data: Vec<f64> = (0..200).map(|d| (d as f64).sin() * 0.01 + 0.0001).collect();
        let a = slice_sharpes(
            &data,
            252,
            5,
            SliceScheme::RandomAssignment,
            &mut substream(3, 1),
        )
        .unwrap();
        // Mean of slice means equals the global mean no matter the deal, so
        // the slice-average Sharpe should sit near the realized one.
        let sr = realized_sharpe(&data, 252).unwrap();
        assert!((a.original_sr - sr).abs() < 1.0);
        assert_eq!(a.n_buckets(), 5);
    }

    #[test]
    fn thin_slices_are_rejected() {
        let data = vec![0.01f64; 100];
        assert!(matches!(
            slice_sharpes(
                &data,
                252,
                10,
                SliceScheme::Contiguous,
                &mut substream(1, 0)
            ),
            Err(Error::SliceTooThin {
                days_per_slice: 10,
                ..
            })
        ));
    }

    #[test]
    fn series_is_truncated_to_a_bucket_multiple() {
        let cfg = config();
        let mut r = simulate_daily_pnl(&cfg, &mut substream(cfg.seed, 0)).unwrap();
        r.truncate(5045); // 5 stray days
        let slices =
            slice_sharpes(&r, 252, 10, SliceScheme::Contiguous, &mut substream(1, 0)).unwrap();
        let direct = realized_sharpe(&r[..5040], 252).unwrap();
        // The slice average approximates the Sharpe of the truncated series.
        assert!((slices.original_sr - direct).abs() < 0.1);
    }
}
