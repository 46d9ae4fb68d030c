//! Flip-mask selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::Real;

/// Number of slices a tweak flips: `round(f * N)` with ties rounding up.
///
/// A tweak that flips nothing is not a tweak; the `f -> 0` limit cannot be
/// reached through the slice mechanics, so a zero count is an error.
pub fn flip_count<F: Real>(n_buckets: usize, f: F) -> Result<usize> {
    if !(f >= F::zero() && f <= F::one()) {
        return Err(Error::invalid("f", "must lie in [0, 1]", f));
    }
    let scaled = (f.to_f64().unwrap_or(0.0) * n_buckets as f64 + 0.5).floor();
    let k = scaled as usize;
    if k == 0 {
        return Err(Error::FlipCountZero {
            f: f.to_string(),
            n_buckets,
        });
    }
    Ok(k.min(n_buckets))
}

/// Uniformly random subset of `round(f * N)` slice indices, sorted.
pub fn choose_flips_random<F: Real, R: Rng + ?Sized>(
    n_buckets: usize,
    f: F,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let k = flip_count(n_buckets, f)?;
    Ok(sample_indices(n_buckets, k, rng))
}

pub(crate) fn sample_indices<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut mask = rand::seq::index::sample(rng, n, k).into_vec();
    mask.sort_unstable();
    mask
}

/// Maximally overfitted flip choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaximalFlips {
    /// The `round(f * N)` slice indices with the smallest Sharpes, sorted.
    pub mask: Vec<usize>,
    /// Whether flipping this mask actually raises the Sharpe. With every
    /// slice positive even the best fixed-size mask makes things worse; the
    /// mask is still returned.
    pub improves: bool,
}

/// Deterministic flip choice that maximizes the modified Sharpe over all
/// masks of size `round(f * N)`: flipping negates a slice's contribution,
/// so the optimum flips the most negative slices. Ties break on the lower
/// slice index.
pub fn choose_flips_maximal<F: Real>(slice_sharpes: &[F], f: F) -> Result<MaximalFlips> {
    let k = flip_count(slice_sharpes.len(), f)?;
    let mut order: Vec<usize> = (0..slice_sharpes.len()).collect();
    order.sort_by(|&a, &b| {
        slice_sharpes[a]
            .partial_cmp(&slice_sharpes[b])
            .expect("slice Sharpes are comparable")
            .then(a.cmp(&b))
    });
    let mut mask: Vec<usize> = order[..k].to_vec();
    mask.sort_unstable();
    let masked_sum: F = mask.iter().map(|&i| slice_sharpes[i]).sum();
    Ok(MaximalFlips {
        mask,
        improves: masked_sum < F::zero(),
    })
}
