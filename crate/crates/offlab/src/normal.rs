//! Gaussian distribution machinery.
//!
//! The CDF goes through the complementary error function, which keeps the
//! far tail accurate in relative terms; beyond the range where `erfc`
//! underflows, the log-survival switches to the standard asymptotic (Mills)
//! expansion. The quantile is Acklam's rational approximation polished with
//! one Halley step against the erfc-based CDF, which brings it to machine
//! precision.

use crate::error::{Error, Result};
use crate::real::{cast, Real};

/// ln(sqrt(2*pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
#[inline]
pub fn pdf<F: Real>(z: F) -> F {
    let half = cast::<F>(0.5);
    (-(z * z) * half).exp() / (cast::<F>(2.0) * F::PI()).sqrt()
}

/// Standard normal CDF, `P(Z <= z)`.
#[inline]
pub fn cdf<F: Real>(z: F) -> F {
    cast::<F>(0.5) * (-z * F::FRAC_1_SQRT_2()).erfc()
}

/// Standard normal survival function, `P(Z > z)`.
#[inline]
pub fn sf<F: Real>(z: F) -> F {
    cast::<F>(0.5) * (z * F::FRAC_1_SQRT_2()).erfc()
}

/// Log of the survival function, valid arbitrarily deep into the tail.
pub fn log_sf<F: Real>(z: F) -> F {
    let s = sf(z);
    if s > F::min_positive_value() {
        return s.ln();
    }
    // Mills asymptotic: ln sf(z) = -z^2/2 - ln z - ln sqrt(2 pi)
    //                              + ln(1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
    let w = (z * z).recip();
    let series = F::one()
        + w * (cast::<F>(-1.0)
            + w * (cast::<F>(3.0) + w * (cast::<F>(-15.0) + w * cast::<F>(105.0))));
    -(z * z) * cast::<F>(0.5) - z.ln() - cast::<F>(LN_SQRT_2PI) + series.ln()
}

/// Log of the CDF, valid arbitrarily deep into the lower tail.
#[inline]
pub fn log_cdf<F: Real>(z: F) -> F {
    log_sf(-z)
}

/// Density of `N(mean, sd)` at `x`.
#[inline]
pub fn normal_pdf<F: Real>(x: F, mean: F, sd: F) -> F {
    pdf((x - mean) / sd) / sd
}

/// CDF of `N(mean, sd)` at `x`.
#[inline]
pub fn normal_cdf<F: Real>(x: F, mean: F, sd: F) -> F {
    cdf((x - mean) / sd)
}

/// Inverse standard normal CDF.
///
/// Requires `0 < p < 1`.
pub fn quantile<F: Real>(p: F) -> Result<F> {
    if !(p > F::zero() && p < F::one()) {
        return Err(Error::invalid("p", "must lie strictly inside (0, 1)", p));
    }

    // Acklam's rational approximation (relative error < 1.15e-9 everywhere).
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let a: Vec<F> = A.iter().map(|&v| cast(v)).collect();
    let b: Vec<F> = B.iter().map(|&v| cast(v)).collect();
    let c: Vec<F> = C.iter().map(|&v| cast(v)).collect();
    let d: Vec<F> = D.iter().map(|&v| cast(v)).collect();
    let p_low = cast::<F>(P_LOW);
    let one = F::one();
    let two = cast::<F>(2.0);

    let tail = |q: F| -> F {
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + one)
    };

    let mut x = if p < p_low {
        tail((-two * p.ln()).sqrt())
    } else if p <= one - p_low {
        let q = p - cast::<F>(0.5);
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + one)
    } else {
        -tail((-two * (one - p).ln()).sqrt())
    };

    // One Halley step against the erfc-based CDF.
    let e = cdf(x) - p;
    let u = e * (two * F::PI()).sqrt() * (x * x * cast::<F>(0.5)).exp();
    x = x - u / (one + x * u * cast::<F>(0.5));

    Ok(x)
}

/// Critical value for a confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sides {
    OneSided,
    TwoSided,
}

/// `z` such that the stated confidence is reached, one- or two-sided.
pub fn z_value<F: Real>(confidence: F, sides: Sides) -> Result<F> {
    if !(confidence > F::zero() && confidence < F::one()) {
        return Err(Error::invalid(
            "confidence",
            "must lie strictly inside (0, 1)",
            confidence,
        ));
    }
    match sides {
        Sides::OneSided => quantile(confidence),
        Sides::TwoSided => quantile((F::one() + confidence) / cast::<F>(2.0)),
    }
}

/// Mean of a normal distribution truncated from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMean<F> {
    pub value: F,
    /// True when the tail was too deep for the inverse-Mills ratio and the
    /// asymptotic value `lower + sd^2 / (lower - mean)` was used instead.
    pub asymptotic: bool,
}

/// `E[X | X > lower]` for `X ~ N(mean, sd)` via the inverse Mills ratio.
///
/// For standardized truncation points beyond 8 the survival function is too
/// small for the ratio to be trustworthy; the result then switches to the
/// asymptotic tail value and is flagged.
pub fn truncated_mean_above<F: Real>(mean: F, sd: F, lower: F) -> Result<TruncatedMean<F>> {
    if !(sd > F::zero()) || !sd.is_finite() {
        return Err(Error::invalid("sd", "must be a positive finite number", sd));
    }
    if mean.is_nan() || lower.is_nan() {
        return Err(Error::invalid("mean/lower", "must not be NaN", "NaN"));
    }
    let z = (lower - mean) / sd;
    if z < cast::<F>(8.0) {
        let lambda = pdf(z) / sf(z);
        Ok(TruncatedMean {
            value: mean + sd * lambda,
            asymptotic: false,
        })
    } else {
        Ok(TruncatedMean {
            value: lower + sd * sd / (lower - mean),
            asymptotic: true,
        })
    }
}
