//! Brute-force oracle for the conditioned tweak density, built on the
//! auxiliary variables `U` (mean contribution of the flipped slices) and
//! `V` (the rest), which are independent Gaussians:
//!
//! ```text
//! U ~ N(f * sr_true,      sqrt(f)     * sigma_tot)
//! V ~ N((1 - f) * sr_true, sqrt(1 - f) * sigma_tot)
//! SR = U + V,  SR_m = V - U
//! rho(y) = ∫∫ P(U) Q(V) 1{U + V < theta} delta(y + U - V) dU dV / P(SR < theta)
//!        = ∫_{-inf}^{(theta - y)/2} P(u) Q(u + y) du / P(SR < theta)
//! ```
//!
//! Everything here is deliberately independent of the library's evaluation
//! path: densities are raw Gaussian products, the CDF comes straight from
//! `libm::erfc`, and integration is a self-contained adaptive Simpson rule
//! rather than the library's Gauss–Kronrod.

#![allow(dead_code)]

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn gauss_pdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    (-0.5 * z * z).exp() / (sd * SQRT_2PI)
}

fn std_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn simpson(a: f64, fa: f64, fm: f64, b: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, flm, m, fm);
    let right = simpson(m, fm, frm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, fa, lm, flm, m, fm, left, tol / 2.0, depth - 1)
        + adapt(f, m, fm, rm, frm, b, fb, right, tol / 2.0, depth - 1)
}

/// Self-contained adaptive Simpson integration.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    // Seed with a handful of panels so narrow interior features are seen.
    let n_seed = 16;
    let mut total = 0.0;
    for i in 0..n_seed {
        let lo = a + (b - a) * f64::from(i) / f64::from(n_seed);
        let hi = a + (b - a) * f64::from(i + 1) / f64::from(n_seed);
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = simpson(lo, flo, fmid, hi, fhi);
        total += adapt(
            f,
            lo,
            flo,
            mid,
            fmid,
            hi,
            fhi,
            whole,
            tol / f64::from(n_seed),
            52,
        );
    }
    total
}

/// Oracle over the (U, V) pair for one parameter point.
pub struct UvOracle {
    pub sr_true: f64,
    pub theta: f64,
    pub f: f64,
    pub sigma_tot: f64,
    mu_u: f64,
    sd_u: f64,
    mu_v: f64,
    sd_v: f64,
    p_fail: f64,
}

impl UvOracle {
    /// `sigma_tot` recomputed from first principles; `correction` keeps the
    /// `sr_daily^2/2` term (the acceptance grid runs with it off).
    pub fn new(sr_true: f64, theta: f64, f: f64, t_years: f64, correction: bool) -> Self {
        let extra = if correction {
            (sr_true / 252.0_f64.sqrt()).powi(2) / 2.0
        } else {
            0.0
        };
        let sigma_tot = ((1.0 + extra) / t_years).sqrt();
        let p_fail = std_cdf((theta - sr_true) / sigma_tot);
        UvOracle {
            sr_true,
            theta,
            f,
            sigma_tot,
            mu_u: f * sr_true,
            sd_u: f.sqrt() * sigma_tot,
            mu_v: (1.0 - f) * sr_true,
            sd_v: (1.0 - f).sqrt() * sigma_tot,
            p_fail,
        }
    }

    /// Density of `SR_m` conditioned on `SR < theta`, at `y`.
    pub fn rho(&self, y: f64) -> f64 {
        let cutoff = 0.5 * (self.theta - y);
        // The U-integrand is the product of two Gaussians in u; a window
        // around both centers covers all its mass.
        let c1 = self.mu_u;
        let c2 = self.mu_v - y;
        let spread = 14.0 * self.sd_u.max(self.sd_v);
        let lo = c1.min(c2) - spread;
        let hi = (c1.max(c2) + spread).min(cutoff);
        if hi <= lo {
            return 0.0;
        }
        let integrand =
            |u: f64| gauss_pdf(u, self.mu_u, self.sd_u) * gauss_pdf(u + y, self.mu_v, self.sd_v);
        adaptive_simpson(&integrand, lo, hi, 1e-14) / self.p_fail
    }

    fn tail_window(&self) -> (f64, f64) {
        let mu_m = (1.0 - 2.0 * self.f) * self.sr_true;
        (self.theta, self.theta.max(mu_m) + 14.0 * self.sigma_tot)
    }

    /// `p(SR_m > theta | SR < theta)`.
    pub fn tail_prob(&self) -> f64 {
        let (lo, hi) = self.tail_window();
        adaptive_simpson(&|y| self.rho(y), lo, hi, 1e-13)
    }

    /// `E[SR_m | SR_m > theta, SR < theta]`.
    pub fn tail_mean(&self) -> f64 {
        let (lo, hi) = self.tail_window();
        let mass = adaptive_simpson(&|y| self.rho(y), lo, hi, 1e-13);
        let first = adaptive_simpson(&|y| y * self.rho(y), lo, hi, 1e-13);
        first / mass
    }

    /// Mean of a normal truncated below at `lower`, by direct quadrature.
    pub fn truncated_mean(mean: f64, sd: f64, lower: f64) -> f64 {
        let hi = lower.max(mean) + 14.0 * sd;
        let mass = adaptive_simpson(&|x| gauss_pdf(x, mean, sd), lower, hi, 1e-14);
        let first = adaptive_simpson(&|x| x * gauss_pdf(x, mean, sd), lower, hi, 1e-14);
        first / mass
    }
}

/// Deterministic parameter sampler for oracle comparisons: moderate ranges
/// where absolute tail masses are comfortably representable.
pub fn sample_params(rng_state: &mut u64) -> (f64, f64, f64, f64) {
    let mut next = || {
        // SplitMix64.
        *rng_state = rng_state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = *rng_state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    };
    let sr = 0.25 + 0.3 * next();
    let theta = 0.55 + 0.3 * next();
    let f = 0.02 + 0.23 * next();
    let t = 5.0 + 20.0 * next();
    (sr, theta, f, t)
}
