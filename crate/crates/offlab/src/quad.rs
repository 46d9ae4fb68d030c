//! Adaptive Gauss–Kronrod quadrature (7/15 point rule).
//!
//! Plain recursive bisection: each panel is accepted once the G7/K15
//! difference meets its share of the tolerance budget, otherwise it is split.
//! The integrands in this crate are smooth and rapidly decaying, so a simple
//! scheme with explicit panel edges at known features is both sufficient and
//! easy to audit.

use crate::error::{Error, Result};
use crate::real::{cast, Real};

/// Kronrod abscissae for the 15-point rule (positive half, descending).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];

/// Gauss weights for the embedded 7-point rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// Kronrod weights for the 15-point rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

const MAX_DEPTH: u32 = 48;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<F> {
    pub value: F,
    /// Accumulated estimate of the absolute error.
    pub abs_error: F,
    pub evaluations: usize,
}

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<F> {
    pub abs: F,
    pub rel: F,
}

impl<F: Real> Default for Tolerance<F> {
    fn default() -> Self {
        // 1e-12 absolute / 1e-10 relative in f64; floored at a multiple of
        // the scalar's epsilon so lower-precision instantiations can still
        // converge.
        let eps = F::epsilon();
        Tolerance {
            abs: cast::<F>(1e-12).max(eps * cast(32.0)),
            rel: cast::<F>(1e-10).max(eps * cast(16.0)),
        }
    }
}

/// Single G7/K15 evaluation on `[a, b]`; returns (kronrod, |kronrod - gauss|).
fn gk15<F: Real, G: FnMut(F) -> F>(f: &mut G, a: F, b: F) -> (F, F) {
    let half = cast::<F>(0.5);
    let center = (a + b) * half;
    let half_len = (b - a) * half;

    let f_center = f(center);
    let mut kronrod = f_center * cast::<F>(WGK[7]);
    let mut gauss = f_center * cast::<F>(WG[3]);

    for j in 0..7 {
        let x = half_len * cast::<F>(XGK[j]);
        let f1 = f(center - x);
        let f2 = f(center + x);
        let fsum = f1 + f2;
        kronrod += fsum * cast::<F>(WGK[j]);
        if j % 2 == 1 {
            gauss += fsum * cast::<F>(WG[j / 2]);
        }
    }

    kronrod *= half_len;
    gauss *= half_len;
    (kronrod, (kronrod - gauss).abs())
}

fn adapt<F: Real, G: FnMut(F) -> F>(
    f: &mut G,
    a: F,
    b: F,
    tol: F,
    rel: F,
    depth: u32,
    evals: &mut usize,
) -> Result<(F, F)> {
    *evals += 15;
    let (value, err) = gk15(f, a, b);
    if err <= tol || err <= rel * value.abs() {
        return Ok((value, err));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureNonConvergence {
            error_estimate: err.to_f64().unwrap_or(f64::NAN),
            evaluations: *evals,
            lo: a.to_f64().unwrap_or(f64::NAN),
            hi: b.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mid = (a + b) * cast::<F>(0.5);
    let half_tol = tol * cast::<F>(0.5);
    let (lv, le) = adapt(f, a, mid, half_tol, rel, depth + 1, evals)?;
    let (rv, re) = adapt(f, mid, b, half_tol, rel, depth + 1, evals)?;
    Ok((lv + rv, le + re))
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Real, G: FnMut(F) -> F>(
    mut f: G,
    a: F,
    b: F,
    tol: Tolerance<F>,
) -> Result<QuadResult<F>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("bounds", "must be finite", "inf"));
    }
    if a == b {
        return Ok(QuadResult {
            value: F::zero(),
            abs_error: F::zero(),
            evaluations: 0,
        });
    }
    let mut evals = 0usize;
    let (value, abs_error) = adapt(&mut f, a, b, tol.abs, tol.rel, 0, &mut evals)?;
    Ok(QuadResult {
        value,
        abs_error,
        evaluations: evals,
    })
}

/// Integrate over consecutive panels `[edges[0], edges[1]], ...`, sharing the
/// absolute tolerance across panels. Edges must be sorted ascending; repeated
/// edges contribute nothing.
pub fn integrate_panels<F: Real, G: FnMut(F) -> F>(
    mut f: G,
    edges: &[F],
    tol: Tolerance<F>,
) -> Result<QuadResult<F>> {
    assert!(edges.len() >= 2, "need at least two panel edges");
    let n_panels = cast::<F>((edges.len() - 1) as f64);
    let panel_tol = Tolerance {
        abs: tol.abs / n_panels,
        rel: tol.rel,
    };
    let mut total = QuadResult {
        value: F::zero(),
        abs_error: F::zero(),
        evaluations: 0,
    };
    for pair in edges.windows(2) {
        let r = integrate(&mut f, pair[0], pair[1], panel_tol)?;
        total.value += r.value;
        total.abs_error += r.abs_error;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}
