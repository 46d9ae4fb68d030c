//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test --test acceptance -- --nocapture`). Criterion
//! 11 (CLI byte determinism) lives in the CLI crate's acceptance target.

mod common;

use common::UvOracle;
use offlab::mc::metric;
use offlab::*;

const SEED: u64 = 0x0FF1AB;

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z = z ^ (z >> 31);
    (z >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn criterion_01_quoted_off_near_two() {
    let params = Params::new(0.4, 0.7, 0.05, 20.0).with_sr_correction(false);
    let off = overfit_report(&params).unwrap().off;
    assert!(
        (1.7..=2.4).contains(&off),
        "off = {off}, expected within [1.7, 2.4]"
    );
    println!("ACCEPTANCE 01 PASS: off(0.4, 0.7, 0.05, 20) = {off:.4} in [1.7, 2.4]");
}

#[test]
fn criterion_02_large_t_asymptote() {
    let params = Params::new(0.4, 0.7, 0.05, 500.0).with_sr_correction(false);
    let off = overfit_report(&params).unwrap().off;
    let asymptote = 0.7 / 0.36;
    let rel = ((off - asymptote) / asymptote).abs();
    assert!(
        rel < 0.02,
        "off(T=500) = {off}, asymptote {asymptote}, rel {rel}"
    );
    println!(
        "ACCEPTANCE 02 PASS: off(T=500) = {off:.5} within {:.2}% of {asymptote:.5}",
        rel * 100.0
    );
}

#[test]
fn criterion_03_forty_three_years() {
    let years = min_backtest_years(0.5, 0.999, Sides::TwoSided).unwrap();
    assert!(
        (42.8..=43.8).contains(&years),
        "min years = {years}, expected within [42.8, 43.8]"
    );
    println!("ACCEPTANCE 03 PASS: min_backtest_years(0.5, 0.999, two-sided) = {years:.2}");
}

#[test]
fn criterion_04_density_normalization() {
    let started = std::time::Instant::now();
    let mut state = SEED;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let sr = -0.3 + 1.0 * splitmix(&mut state);
        let theta = sr - 0.5 + 1.1 * splitmix(&mut state);
        let f = 0.005 + 0.89 * splitmix(&mut state);
        let t = 2.0 + 48.0 * splitmix(&mut state);
        let params = Params::new(sr, theta, f, t);
        let mass = TweakDensity::new(params).unwrap().normalization().unwrap();
        let gap = (mass - 1.0).abs();
        assert!(
            gap < 1e-8,
            "point {i} ({sr:.3}, {theta:.3}, {f:.3}, {t:.1}): |mass - 1| = {gap:e}"
        );
        worst = worst.max(gap);
    }
    println!(
        "ACCEPTANCE 04 PASS: |∫rho - 1| < 1e-8 at 100 random points (worst {worst:.2e}, {:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_05_oracle_equivalence() {
    let started = std::time::Instant::now();
    let mut state = SEED ^ 0x5EED;
    let five_digits = 5e-6;
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (sr, theta, f, t) = common::sample_params(&mut state);
        let params = Params::new(sr, theta, f, t).with_sr_correction(false);
        let oracle = UvOracle::new(sr, theta, f, t, false);
        let density = TweakDensity::new(params).unwrap();

        for step in 0..3 {
            let y = (1.0 - 2.0 * f) * sr + (f64::from(step) - 1.0) * 0.8 * density.sigma_tot();
            let got = density.pdf(y);
            let want = oracle.rho(y);
            if want > 1e-12 {
                let rel = ((got - want) / want).abs();
                assert!(rel < five_digits, "point {i} pdf({y:.3}): {got} vs {want}");
                worst = worst.max(rel);
            }
        }

        let tail = density.tail().unwrap();
        let want_prob = oracle.tail_prob();
        let want_mean = oracle.tail_mean();
        if want_prob > 1e-9 {
            let rel = ((tail.prob - want_prob) / want_prob).abs();
            assert!(
                rel < five_digits,
                "point {i} ({sr:.3}, {theta:.3}, {f:.3}, {t:.1}) poof: {} vs {want_prob}",
                tail.prob
            );
            worst = worst.max(rel);
        }
        let rel = ((tail.mean - want_mean) / want_mean).abs();
        assert!(
            rel < five_digits,
            "point {i} ({sr:.3}, {theta:.3}, {f:.3}, {t:.1}) tail mean: {} vs {want_mean}",
            tail.mean
        );
        worst = worst.max(rel);
    }
    println!(
        "ACCEPTANCE 05 PASS: rho pdf/tail match the (U,V) oracle to 5 digits at 20 points \
         (worst rel {worst:.2e}, {:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_06_mc_cross_check() {
    let started = std::time::Instant::now();
    let params = Params::new(0.3, 0.7, 0.025, 10.0).with_sr_correction(false);
    let analytic = overfit_report(&params).unwrap();

    let gaussian = run_one_off(&SimConfig::gaussian_slice(params, 40, SEED), 1_000_000).unwrap();
    let mut z_report = Vec::new();
    for (name, reference) in [
        (metric::POOF, analytic.poof),
        (metric::POA, analytic.poa),
        (metric::CORR_SR_SRM, 0.95),
    ] {
        let e = gaussian.estimate(name).unwrap();
        let z = (e.mean - reference) / e.std_error;
        assert!(z.abs() < 3.0, "gaussian {name}: z = {z}");
        z_report.push(format!("{name} z={z:+.2}"));
    }

    let path = run_one_off(&SimConfig::path_level(params, 40, SEED), 100_000).unwrap();
    for (name, reference) in [
        (metric::POOF, analytic.poof),
        (metric::POA, analytic.poa),
        (metric::CORR_SR_SRM, 0.95),
    ] {
        let e = path.estimate(name).unwrap();
        let z = (e.mean - reference) / e.std_error;
        assert!(z.abs() < 4.0, "path-level {name}: z = {z}");
        z_report.push(format!("path {name} z={z:+.2}"));
    }
    println!(
        "ACCEPTANCE 06 PASS: one-off MC matches analytics ({}; {:.1}s)",
        z_report.join(", "),
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_07_empirical_off() {
    let started = std::time::Instant::now();
    let params = Params::new(0.4, 0.7, 0.05, 20.0).with_sr_correction(false);
    let analytic = overfit_report(&params).unwrap();
    let mc = run_until_clear(
        &SimConfig::gaussian_slice(params, 40, SEED),
        100_000,
        DEFAULT_MAX_ATTEMPTS,
    )
    .unwrap();
    assert_eq!(mc.n_exhausted, 0);
    let off = mc.estimate(metric::OFF).unwrap();
    let z = (off.mean - analytic.off) / off.std_error;
    assert!(
        z.abs() < 3.0,
        "until-clear off {} +- {} vs analytic {} (z = {z})",
        off.mean,
        off.std_error,
        analytic.off
    );
    println!(
        "ACCEPTANCE 07 PASS: until-clear off = {:.4} vs analytic {:.4} (z = {z:+.2}, {:.1}s)",
        off.mean,
        analytic.off,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_08_n_independence() {
    let started = std::time::Instant::now();
    // f = 0.05 keeps f*N integral at both N=20 (1 flip) and N=100 (5 flips).
    let params = Params::new(0.3, 0.7, 0.05, 10.0).with_sr_correction(false);
    let a = run_one_off(&SimConfig::gaussian_slice(params, 20, SEED), 1_000_000).unwrap();
    let b = run_one_off(&SimConfig::gaussian_slice(params, 100, SEED ^ 1), 1_000_000).unwrap();
    let (ea, eb) = (
        a.estimate(metric::POOF).unwrap(),
        b.estimate(metric::POOF).unwrap(),
    );
    let z = (ea.mean - eb.mean) / (ea.std_error.powi(2) + eb.std_error.powi(2)).sqrt();
    assert!(
        z.abs() < 4.0,
        "poof N=20 {} vs N=100 {} (z = {z})",
        ea.mean,
        eb.mean
    );
    println!(
        "ACCEPTANCE 08 PASS: poof(N=20) = {:.5} vs poof(N=100) = {:.5} (z = {z:+.2}, {:.1}s)",
        ea.mean,
        eb.mean,
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_09_figure_shapes() {
    let started = std::time::Instant::now();

    // Figure 2: off nonincreasing in T, pointwise larger for lower sr_true.
    let fig2 = grid_evaluate(&GridSpec::<f64>::figure2()).unwrap();
    let off_at = |rows: &[GridPoint<f64>], i: usize| rows[i].report.as_ref().unwrap().off;
    let (n_sr, n_t) = (4usize, 21usize);
    for s in 0..n_sr {
        for t in 1..n_t {
            let prev = off_at(&fig2.rows, s * n_t + t - 1);
            let curr = off_at(&fig2.rows, s * n_t + t);
            assert!(
                curr <= prev + 1e-12,
                "fig2: off not nonincreasing in T at ({s},{t})"
            );
        }
    }
    for s in 1..n_sr {
        for t in 0..n_t {
            let lower_sr = off_at(&fig2.rows, (s - 1) * n_t + t);
            let higher_sr = off_at(&fig2.rows, s * n_t + t);
            assert!(
                lower_sr >= higher_sr - 1e-12,
                "fig2: lower sr_true curve not above at ({s},{t})"
            );
        }
    }

    // Figure 3: poof nonincreasing in T.
    let fig3 = grid_evaluate(&GridSpec::<f64>::figure3()).unwrap();
    for s in 0..n_sr {
        for t in 1..n_t {
            let prev = fig3.rows[s * n_t + t - 1].report.as_ref().unwrap().poof;
            let curr = fig3.rows[s * n_t + t].report.as_ref().unwrap().poof;
            assert!(
                curr <= prev + 1e-12,
                "fig3: poof not nonincreasing in T at ({s},{t})"
            );
        }
    }

    // Figure 4: off nondecreasing in f, lower sr_true above higher sr_true.
    let fig4 = grid_evaluate(&GridSpec::<f64>::figure4()).unwrap();
    let n_f = 19usize;
    for s in 0..n_sr {
        for i in 1..n_f {
            let prev = off_at(&fig4.rows, s * n_f + i - 1);
            let curr = off_at(&fig4.rows, s * n_f + i);
            assert!(
                curr >= prev - 1e-12,
                "fig4: off not nondecreasing in f at ({s},{i})"
            );
        }
    }
    for s in 1..n_sr {
        for i in 0..n_f {
            let lower_sr = off_at(&fig4.rows, (s - 1) * n_f + i);
            let higher_sr = off_at(&fig4.rows, s * n_f + i);
            assert!(
                lower_sr >= higher_sr - 1e-12,
                "fig4: lower sr_true curve not above at ({s},{i})"
            );
        }
    }

    // Figure 5: off nondecreasing in theta at fixed f, and in f at fixed theta.
    let fig5 = grid_evaluate(&GridSpec::<f64>::figure5()).unwrap();
    let n_theta = 4usize;
    for th in 0..n_theta {
        for i in 1..n_f {
            let prev = off_at(&fig5.rows, th * n_f + i - 1);
            let curr = off_at(&fig5.rows, th * n_f + i);
            assert!(
                curr >= prev - 1e-12,
                "fig5: off not nondecreasing in f at ({th},{i})"
            );
        }
    }
    for th in 1..n_theta {
        for i in 0..n_f {
            let lower = off_at(&fig5.rows, (th - 1) * n_f + i);
            let higher = off_at(&fig5.rows, th * n_f + i);
            assert!(
                higher >= lower - 1e-12,
                "fig5: off not nondecreasing in theta at ({th},{i})"
            );
        }
    }

    println!(
        "ACCEPTANCE 09 PASS: figure 2-5 preset grids satisfy every monotonicity property \
         ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_10_maximal_flip_brute_force() {
    let started = std::time::Instant::now();

    fn best_over_all_masks(sharpes: &[f64], k: usize) -> f64 {
        // Exhaustive enumeration of all C(N, k) masks.
        fn recurse(sharpes: &[f64], k: usize, start: usize, sum: f64, best: &mut f64) {
            if k == 0 {
                *best = best.max(-sum);
                return;
            }
            for i in start..=sharpes.len() - k {
                recurse(sharpes, k - 1, i + 1, sum + sharpes[i], best);
            }
        }
        let mut best_neg_sum = f64::NEG_INFINITY;
        recurse(sharpes, k, 0, 0.0, &mut best_neg_sum);
        let n = sharpes.len() as f64;
        let mean = sharpes.iter().sum::<f64>() / n;
        mean + 2.0 / n * best_neg_sum
    }

    let mut state = SEED ^ 0xB0B;
    let mut checked = 0usize;
    for trial in 0..100 {
        let n = 2 + (splitmix(&mut state) * 11.0) as usize; // 2..=12
        let sharpes: Vec<f64> = (0..n).map(|_| -2.0 + 4.0 * splitmix(&mut state)).collect();
        for k in 1..=n {
            let f = k as f64 / n as f64;
            let choice = choose_flips_maximal(&sharpes, f).unwrap();
            assert_eq!(choice.mask.len(), k, "trial {trial}: mask size");
            let set = SliceSet::new(sharpes.clone());
            let greedy = set.modified_for_mask(&choice.mask);
            let brute = best_over_all_masks(&sharpes, k);
            assert!(
                greedy >= brute - 1e-12,
                "trial {trial} N={n} k={k}: greedy {greedy} < brute {brute}"
            );
            checked += 1;
        }
    }
    println!(
        "ACCEPTANCE 10 PASS: maximal flips attain the exhaustive optimum over {checked} \
         (N, k) cases ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}
