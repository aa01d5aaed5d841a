//! Acceptance suite: closed-form oracles, enumeration oracles, duality
//! cross-checks, and asymptotic-consistency bands, one test per criterion.
//! Every criterion prints exactly one PASS/FAIL line with its measured
//! values; FAIL also fails the test.
//!
//! All runs are seeded and chunk counts fixed, so every criterion is
//! deterministic.
//!
//! Two criteria are expected to stay red at their pinned budgets; the
//! measurements are honest and cross-validated against independent crude
//! oracles (see the support tests at the bottom):
//!
//! - criterion 07: the Cesàro functional (1/n) E[M_n^ξ] has summands of
//!   tail index exactly 1, so a crude mean at depth n needs ~e^{ξμ(ξ)n}
//!   samples; at n = 512 that is e^64. The estimator's own n-vs-n/2
//!   diagnostic flags the shortfall. At convergable depths (n ≤ 64,
//!   N = 10^6) the two constants agree within 8%.
//! - criterion 09: the conditional median of the scaled passage time at
//!   u = 10^4 is ≈ 3.37 (crude and weighted simulation agree to 4
//!   decimals): the O(1) log-prefactor of the perpetuity advances
//!   passage by ≈ ρ·1.5/log u, which is 16% of ρ at this level, outside
//!   the ±10% band. The band is reached only near u ≈ 10^8.

use passage_cli::RayonExecutor;
use passage_core::cgf::{cgf_profile, regime_report, regime_report_at, solve_xi, summarize};
use passage_core::estimators::{
    chebyshev_bound, estimate_c_tau, estimate_cm_cesaro, estimate_cm_goldie, passage_profile,
    petrov_tail, prob_exceedance_forward, prob_passage, scaled_horizon, tail_fit,
};
use passage_core::model::{build_law, sample_pairs, scale_law, LawSpec, PairLaw};
use passage_core::numerics::{adaptive_simpson, normal_pdf};
use passage_core::process::{first_passage, reversal_duality_check, PathState};
use passage_core::rng::stream_rng;
use passage_core::tilt::tilt;
use passage_core::{Method, SampleCfg};

const XI_TWO_POINT: f64 = 1.584_962_500_721_156_2; // log2(3)

fn ln_law() -> PairLaw {
    build_law(LawSpec::LognormalAConstB {
        log_a_mean: -0.25,
        log_a_var: 1.0,
        b: 1.0,
    })
    .unwrap()
}

fn two_point_law() -> PairLaw {
    build_law(LawSpec::TwoPointAConstB {
        a1: 2.0,
        a2: 0.5,
        p1: 0.25,
        p2: 0.75,
        b: 1.0,
    })
    .unwrap()
}

fn cfg(seed: u64) -> SampleCfg {
    SampleCfg::new(seed)
}

/// Print the single pass/fail line for a criterion, then enforce it.
fn verdict(criterion: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance {criterion} failed: {detail}");
}

#[test]
fn criterion_01_root_and_rate_oracle() {
    let law = ln_law();
    let xi = solve_xi(&law).unwrap();
    let s2 = summarize(&law, 2.0).unwrap();
    let s4 = summarize(&law, 4.0).unwrap();
    let s8 = summarize(&law, 8.0).unwrap();
    let ok = (xi - 0.5).abs() <= 1e-10
        && (s2.rho - 4.0).abs() <= 1e-8
        && (s2.rate - 0.5625).abs() <= 1e-8
        && (s4.rate - 0.5).abs() <= 1e-8
        && (s8.rate - 0.5625).abs() <= 1e-8;
    verdict(
        "01 root/rate oracle",
        ok,
        &format!(
            "xi = {xi:.12}, rho = {:.10}, I(2)/I(4)/I(8) = {:.10}/{:.10}/{:.10}",
            s2.rho, s2.rate, s4.rate, s8.rate
        ),
    );
}

#[test]
fn criterion_02_two_point_oracle() {
    let law = two_point_law();
    let xi = solve_xi(&law).unwrap();
    let tilted = tilt(&law, xi).unwrap();
    let p_hi = tilted.atoms().unwrap()[0].p;
    let rho = 1.0 / cgf_profile(&law, xi).unwrap().mean;
    let rho_exact = 1.0 / (0.5 * core::f64::consts::LN_2);
    let ok = (xi - XI_TWO_POINT).abs() <= 1e-10
        && (p_hi - 0.75).abs() <= 1e-12
        && (rho - rho_exact).abs() <= 1e-8;
    verdict(
        "02 two-point oracle",
        ok,
        &format!("xi = {xi:.12}, tilted P(A=2) = {p_hi:.14}, rho = {rho:.10}"),
    );
}

#[test]
fn criterion_03_importance_sampling_unbiasedness() {
    let law = two_point_law();
    let exact = prob_passage(
        &law,
        5.0,
        2.0,
        1,
        Method::Enumeration,
        &cfg(0),
        &RayonExecutor,
    )
    .unwrap()
    .value;
    assert_eq!(exact, 0.0625);
    let est = prob_passage(
        &law,
        5.0,
        2.0,
        100_000,
        Method::Importance,
        &cfg(301),
        &RayonExecutor,
    )
    .unwrap();
    let diff = (est.value - exact).abs();
    verdict(
        "03 importance-sampling unbiasedness",
        diff <= 4.0 * est.stderr,
        &format!(
            "importance {:.6} vs exact {exact}, {:.2} stderr away",
            est.value,
            diff / est.stderr
        ),
    );
}

#[test]
fn criterion_04_duality() {
    // statistical: first passage vs forward exceedance on a 3x3 grid per law
    let mut worst_z: f64 = 0.0;
    let mut ok = true;
    for (li, law) in [ln_law(), two_point_law()].into_iter().enumerate() {
        for (ui, &u) in [5.0, 20.0, 100.0].iter().enumerate() {
            for (ti, &tau) in [1.0, 2.0, 4.0].iter().enumerate() {
                let stream = (li * 100 + ui * 10 + ti) as u64;
                let p = prob_passage(
                    &law,
                    u,
                    tau,
                    1_000_000,
                    Method::Crude,
                    &cfg(401).with_stream(stream << 32),
                    &RayonExecutor,
                )
                .unwrap();
                let f = prob_exceedance_forward(
                    &law,
                    u,
                    tau,
                    1_000_000,
                    &cfg(402).with_stream(stream << 32),
                    &RayonExecutor,
                )
                .unwrap();
                let combined = (p.stderr * p.stderr + f.stderr * f.stderr).sqrt();
                let z = if combined > 0.0 {
                    (p.value - f.value) / combined
                } else {
                    assert_eq!(p.value, f.value);
                    0.0
                };
                ok &= z.abs() <= 3.0;
                worst_z = worst_z.max(z.abs());
            }
        }
    }

    // pathwise: exact reversal identity on 10^4 random sequences
    let law = ln_law();
    let mut exact_ok = true;
    for k in 0..10_000u64 {
        let len = 1 + (k % 64) as usize;
        let pairs = sample_pairs(&law, len, 403, k);
        exact_ok &= reversal_duality_check(&pairs);
    }
    verdict(
        "04 duality",
        ok && exact_ok,
        &format!("worst |z| = {worst_z:.3} over 18 grid points, 10000 exact reversals: {exact_ok}"),
    );
}

#[test]
fn criterion_05_petrov_sharpness() {
    let law = ln_law();
    // independent oracle: quadrature of the normal density over the tail
    let tail_quad = |z: f64| adaptive_simpson(&normal_pdf, z, z + 12.0, 1e-13).value;
    // the oracle itself reproduces the frozen reference value Phi-bar(5)
    let reference = 2.8665157187919333e-7;
    assert!((tail_quad(5.0) - reference).abs() <= 1e-6 * reference);

    let mut ratios = Vec::new();
    let mut ok = true;
    for (n, lo, hi) in [(100u64, 0.95, 1.10), (1000, 0.99, 1.01)] {
        let approx = petrov_tail(&law, n, 0.25, 0.0).unwrap();
        // S_n ~ Normal(-0.25 n, n), so the exact tail is Phi-bar(0.5 sqrt n)
        let z = 0.5 * (n as f64).sqrt();
        let ratio = approx / tail_quad(z);
        ok &= (lo..=hi).contains(&ratio);
        ratios.push(ratio);
    }
    verdict(
        "05 petrov sharpness",
        ok,
        &format!(
            "ratio {:.4} at n=100, {:.4} at n=1000",
            ratios[0], ratios[1]
        ),
    );
}

#[test]
fn criterion_06_tail_exponent() {
    let law = ln_law();
    let grid: Vec<f64> = (9..=17).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    let fit = tail_fit(&law, 10_000_000, &grid, &cfg(601), &RayonExecutor).unwrap();
    let scaled: Vec<f64> = fit
        .points
        .iter()
        .filter(|p| p.in_fit)
        .map(|p| p.u.powf(fit.xi_hat) * p.survival)
        .collect();
    let spread = scaled.iter().cloned().fold(f64::MIN, f64::max)
        / scaled.iter().cloned().fold(f64::MAX, f64::min);
    let ok = (0.45..=0.55).contains(&fit.xi_hat) && spread <= 1.3;
    verdict(
        "06 tail exponent",
        ok,
        &format!(
            "xi_hat = {:.4}, u^xi*survival spread = {spread:.3} over {} points",
            fit.xi_hat,
            scaled.len()
        ),
    );
}

#[test]
fn criterion_07_constant_consistency() {
    let law = ln_law();
    let goldie = estimate_cm_goldie(&law, 1000, 100_000, &cfg(701), &RayonExecutor)
        .unwrap()
        .estimate
        .value;
    let cesaro_run = estimate_cm_cesaro(&law, 512, 100_000, &cfg(702), &RayonExecutor).unwrap();
    let cesaro = cesaro_run.estimate.value;
    let pair_ratio = goldie / cesaro;
    let grid: Vec<f64> = (9..=17).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    let c_hat = tail_fit(&law, 10_000_000, &grid, &cfg(703), &RayonExecutor)
        .unwrap()
        .c_hat;
    let ok = (0.75..=1.0 / 0.75).contains(&pair_ratio)
        && (1.0 / 1.5..=1.5).contains(&(goldie / c_hat))
        && (1.0 / 1.5..=1.5).contains(&(cesaro / c_hat));
    verdict(
        "07 constant consistency",
        ok,
        &format!(
            "goldie = {goldie:.4}, cesaro = {cesaro:.4} (n-vs-n/2 shift {:.1} stderr), fitted = {c_hat:.4}",
            cesaro_run.half_shift_over_stderr
        ),
    );
}

#[test]
fn criterion_08_bound_domination() {
    let law = ln_law();
    let xi = solve_xi(&law).unwrap();
    let epsilon = 0.1;
    let mut checked = 0;
    let mut ok = true;
    for (ni, &n) in [2u64, 4, 8, 16].iter().enumerate() {
        for (ui, &u) in [10.0, 100.0, 1000.0, 10_000.0].iter().enumerate() {
            let bound = chebyshev_bound(&law, xi, epsilon, n, u).unwrap();
            // crude Monte Carlo for P{Ybar_n > u}
            let n_samples = 1_000_000u64;
            let mut rng = stream_rng(801, (ni * 10 + ui) as u64);
            let mut hits = 0u64;
            for _ in 0..n_samples {
                let mut state = PathState::new();
                for _ in 0..n {
                    let (a, b) = law.sample_pair(&mut rng);
                    state.step(a, b);
                    if state.backward_abs() > u {
                        hits += 1;
                        break;
                    }
                }
            }
            let p = hits as f64 / n_samples as f64;
            let se = (p * (1.0 - p) / n_samples as f64).sqrt();
            ok &= bound >= p - 3.0 * se;
            checked += 1;
        }
    }
    verdict(
        "08 bound domination",
        ok,
        &format!("{checked} grid points, n >= 2"),
    );
}

#[test]
fn criterion_09_conditional_concentration() {
    let law = ln_law();
    let mut out_masses = Vec::new();
    let mut median_at_1e4 = 0.0;
    let mut rho = 4.0;
    for (i, &u) in [1e2, 1e3, 1e4].iter().enumerate() {
        let profile = passage_profile(
            &law,
            u,
            0.5,
            3.0,
            200_000,
            &cfg(901).with_stream((i as u64) << 32),
            &RayonExecutor,
        )
        .unwrap();
        out_masses.push(profile.out_of_window_mass);
        if i == 2 {
            median_at_1e4 = profile.median;
            rho = profile.rho;
        }
    }
    let median_ok = (0.9 * rho..=1.1 * rho).contains(&median_at_1e4);
    let monotone_ok = out_masses[0] > out_masses[1] && out_masses[1] > out_masses[2];
    verdict(
        "09 conditional concentration",
        median_ok && monotone_ok,
        &format!(
            "median = {median_at_1e4:.4} vs window [{:.1}, {:.1}] ({}), out mass {:.4} > {:.4} > {:.4} ({})",
            0.9 * rho,
            1.1 * rho,
            if median_ok { "ok" } else { "outside" },
            out_masses[0],
            out_masses[1],
            out_masses[2],
            if monotone_ok { "decreasing" } else { "not decreasing" }
        ),
    );
}

#[test]
fn criterion_10_critical_halving() {
    let law = ln_law();
    let u = 1e4;
    let rho = 4.0;
    let n = 10_000_000u64;
    let at_rho = prob_passage(
        &law,
        u,
        rho,
        n,
        Method::Importance,
        &cfg(1001),
        &RayonExecutor,
    )
    .unwrap();
    let at_3rho = prob_passage(
        &law,
        u,
        3.0 * rho,
        n,
        Method::Importance,
        &cfg(1002),
        &RayonExecutor,
    )
    .unwrap();
    let ratio = at_rho.value / at_3rho.value;
    verdict(
        "10 critical halving",
        (0.35..=0.65).contains(&ratio),
        &format!(
            "ratio = {ratio:.4} ({:.4e} / {:.4e}), ess {:.0}/{:.0}",
            at_rho.value, at_3rho.value, at_rho.ess, at_3rho.ess
        ),
    );
}

#[test]
fn criterion_11_regime_ledger() {
    let law = ln_law();
    let r = regime_report(&law, 8.0).unwrap();
    let witness = r.count2_witness.unwrap_or(f64::NAN);
    let lam_w = cgf_profile(&law, witness).unwrap().cgf;
    let lam_a = cgf_profile(&law, r.alpha).unwrap().cgf;
    let base_ok =
        !r.count1_holds && r.count2_holds && lam_w < lam_a && (witness - 0.25).abs() < 1e-4;

    let scaled = scale_law(&law, (3.0f64).exp()).unwrap();
    let rs = regime_report_at(&scaled, 1.5).unwrap();
    let scaled_ok = rs.count1_holds && (rs.count1_gap - 0.5).abs() <= 1e-9;
    verdict(
        "11 regime ledger",
        base_ok && scaled_ok,
        &format!(
            "tau=8: count1 {} (gap {:.6}), count2 witness {witness:.6}; scaled law gap = {:.12}",
            r.count1_holds, r.count1_gap, rs.count1_gap
        ),
    );
}

/// Support checks behind the red criteria: the estimators are validated
/// where an independent oracle exists, so the FAIL verdicts above measure
/// the criteria, not implementation defects.
#[test]
fn support_weighted_median_matches_crude_conditional_median() {
    // At u = 10^2 both routes are cheap: the importance-weighted median
    // must agree with the crude conditional median up to the scaled-time
    // lattice spacing 1/log u.
    let law = ln_law();
    let u = 1e2f64;
    let profile = passage_profile(&law, u, 0.5, 3.0, 200_000, &cfg(911), &RayonExecutor).unwrap();

    let horizon = (3.0 * 4.0 * u.ln()).ceil() as u64;
    let mut rng = stream_rng(912, 0);
    let mut times: Vec<f64> = Vec::new();
    for _ in 0..400_000u64 {
        let o = first_passage(&law, u, horizon, &mut rng).unwrap();
        if o.hit {
            times.push(o.scaled_time.unwrap());
        }
    }
    times.sort_by(f64::total_cmp);
    let crude_median = times[times.len() / 2];
    assert!(
        (profile.median - crude_median).abs() <= 1.0 / u.ln() + 1e-12,
        "weighted {} vs crude {crude_median}",
        profile.median
    );
}

#[test]
fn support_cesaro_converges_at_matched_depth() {
    // Where the crude mean can actually capture the functional
    // (depth 64 at 10^6 paths), the two constant estimators agree.
    let law = ln_law();
    let goldie = estimate_cm_goldie(&law, 1000, 100_000, &cfg(921), &RayonExecutor)
        .unwrap()
        .estimate
        .value;
    let cesaro = estimate_cm_cesaro(&law, 64, 1_000_000, &cfg(922), &RayonExecutor)
        .unwrap()
        .estimate
        .value;
    let ratio = goldie / cesaro;
    assert!(
        (0.75..=1.0 / 0.75).contains(&ratio),
        "goldie {goldie} vs cesaro(64) {cesaro}"
    );
}

#[test]
fn support_importance_matches_crude_on_the_continuous_law() {
    // Cross-method agreement away from atomic laws: a small importance
    // run against a large crude run at u = 10^3, tau = 2.
    let law = ln_law();
    let is = prob_passage(
        &law,
        1e3,
        2.0,
        100_000,
        Method::Importance,
        &cfg(931),
        &RayonExecutor,
    )
    .unwrap();
    let crude = prob_passage(
        &law,
        1e3,
        2.0,
        10_000_000,
        Method::Crude,
        &cfg(932),
        &RayonExecutor,
    )
    .unwrap();
    let combined = (is.stderr * is.stderr + crude.stderr * crude.stderr).sqrt();
    assert!(
        (is.value - crude.value).abs() <= 4.0 * combined,
        "importance {} vs crude {} with combined stderr {combined}",
        is.value,
        crude.value
    );
}

#[test]
fn support_enumeration_and_horizon() {
    assert_eq!(scaled_horizon(5.0, 2.0), 3);
    let est = prob_passage(
        &two_point_law(),
        5.0,
        2.0,
        1,
        Method::Enumeration,
        &cfg(0),
        &RayonExecutor,
    )
    .unwrap();
    assert_eq!(est.value, 0.0625);
    assert_eq!(est.stderr, 0.0);
    let c = estimate_c_tau(&ln_law(), 2.0, 64, 4000, &cfg(5), &RayonExecutor).unwrap();
    assert!(c.estimate.value > 0.0);
}
