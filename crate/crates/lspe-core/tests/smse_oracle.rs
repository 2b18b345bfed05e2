//! Analytic error expressions vs. brute-force Monte-Carlo estimates.
//!
//! `smse_lspe` / `smse_si` are exact expectations; each test replays the
//! measurement process thousands of times and compares the sampled mean
//! squared matrix error against the formula at Monte-Carlo precision.

mod common;

use lspe_core::analysis::{
    empirical_errors, prior_constants, smse_si, EstimatorSpec,
};
use lspe_core::estimator::{quantities_complex, si_optimal_beta, DEFAULT_RIDGE};
use lspe_core::mat::{FieldTag, Mat};
use lspe_core::model::{
    build_system, forward_measure, sample_signal, Ensemble, MeasurementSystem, NoiseModel,
    SignalPrior,
};
use lspe_core::preprocess::Preprocessor;
use lspe_core::rng::Rng;

fn complex_iid_system(m: usize, n: usize, seed: u64) -> MeasurementSystem {
    let ens = Ensemble::iid(m, n, FieldTag::Complex);
    let prior = SignalPrior::new(n, 1.0, FieldTag::Complex).unwrap();
    build_system(&ens, &prior, NoiseModel::noiseless(m, FieldTag::Complex), &mut Rng::new(seed, 0)).unwrap()
}

#[test]
fn lspe_complex_analytic_smse_matches_10k_trials() {
    // M <= N^2 keeps T nonsingular in the noiseless case, so the closed
    // form is exact (no ridge in play) and strictly positive.
    let sys = complex_iid_system(32, 6, 2001);
    let rep = empirical_errors(&sys, &EstimatorSpec::LspeComplex, 10_000, DEFAULT_RIDGE, &Rng::new(2001, 100)).unwrap();
    assert!(rep.smse_analytic > 1.0, "expected an O(N^2-M) error, got {}", rep.smse_analytic);
    let rel = (rep.smse_empirical - rep.smse_analytic).abs() / rep.smse_analytic;
    assert!(
        rel < 0.03,
        "S-MSE: empirical {} vs analytic {} (relative {rel})",
        rep.smse_empirical,
        rep.smse_analytic
    );
}

#[test]
fn interpolation_regime_drives_empirical_smse_to_machine_zero() {
    // With M > N^2 noiseless measurements the quadratics {a_m a_m^H} span
    // the whole Hermitian space, y determines x x^H linearly, and the LSPE
    // reproduces it: the true S-MSE is zero. The formula routed through the
    // ridge-regularized solve reports only its own O(ridge) bias, and the
    // sampled error collapses to rounding noise.
    let sys = complex_iid_system(32, 4, 2029);
    let rep = empirical_errors(&sys, &EstimatorSpec::LspeComplex, 200, DEFAULT_RIDGE, &Rng::new(2029, 100)).unwrap();
    assert!(
        rep.smse_empirical < 1e-10,
        "interpolation regime should recover x x^H: {}",
        rep.smse_empirical
    );
    assert!(
        rep.smse_analytic.abs() < 1e-4,
        "analytic value should be zero up to ridge bias: {}",
        rep.smse_analytic
    );
}

#[test]
fn lspe_complex_analytic_smse_matches_10k_trials_under_noise() {
    // T is strictly positive definite here (diagonal measurement noise), so
    // no ridge is involved on either side of the comparison.
    let ens = Ensemble::iid(32, 4, FieldTag::Complex);
    let prior = SignalPrior::new(4, 1.0, FieldTag::Complex).unwrap();
    let noise = NoiseModel::diagonal(32, FieldTag::Complex, 0.2, 0.3, 0.5).unwrap();
    let sys = build_system(&ens, &prior, noise, &mut Rng::new(2003, 0)).unwrap();
    let rep = empirical_errors(&sys, &EstimatorSpec::LspeComplex, 10_000, DEFAULT_RIDGE, &Rng::new(2003, 100)).unwrap();
    let rel = (rep.smse_empirical - rep.smse_analytic).abs() / rep.smse_analytic;
    assert!(
        rel < 0.03,
        "noisy S-MSE: empirical {} vs analytic {} (relative {rel})",
        rep.smse_empirical,
        rep.smse_analytic
    );
}

#[test]
fn lspe_real_analytic_smse_matches_10k_trials() {
    // M <= N(N+1)/2 keeps the real-field T nonsingular without noise.
    let ens = Ensemble::iid(20, 6, FieldTag::Real);
    let prior = SignalPrior::new(6, 1.0, FieldTag::Real).unwrap();
    let sys = build_system(&ens, &prior, NoiseModel::noiseless(20, FieldTag::Real), &mut Rng::new(2005, 0)).unwrap();
    let rep = empirical_errors(&sys, &EstimatorSpec::LspeReal, 10_000, DEFAULT_RIDGE, &Rng::new(2005, 100)).unwrap();
    let rel = (rep.smse_empirical - rep.smse_analytic).abs() / rep.smse_analytic;
    assert!(
        rel < 0.03,
        "real S-MSE: empirical {} vs analytic {} (relative {rel})",
        rep.smse_empirical,
        rep.smse_analytic
    );
}

#[test]
fn lspe_exp_analytic_smse_matches_10k_trials() {
    // M < N^2 keeps T_exp nonsingular without noise.
    let sys = complex_iid_system(12, 4, 2007);
    let spec = EstimatorSpec::LspeExp { gamma: 0.15 };
    let rep = empirical_errors(&sys, &spec, 10_000, DEFAULT_RIDGE, &Rng::new(2007, 100)).unwrap();
    let rel = (rep.smse_empirical - rep.smse_analytic).abs() / rep.smse_analytic;
    assert!(
        rel < 0.03,
        "exp S-MSE: empirical {} vs analytic {} (relative {rel})",
        rep.smse_empirical,
        rep.smse_analytic
    );
}

#[test]
fn si_analytic_smse_matches_10k_trials() {
    let sys = complex_iid_system(32, 4, 2011);
    let spec = EstimatorSpec::Si { preproc: Preprocessor::Identity };
    let rep = empirical_errors(&sys, &spec, 10_000, DEFAULT_RIDGE, &Rng::new(2011, 100)).unwrap();
    let rel = (rep.smse_empirical - rep.smse_analytic).abs() / rep.smse_analytic;
    assert!(
        rel < 0.03,
        "SI S-MSE: empirical {} vs analytic {} (relative {rel})",
        rep.smse_empirical,
        rep.smse_analytic
    );
}

#[test]
fn optimal_beta_wins_a_grid_search() {
    // E||D_beta - x x^H||^2 is a quadratic in beta; estimate it at 21 grid
    // points from 2000 common trials and require the argmin to sit within
    // one grid step of the closed-form beta-hat.
    let sys = complex_iid_system(16, 3, 2013);
    let q = quantities_complex(&sys, DEFAULT_RIDGE).unwrap();
    let beta_hat = si_optimal_beta(&q, &sys).unwrap();

    let trials = 2000;
    let mut rng = Rng::new(2013, 50);
    let n = sys.n();
    let mut mean_s2 = 0.0; // E ||S||^2 with S = sum T(y_m) a_m a_m^H
    let mut mean_s1 = 0.0; // E Re<S, x x^H>
    let mut mean_xx = 0.0; // E ||x x^H||^2
    for _ in 0..trials {
        let x = sample_signal(&sys.prior, &mut rng).unwrap();
        let (y, _) = forward_measure(&sys, &x, &mut rng).unwrap();
        let s = {
            let mut w = Mat::zeros(n, n, FieldTag::Complex);
            for mm in 0..sys.m() {
                for i in 0..n {
                    for j in 0..n {
                        let aij = sys.a.get(mm, i).conj() * sys.a.get(mm, j);
                        w.set(i, j, w.get(i, j) + aij * y[mm]);
                    }
                }
            }
            w
        };
        let mut s2 = 0.0;
        let mut s1 = 0.0;
        let mut xx = 0.0;
        for i in 0..n {
            for j in 0..n {
                let outer = x[i] * x[j].conj();
                s2 += s.get(i, j).norm_sqr();
                s1 += (s.get(i, j).conj() * outer).re;
                xx += outer.norm_sqr();
            }
        }
        mean_s2 += s2 / trials as f64;
        mean_s1 += s1 / trials as f64;
        mean_xx += xx / trials as f64;
    }

    let grid: Vec<f64> = (0..21).map(|k| beta_hat * (0.5 + 0.05 * k as f64)).collect();
    let objective =
        |beta: f64| beta * beta * mean_s2 - 2.0 * beta * mean_s1 + mean_xx;
    let mut best = 0;
    for (k, &b) in grid.iter().enumerate() {
        if objective(b) < objective(grid[best]) {
            best = k;
        }
    }
    let step = 0.05 * beta_hat;
    assert!(
        (grid[best] - beta_hat).abs() <= step + 1e-15,
        "grid argmin {} vs beta-hat {beta_hat}",
        grid[best]
    );
    // the empirical vertex is the moment-ratio estimate of beta-hat
    let vertex = mean_s1 / mean_s2;
    assert!(
        (vertex - beta_hat).abs() / beta_hat < 0.05,
        "empirical vertex {vertex} vs beta-hat {beta_hat}"
    );
}

#[test]
fn beta_hat_scales_as_inverse_fourth_power_of_a() {
    // Scaling A by s multiplies y by s^2 and a_m a_m^H by s^2 (noiseless,
    // identity preprocessing), so the optimal scale drops by s^-4.
    let raw = Rng::new(2017, 0).sample_gaussian(12 * 3, FieldTag::Complex, 1.0).unwrap();
    let a = Mat::from_complex(12, 3, &raw).unwrap();
    let s = 1.7;
    let a_scaled = a.scale_re(s);
    let prior = SignalPrior::new(3, 1.0, FieldTag::Complex).unwrap();
    let noise = NoiseModel::noiseless(12, FieldTag::Complex);
    let mut rng = Rng::new(2017, 1);
    let sys1 = build_system(&Ensemble::explicit(a), &prior, noise.clone(), &mut rng).unwrap();
    let sys2 = build_system(&Ensemble::explicit(a_scaled), &prior, noise, &mut rng).unwrap();
    let b1 = si_optimal_beta(&quantities_complex(&sys1, DEFAULT_RIDGE).unwrap(), &sys1).unwrap();
    let b2 = si_optimal_beta(&quantities_complex(&sys2, DEFAULT_RIDGE).unwrap(), &sys2).unwrap();
    let want = b1 / (s * s * s * s);
    assert!(
        (b2 - want).abs() / want.abs() < 1e-10,
        "beta under scaling: {b2} vs {want}"
    );
}

#[test]
fn si_beta_and_smse_agree_between_formula_and_report() {
    // smse_si and the beta used by prepared trials come from the same
    // moment sums; cross-check against si_optimal_beta on a fresh system.
    let sys = complex_iid_system(20, 3, 2019);
    let q = quantities_complex(&sys, DEFAULT_RIDGE).unwrap();
    let consts = prior_constants(&sys.prior);
    let si = smse_si(&q, &sys, &consts).unwrap();
    let beta = si_optimal_beta(&q, &sys).unwrap();
    assert!((si.beta_hat - beta).abs() <= 1e-15 * beta.abs());
    assert!(si.smse > 0.0);
}

#[test]
fn empirical_errors_is_deterministic_in_seed() {
    let sys = complex_iid_system(16, 3, 2023);
    let spec = EstimatorSpec::LspeComplex;
    let a = empirical_errors(&sys, &spec, 200, DEFAULT_RIDGE, &Rng::new(9, 77)).unwrap();
    let b = empirical_errors(&sys, &spec, 200, DEFAULT_RIDGE, &Rng::new(9, 77)).unwrap();
    assert_eq!(a.smse_empirical, b.smse_empirical);
    assert_eq!(a.eer_empirical, b.eer_empirical);
    assert_eq!(a.nmse_mean, b.nmse_mean);
    let c = empirical_errors(&sys, &spec, 200, DEFAULT_RIDGE, &Rng::new(10, 77)).unwrap();
    assert_ne!(a.smse_empirical, c.smse_empirical);
}
