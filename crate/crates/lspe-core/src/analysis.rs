//! Error analysis: exact expressions, bounds, and empirical counterparts.
//!
//! For a linear spectral estimator the mean-square matrix error is exact:
//!
//! `E‖D_y − x x^H‖² = E‖x x^H − K_x‖² − Σ_{m,m'} [T⁻¹]_{mm'} tr(V_m^H V_{m'})`,
//!
//! which for rank-one cross-moments `V_m = c_m a_m a_m^H` reduces to
//! `tr(V_m^H V_{m'}) = c_m c_{m'} |a_m^H a_{m'}|²`, a function of the Gram
//! matrix alone. For the optimally scaled classical initializer
//! `D_β = β Σ 𝒯(y_m) a_m a_m^H`:
//!
//! `E‖D_β̂ − x x^H‖² = E‖x x^H‖² − (Σ_m a_m^H Ṽ_m a_m)² / Σ_{m,m'} T̃_{mm'} |a_m^H a_{m'}|²`
//!
//! with `Ṽ_m = E[𝒯(y_m) x x^H]` and `T̃ = E[𝒯(y) 𝒯(y)^T]`. Because the LSPE
//! minimizes the matrix error over a strictly larger affine family, its value
//! never exceeds the initializer's.
//!
//! The eigenvector readout obeys a pointwise factor-4 bound: `x̂ x̂^H` (with
//! `x̂ = √max(λ₁,0)·u₁`) is the closest PSD rank-≤1 matrix to `D`, and
//! `x x^H` is itself PSD rank-one, so by the triangle inequality
//! `‖x̂ x̂^H − x x^H‖² ≤ 4‖D − x x^H‖²` on every realization — hence
//! `EER ≤ 4·S-MSE` for the expectations.
//!
//! The prior-dependent constants for `x ~ N(0, σ_x² I_N)` follow from the
//! Gaussian fourth moments: `E‖x x^H‖² = E‖x‖⁴` equals `N(N+1) σ_x⁴` over ℂ
//! and `N(N+2) σ_x⁴` over ℝ, and subtracting `‖K_x‖² = N σ_x⁴` gives
//! `E‖x x^H − K_x‖² = N² σ_x⁴` over ℂ and `N(N+1) σ_x⁴` over ℝ (see
//! [`prior_constants`]; the gap `r_xx − c_xx = N σ_x⁴` is exact and tested).
//!
//! Everything empirical lives behind deterministic `(seed, stream)` RNG
//! addressing and fixed-shape pairwise reductions, so Monte-Carlo results are
//! reproducible regardless of how callers schedule trials.

use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimator::{
    assemble, extract, quantities_complex, quantities_exp, quantities_real, si_matrix,
    LspeQuantities, SpectralMatrix,
};
use crate::mat::{vec_dot_conj, vec_norm_sqr, FieldTag, Mat};
use crate::model::{forward_measure, sample_signal, MeasurementSystem, SignalPrior};
use crate::preprocess::Preprocessor;
use crate::rng::Rng;
use crate::sum::{pairwise_mean, pairwise_sum};

/// Prior-dependent constants of the error expressions, for `x ~ N(0, σ² I_N)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorConstants {
    /// `E‖x x^H − K_x‖²`: `N² σ⁴` over ℂ, `N(N+1) σ⁴` over ℝ.
    pub c_xx: f64,
    /// `E‖x x^H‖² = E‖x‖⁴`: `N(N+1) σ⁴` over ℂ, `N(N+2) σ⁴` over ℝ.
    pub r_xx: f64,
}

/// Fourth-moment constants of the iid Gaussian prior.
///
/// Over ℂ, `‖x‖² ~ Gamma(N, σ²)` gives `E‖x‖⁴ = N(N+1)σ⁴`, and per-entry
/// `E|x_i|⁴ = 2σ⁴` gives `E‖xx^H − σ²I‖² = E‖x‖⁴ − 2σ²·E‖x‖² + Nσ⁴ = N²σ⁴`.
/// Over ℝ, `‖x‖²/σ² ~ χ²_N` gives `E‖x‖⁴ = N(N+2)σ⁴` and the centered value
/// `N(N+1)σ⁴`. In both fields `r_xx − c_xx = Nσ⁴` exactly.
pub fn prior_constants(prior: &SignalPrior) -> PriorConstants {
    let n = prior.n as f64;
    let s4 = prior.sigma_x_sq * prior.sigma_x_sq;
    match prior.field {
        FieldTag::Complex => PriorConstants {
            c_xx: n * n * s4,
            r_xx: n * (n + 1.0) * s4,
        },
        FieldTag::Real => PriorConstants {
            c_xx: n * (n + 1.0) * s4,
            r_xx: n * (n + 2.0) * s4,
        },
    }
}

/// Exact `E‖D_y − x x^H‖²` of the linear spectral estimator defined by `q`.
pub fn smse_lspe(q: &LspeQuantities, sys: &MeasurementSystem, consts: &PriorConstants) -> Result<f64> {
    let m = sys.m();
    // H_{mm'} = tr(V_m^H V_{m'}) — via the Gram matrix in the rank-one case.
    let h = if let Some(coeffs) = &q.v_coeffs {
        let g = sys.a.gram();
        Mat::from_fn(m, m, FieldTag::Real, |i, j| {
            Complex64::new(coeffs[i] * coeffs[j] * g.get(i, j).norm_sqr(), 0.0)
        })
    } else {
        let vs = q.generic_v.as_ref().expect("generic quantities carry V_m");
        Mat::from_fn(m, m, FieldTag::Real, |i, j| {
            // tr(V_i^H V_j) = sum_kl conj(V_i[k][l]) V_j[k][l]
            let mut acc = 0.0;
            for k in 0..vs[i].rows() {
                for l in 0..vs[i].cols() {
                    acc += (vs[i].get(k, l).conj() * vs[j].get(k, l)).re;
                }
            }
            Complex64::new(acc, 0.0)
        })
    };
    Ok(consts.c_xx - q.factor().inv_trace_product(&h)?)
}

/// Exact `E‖D_β̂ − x x^H‖²` of the optimally scaled initializer, together
/// with the optimal scale `β̂` itself.
pub fn smse_si(
    q: &LspeQuantities,
    sys: &MeasurementSystem,
    consts: &PriorConstants,
) -> Result<SiAnalytics> {
    let (num, den) = crate::estimator::si_moment_sums(q, sys)?;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateScaling);
    }
    Ok(SiAnalytics {
        beta_hat: num / den,
        smse: consts.r_xx - num * num / den,
    })
}

/// Optimal scale and matrix error of the classical initializer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiAnalytics {
    pub beta_hat: f64,
    pub smse: f64,
}

/// Monte-Carlo estimate of the initializer analytics for preprocessors
/// without closed-form moments. Estimates the two scalar moments
/// `num = E Σ_m 𝒯(y_m)|a_m^H x|²` and `den = E Σ_{mm'} 𝒯(y_m)𝒯(y_{m'})|G_{mm'}|²`
/// from `samples` draws on the given stream.
pub fn si_analytics_mc(
    sys: &MeasurementSystem,
    preproc: &Preprocessor,
    consts: &PriorConstants,
    samples: usize,
    rng: &Rng,
) -> Result<SiAnalytics> {
    if samples == 0 {
        return Err(Error::InvalidParam("si_analytics_mc requires samples >= 1"));
    }
    let m = sys.m();
    let g = sys.a.gram();
    // |G|^2 entrywise, reused every sample
    let g2 = Mat::from_fn(m, m, FieldTag::Real, |i, j| {
        Complex64::new(g.get(i, j).norm_sqr(), 0.0)
    });
    let mut num_samples = Vec::with_capacity(samples);
    let mut den_samples = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut srng = rng.substream(1 + s as u64);
        let x = sample_signal(&sys.prior, &mut srng)?;
        let (y, _z) = forward_measure(&sys, &x, &mut srng)?;
        let ty = preproc.apply(&y)?;
        let ax = sys.a.matvec(&x)?;
        let mut num_acc = 0.0;
        for i in 0..m {
            num_acc += ty[i] * ax[i].norm_sqr();
        }
        num_samples.push(num_acc);
        let mut den_acc = 0.0;
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                row += g2.get(i, j).re * ty[j];
            }
            den_acc += ty[i] * row;
        }
        den_samples.push(den_acc);
    }
    let num = pairwise_mean(&num_samples);
    let den = pairwise_mean(&den_samples);
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateScaling);
    }
    Ok(SiAnalytics {
        beta_hat: num / den,
        smse: consts.r_xx - num * num / den,
    })
}

/// The factor-4 rank-one bound: `EER ≤ 4 · S-MSE`.
pub fn eer_bound(smse: f64) -> f64 {
    4.0 * smse
}

/// Normalized squared error up to global phase/scale:
/// `min_α ‖x − α x̂‖² / ‖x‖²`, with the minimizer `α̂ = x̂^H x / ‖x̂‖²`.
/// A zero estimate scores exactly 1; a zero reference is an error.
pub fn nmse(x: &[Complex64], x_hat: &[Complex64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: x_hat.len(),
        });
    }
    let x_norm_sq = vec_norm_sqr(x);
    if x_norm_sq == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let h_norm_sq = vec_norm_sqr(x_hat);
    if h_norm_sq == 0.0 {
        return Ok(1.0);
    }
    let alpha = vec_dot_conj(x_hat, x) / h_norm_sq;
    let mut err = 0.0;
    for (xi, hi) in x.iter().zip(x_hat) {
        err += (xi - alpha * hi).norm_sqr();
    }
    Ok(err / x_norm_sq)
}

// ---------------------------------------------------------------------------
// Estimator specifications and Monte-Carlo trials
// ---------------------------------------------------------------------------

/// A named estimator the harness can run: one of the closed-form LSPEs, or
/// the optimally scaled initializer with any preprocessor.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorSpec {
    LspeReal,
    LspeComplex,
    LspeExp { gamma: f64 },
    Si { preproc: Preprocessor },
}

impl EstimatorSpec {
    /// Parse `lspe-r | lspe-c | lspe-exp:GAMMA | si:PREPROC`.
    pub fn parse(s: &str) -> Result<EstimatorSpec> {
        let s = s.trim();
        match s {
            "lspe-r" => return Ok(EstimatorSpec::LspeReal),
            "lspe-c" => return Ok(EstimatorSpec::LspeComplex),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("lspe-exp:") {
            let gamma: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam("lspe-exp: GAMMA is not a number"))?;
            if !(gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::InvalidParam("lspe-exp requires GAMMA > 0"));
            }
            return Ok(EstimatorSpec::LspeExp { gamma });
        }
        if let Some(rest) = s.strip_prefix("si:") {
            return Ok(EstimatorSpec::Si {
                preproc: Preprocessor::parse(rest)?,
            });
        }
        Err(Error::InvalidParam(
            "unknown estimator (expected lspe-r | lspe-c | lspe-exp:GAMMA | si:PREPROC)",
        ))
    }

    /// Canonical textual form (inverse of [`EstimatorSpec::parse`]).
    pub fn label(&self) -> String {
        use alloc::format;
        match self {
            EstimatorSpec::LspeReal => String::from("lspe-r"),
            EstimatorSpec::LspeComplex => String::from("lspe-c"),
            EstimatorSpec::LspeExp { gamma } => format!("lspe-exp:{gamma}"),
            EstimatorSpec::Si { preproc } => format!("si:{}", preproc.label()),
        }
    }
}

/// How trials of a prepared estimator build their data matrix.
#[derive(Clone, Debug)]
enum PreparedKind {
    Lspe,
    Si { preproc: Preprocessor, beta: f64 },
}

/// A spec bound to one system: analytic values computed, `T` factored.
#[derive(Clone, Debug)]
pub struct Prepared {
    quantities: Option<LspeQuantities>,
    kind: PreparedKind,
    /// Exact (or moment-estimated, for SI without closed forms) `E‖D − xx^H‖²`.
    pub smse_analytic: f64,
    /// Optimal initializer scale, for SI estimators.
    pub beta_hat: Option<f64>,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
}

/// Number of model draws used to estimate initializer moments when the
/// preprocessor has no closed form.
pub const DEFAULT_SI_MOMENT_SAMPLES: usize = 20_000;

/// Bind an estimator spec to a system: derive (or estimate) its moments and
/// analytic error, and factor `T` once. `moment_rng` seeds the moment
/// estimation for initializers without closed-form moments; pass the
/// system-build stream to keep runs reproducible.
pub fn prepare(
    sys: &MeasurementSystem,
    spec: &EstimatorSpec,
    ridge: f64,
    si_moment_samples: usize,
    moment_rng: &Rng,
) -> Result<Prepared> {
    let consts = prior_constants(&sys.prior);
    match spec {
        EstimatorSpec::LspeReal => {
            let q = quantities_real(sys, ridge)?;
            let smse = smse_lspe(&q, sys, &consts)?;
            Ok(Prepared {
                quantities: Some(q),
                kind: PreparedKind::Lspe,
                smse_analytic: smse,
                beta_hat: None,
                eig_tol: crate::eig::DEFAULT_TOL,
                eig_max_iter: crate::eig::DEFAULT_MAX_ITER,
            })
        }
        EstimatorSpec::LspeComplex => {
            let q = quantities_complex(sys, ridge)?;
            let smse = smse_lspe(&q, sys, &consts)?;
            Ok(Prepared {
                quantities: Some(q),
                kind: PreparedKind::Lspe,
                smse_analytic: smse,
                beta_hat: None,
                eig_tol: crate::eig::DEFAULT_TOL,
                eig_max_iter: crate::eig::DEFAULT_MAX_ITER,
            })
        }
        EstimatorSpec::LspeExp { gamma } => {
            let q = quantities_exp(sys, *gamma, ridge)?;
            let smse = smse_lspe(&q, sys, &consts)?;
            Ok(Prepared {
                quantities: Some(q),
                kind: PreparedKind::Lspe,
                smse_analytic: smse,
                beta_hat: None,
                eig_tol: crate::eig::DEFAULT_TOL,
                eig_max_iter: crate::eig::DEFAULT_MAX_ITER,
            })
        }
        EstimatorSpec::Si { preproc } => {
            let analytics = match preproc {
                Preprocessor::Identity => {
                    let q = match sys.field() {
                        FieldTag::Real => quantities_real(sys, ridge)?,
                        FieldTag::Complex => quantities_complex(sys, ridge)?,
                    };
                    smse_si(&q, sys, &consts)?
                }
                Preprocessor::Exponential { gamma } => {
                    let q = quantities_exp(sys, *gamma, ridge)?;
                    smse_si(&q, sys, &consts)?
                }
                _ => si_analytics_mc(sys, preproc, &consts, si_moment_samples, moment_rng)?,
            };
            Ok(Prepared {
                quantities: None,
                kind: PreparedKind::Si {
                    preproc: preproc.clone(),
                    beta: analytics.beta_hat,
                },
                smse_analytic: analytics.smse,
                beta_hat: Some(analytics.beta_hat),
                eig_tol: crate::eig::DEFAULT_TOL,
                eig_max_iter: crate::eig::DEFAULT_MAX_ITER,
            })
        }
    }
}

/// Per-trial squared errors.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrialErrors {
    /// `‖D − x x^H‖²` for this trial's data matrix.
    pub spectral_sq: f64,
    /// `‖x̂ x̂^H − x x^H‖²` for this trial's estimate.
    pub rank1_sq: f64,
    /// Normalized signal error `min_α ‖x − αx̂‖²/‖x‖²`.
    pub nmse: f64,
}

/// Build the spectral matrix a prepared estimator assigns to measurements
/// `y`: the assembled LSPE matrix, or the scaled initializer matrix.
pub fn data_matrix(sys: &MeasurementSystem, prep: &Prepared, y: &[f64]) -> Result<SpectralMatrix> {
    match &prep.kind {
        PreparedKind::Lspe => assemble(
            prep.quantities.as_ref().expect("LSPE preparation carries quantities"),
            sys,
            y,
        ),
        PreparedKind::Si { preproc, beta } => si_matrix(sys, y, preproc, *beta),
    }
}

/// Run one trial: draw a signal and measurements on `trial_rng`, build the
/// data matrix, extract the estimate, and score it.
pub fn trial_errors(
    sys: &MeasurementSystem,
    prep: &Prepared,
    trial_rng: &mut Rng,
) -> Result<TrialErrors> {
    let x = sample_signal(&sys.prior, trial_rng)?;
    let (y, _z) = forward_measure(sys, &x, trial_rng)?;
    let dmat = data_matrix(sys, prep, &y)?;

    let n = sys.n();
    // ‖D − xx^H‖², by explicit residual to avoid cancellation
    let mut spectral_terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let r = dmat.d.get(i, j) - x[i] * x[j].conj();
            spectral_terms.push(r.norm_sqr());
        }
    }
    let spectral_sq = pairwise_sum(&spectral_terms);

    let est = extract(&dmat, prep.eig_tol, prep.eig_max_iter, trial_rng)?;

    // ‖x̂x̂^H − xx^H‖² with x̂x̂^H formed as λ₊·u u^H (identical analytically,
    // and exact when the scalar case recovers y bitwise)
    let lam = if est.lambda1 > 0.0 { est.lambda1 } else { 0.0 };
    let u = {
        // recover the unit eigenvector: x_hat = sqrt(λ)·u, or zeros
        let mut u = est.x_hat.clone();
        if lam > 0.0 {
            let s = 1.0 / libm::sqrt(lam);
            for v in u.iter_mut() {
                *v *= s;
            }
        }
        u
    };
    let mut rank1_terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let uij = if lam > 0.0 {
                u[i] * u[j].conj() * lam
            } else {
                Complex64::new(0.0, 0.0)
            };
            let r = uij - x[i] * x[j].conj();
            rank1_terms.push(r.norm_sqr());
        }
    }
    let rank1_sq = pairwise_sum(&rank1_terms);

    let nm = nmse(&x, &est.x_hat)?;
    Ok(TrialErrors {
        spectral_sq,
        rank1_sq,
        nmse: nm,
    })
}

/// Averages over a trial buffer plus analytic values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub smse_analytic: f64,
    /// `4 · smse_analytic`, exactly.
    pub eer_bound: f64,
    pub smse_empirical: f64,
    pub eer_empirical: f64,
    pub nmse_mean: f64,
    pub trials: usize,
}

/// Reduce a trial-indexed buffer in fixed order. The buffer layout (not the
/// schedule that filled it) determines the result bit-for-bit.
pub fn summarize_trials(buf: &[TrialErrors], smse_analytic: f64) -> ErrorReport {
    let spectral: Vec<f64> = buf.iter().map(|t| t.spectral_sq).collect();
    let rank1: Vec<f64> = buf.iter().map(|t| t.rank1_sq).collect();
    let nm: Vec<f64> = buf.iter().map(|t| t.nmse).collect();
    ErrorReport {
        smse_analytic,
        eer_bound: eer_bound(smse_analytic),
        smse_empirical: pairwise_mean(&spectral),
        eer_empirical: pairwise_mean(&rank1),
        nmse_mean: pairwise_mean(&nm),
        trials: buf.len(),
    }
}

/// Sequential Monte-Carlo run: trial `t` draws from stream
/// `rng.stream_id() + 1 + t`, and sampled initializer moments (needed only
/// by preprocessors without closed forms) start just past the trial range so
/// they never share a stream with the trials they are scored on. Callers
/// must therefore space base streams at least
/// `trials + 2 + DEFAULT_SI_MOMENT_SAMPLES` apart. A parallel driver that
/// fills the same buffer by index and calls [`summarize_trials`] reproduces
/// this bitwise.
pub fn empirical_errors(
    sys: &MeasurementSystem,
    spec: &EstimatorSpec,
    trials: usize,
    ridge: f64,
    rng: &Rng,
) -> Result<ErrorReport> {
    if trials == 0 {
        return Err(Error::InvalidParam("empirical_errors requires trials >= 1"));
    }
    let moment_rng = rng.substream(1 + trials as u64);
    let prep = prepare(sys, spec, ridge, DEFAULT_SI_MOMENT_SAMPLES, &moment_rng)?;
    let mut buf = alloc::vec![TrialErrors::default(); trials];
    for (t, slot) in buf.iter_mut().enumerate() {
        let mut trial_rng = rng.substream(1 + t as u64);
        *slot = trial_errors(sys, &prep, &mut trial_rng)?;
    }
    Ok(summarize_trials(&buf, prep.smse_analytic))
}

// ---------------------------------------------------------------------------
// Moment oracles
// ---------------------------------------------------------------------------

/// One sampled check of a closed-form moment identity.
#[derive(Clone, Debug)]
pub struct MomentCheck {
    pub name: String,
    pub analytic: f64,
    pub estimate: f64,
    pub std_err: f64,
    pub pass: bool,
}

/// Outcome of the full oracle suite.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub checks: Vec<MomentCheck>,
    pub samples: usize,
}

impl MomentReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Gate: estimate within 5 standard errors of the analytic value (plus a
/// relative floor for identities that are numerically exact).
pub fn moment_gate(name: &str, analytic: f64, estimate: f64, std_err: f64) -> MomentCheck {
    let tol = 5.0 * std_err + 1e-12 * libm::fabs(analytic);
    MomentCheck {
        name: String::from(name),
        analytic,
        estimate,
        std_err,
        pass: libm::fabs(estimate - analytic) <= tol,
    }
}

fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let mean = pairwise_mean(vals);
    let centered: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&centered) / (vals.len().max(2) - 1) as f64;
    (mean, libm::sqrt(var / vals.len() as f64))
}

/// Covariance of ν₁ = u₁², ν₂ = u₂² for jointly Gaussian (u₁, u₂) with means
/// (μ₁, μ₂), unit-free covariance entry `s12`: analytic `4μ₁μ₂s12 + 2s12²`.
fn check_folded_cov(
    name: &str,
    mu: (f64, f64),
    var: (f64, f64),
    s12: f64,
    samples: usize,
    rng: &mut Rng,
) -> MomentCheck {
    // sample (u1, u2) via the 2x2 Cholesky of [[v1, s12], [s12, v2]]
    let l11 = libm::sqrt(var.0);
    let l21 = s12 / l11;
    let l22 = libm::sqrt(var.1 - l21 * l21);
    let mut nu1 = Vec::with_capacity(samples);
    let mut nu2 = Vec::with_capacity(samples);
    for _ in 0..samples {
        let g1 = rng.standard_normal();
        let g2 = rng.standard_normal();
        let u1 = mu.0 + l11 * g1;
        let u2 = mu.1 + l21 * g1 + l22 * g2;
        nu1.push(u1 * u1);
        nu2.push(u2 * u2);
    }
    let m1 = pairwise_mean(&nu1);
    let m2 = pairwise_mean(&nu2);
    let products: Vec<f64> = nu1
        .iter()
        .zip(&nu2)
        .map(|(&a, &b)| (a - m1) * (b - m2))
        .collect();
    let (cov, se) = mean_and_se(&products);
    let analytic = 4.0 * mu.0 * mu.1 * s12 + 2.0 * s12 * s12;
    moment_gate(name, analytic, cov, se)
}

/// Variance of u² for u ~ N(μ, σ²): analytic `2σ⁴ + 4μ²σ²`.
fn check_folded_var(name: &str, mu: f64, var: f64, samples: usize, rng: &mut Rng) -> MomentCheck {
    let s = libm::sqrt(var);
    let mut nu = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = mu + s * rng.standard_normal();
        nu.push(u * u);
    }
    let m = pairwise_mean(&nu);
    let centered: Vec<f64> = nu.iter().map(|&v| (v - m) * (v - m)).collect();
    let (varhat, se) = mean_and_se(&centered);
    let analytic = 2.0 * var * var + 4.0 * mu * mu * var;
    moment_gate(name, analytic, varhat, se)
}

/// `E exp(−u^H G u) = 1 / det(G Σ + I)` for circularly symmetric complex
/// `u ~ CN(0, Σ)`, checked by direct sampling.
fn check_complex_quadratic_exp(
    name: &str,
    g: &Mat,
    sigma: &Mat,
    samples: usize,
    rng: &mut Rng,
) -> Result<MomentCheck> {
    let n = sigma.rows();
    let l = crate::solve::psd_factor(sigma, 1e-12)?;
    let mut w = Vec::with_capacity(samples);
    for _ in 0..samples {
        let gvec = rng.sample_gaussian(n, FieldTag::Complex, 1.0)?;
        let u = l.matvec(&gvec)?;
        // u^H G u
        let gu = g.matvec(&u)?;
        let quad = vec_dot_conj(&u, &gu).re;
        w.push(libm::exp(-quad));
    }
    let (mean, se) = mean_and_se(&w);
    // det(G Σ + I) for the sizes used here (1x1 or 2x2)
    let gs = g.mul(sigma)?;
    let analytic = match n {
        1 => 1.0 / (gs.get(0, 0).re + 1.0),
        2 => {
            let a = gs.get(0, 0) + Complex64::new(1.0, 0.0);
            let b = gs.get(0, 1);
            let c = gs.get(1, 0);
            let d = gs.get(1, 1) + Complex64::new(1.0, 0.0);
            1.0 / (a * d - b * c).re
        }
        _ => return Err(Error::InvalidParam("determinant helper covers n <= 2")),
    };
    Ok(moment_gate(name, analytic, mean, se))
}

/// `E exp(−γ^T u) = exp(−γ^T ū + γ^T Σ γ / 2)` for real Gaussian
/// `u ~ N(ū, Σ)`, checked by direct sampling.
fn check_real_linear_exp(
    name: &str,
    gamma: &[f64],
    mean: &[f64],
    sigma: &Mat,
    samples: usize,
    rng: &mut Rng,
) -> Result<MomentCheck> {
    let n = gamma.len();
    let l = crate::solve::psd_factor(sigma, 1e-12)?;
    let mut w = Vec::with_capacity(samples);
    for _ in 0..samples {
        let gvec = rng.sample_gaussian(n, FieldTag::Real, 1.0)?;
        let noise = l.matvec(&gvec)?;
        let mut dot = 0.0;
        for i in 0..n {
            dot += gamma[i] * (mean[i] + noise[i].re);
        }
        w.push(libm::exp(-dot));
    }
    let (est, se) = mean_and_se(&w);
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        lin += gamma[i] * mean[i];
        for j in 0..n {
            quad += gamma[i] * sigma.get(i, j).re * gamma[j];
        }
    }
    let analytic = libm::exp(-lin + 0.5 * quad);
    Ok(moment_gate(name, analytic, est, se))
}

/// Sampled validation of every moment identity the closed forms rest on:
/// squared-Gaussian covariances (means and correlations varied), the complex
/// Gaussian quadratic exponential, and the real Gaussian linear exponential.
/// Each check draws `samples` fresh values from its own substream of `rng`.
pub fn moment_oracles(rng: &Rng, samples: usize) -> Result<MomentReport> {
    let mut checks = Vec::new();
    let mut stream = 0u64;
    let next_rng = |stream: &mut u64| {
        *stream += 1;
        rng.substream(*stream)
    };

    // folded covariances: Cov(u1^2, u2^2) = 4 mu1 mu2 s12 + 2 s12^2
    let cov_cases: [(f64, f64, f64); 4] =
        [(0.0, 0.0, 0.5), (0.0, 0.0, 0.9), (1.0, -0.5, 0.5), (2.0, 1.0, -0.3)];
    for (mu1, mu2, s12) in cov_cases {
        use alloc::format;
        let name = format!("cov(u1^2,u2^2) mu=({mu1},{mu2}) s12={s12}");
        let mut r = next_rng(&mut stream);
        checks.push(check_folded_cov(&name, (mu1, mu2), (1.0, 1.0), s12, samples, &mut r));
    }

    // folded variances: Var(u^2) = 2 s^4 + 4 mu^2 s^2
    let var_cases: [(f64, f64); 3] = [(0.0, 1.0), (1.0, 1.0), (2.0, 0.5)];
    for (mu, var) in var_cases {
        use alloc::format;
        let name = format!("var(u^2) mu={mu} s2={var}");
        let mut r = next_rng(&mut stream);
        checks.push(check_folded_var(&name, mu, var, samples, &mut r));
    }

    // complex quadratic exponential: scalar cases, incl. E exp(-|u|^2) = 1/2
    {
        let scalar_cases: [(f64, f64); 3] = [(1.0, 1.0), (0.25, 4.0), (3.0, 0.5)];
        for (gam, var) in scalar_cases {
            use alloc::format;
            let name = format!("E exp(-g|u|^2) g={gam} s2={var}");
            let g = Mat::from_real(1, 1, &[gam]).unwrap().to_complex();
            let sig = Mat::from_real(1, 1, &[var]).unwrap().to_complex();
            let mut r = next_rng(&mut stream);
            checks.push(check_complex_quadratic_exp(&name, &g, &sig, samples, &mut r)?);
        }
        // one non-diagonal 2x2 case
        let g = Mat::from_real(2, 2, &[1.0, 0.0, 0.0, 0.5]).unwrap().to_complex();
        let sig = Mat::from_complex(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.3, 0.2),
                Complex64::new(0.3, -0.2),
                Complex64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let mut r = next_rng(&mut stream);
        checks.push(check_complex_quadratic_exp(
            "E exp(-u^H G u) 2x2",
            &g,
            &sig,
            samples,
            &mut r,
        )?);
    }

    // real linear exponential: scalar e^{1/2} case and a correlated pair
    {
        let sig1 = Mat::from_real(1, 1, &[1.0]).unwrap();
        let mut r = next_rng(&mut stream);
        checks.push(check_real_linear_exp(
            "E exp(-u) u~N(0,1)",
            &[1.0],
            &[0.0],
            &sig1,
            samples,
            &mut r,
        )?);
        let sig2 = Mat::from_real(2, 2, &[1.0, 0.4, 0.4, 0.5]).unwrap();
        let mut r = next_rng(&mut stream);
        checks.push(check_real_linear_exp(
            "E exp(-g^T u) 2d",
            &[1.0, 0.5],
            &[0.2, -0.1],
            &sig2,
            samples,
            &mut r,
        )?);
    }

    Ok(MomentReport {
        checks,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::DEFAULT_RIDGE;
    use crate::model::{build_system, Ensemble, NoiseModel};
    use alloc::vec;

    fn scalar_system(field: FieldTag) -> MeasurementSystem {
        let a = match field {
            FieldTag::Real => Mat::from_real(1, 1, &[1.0]).unwrap(),
            FieldTag::Complex => {
                Mat::from_complex(1, 1, &[Complex64::new(1.0, 0.0)]).unwrap()
            }
        };
        let ens = Ensemble::explicit(a);
        let prior = SignalPrior::new(1, 1.0, field).unwrap();
        build_system(&ens, &prior, NoiseModel::noiseless(1, field), &mut Rng::new(0, 0)).unwrap()
    }

    #[test]
    fn scalar_smse_is_exactly_zero_in_both_fields() {
        // Complex: c_xx = 1, tr(T^-1 H) = 1, bitwise. Real: c_xx = 2,
        // tr = (1/2)*4 but computed through L = sqrt(2), one ULP of slack.
        let sys_c = scalar_system(FieldTag::Complex);
        let q_c = quantities_complex(&sys_c, DEFAULT_RIDGE).unwrap();
        let consts_c = prior_constants(&sys_c.prior);
        assert_eq!(smse_lspe(&q_c, &sys_c, &consts_c).unwrap(), 0.0);

        let sys_r = scalar_system(FieldTag::Real);
        let q_r = quantities_real(&sys_r, DEFAULT_RIDGE).unwrap();
        let consts_r = prior_constants(&sys_r.prior);
        assert!(smse_lspe(&q_r, &sys_r, &consts_r).unwrap().abs() < 1e-14);
    }

    #[test]
    fn scalar_si_smse_is_zero_and_beta_is_one() {
        let sys = scalar_system(FieldTag::Complex);
        let q = quantities_complex(&sys, DEFAULT_RIDGE).unwrap();
        let consts = prior_constants(&sys.prior);
        let si = smse_si(&q, &sys, &consts).unwrap();
        assert!((si.beta_hat - 1.0).abs() < 1e-12);
        assert!(si.smse.abs() < 1e-12);
    }

    #[test]
    fn prior_constant_identity_holds_exactly() {
        for field in [FieldTag::Real, FieldTag::Complex] {
            for n in [1usize, 2, 7, 64] {
                for s2 in [0.5, 1.0, 3.0] {
                    let p = SignalPrior::new(n, s2, field).unwrap();
                    let c = prior_constants(&p);
                    let expected = n as f64 * s2 * s2;
                    assert_eq!(c.r_xx - c.c_xx, expected, "field {field:?} n {n}");
                }
            }
        }
    }

    #[test]
    fn nmse_is_phase_and_scale_invariant() {
        let x = vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.2),
            Complex64::new(0.0, -1.1),
        ];
        // x_hat = e^{i phi} * 2.5 * x must score ~0
        let phase = Complex64::new(libm::cos(1.1), libm::sin(1.1)) * 2.5;
        let xh: Vec<Complex64> = x.iter().map(|v| v * phase).collect();
        let e = nmse(&x, &xh).unwrap();
        assert!(e < 1e-28, "nmse {e}");
    }

    #[test]
    fn nmse_handles_zero_estimate_and_rejects_zero_signal() {
        let x = vec![Complex64::new(1.0, 0.0)];
        let zero = vec![Complex64::new(0.0, 0.0)];
        assert_eq!(nmse(&x, &zero).unwrap(), 1.0);
        assert_eq!(nmse(&zero, &x), Err(Error::ZeroSignal));
    }

    #[test]
    fn estimator_spec_grammar_round_trips() {
        for s in ["lspe-r", "lspe-c", "lspe-exp:0.001", "si:identity", "si:exp:0.5", "si:optimal:6", "si:trunc:9"] {
            let spec = EstimatorSpec::parse(s).unwrap();
            assert_eq!(EstimatorSpec::parse(&spec.label()).unwrap(), spec);
        }
        assert!(EstimatorSpec::parse("pca").is_err());
        assert!(EstimatorSpec::parse("lspe-exp:-2").is_err());
    }

    #[test]
    fn single_noiseless_scalar_trial_is_exact() {
        // One trial on the exactly solvable system: D = y = |x|^2 bitwise,
        // so both squared errors vanish identically.
        let sys = scalar_system(FieldTag::Complex);
        let rng = Rng::new(77, 1000);
        let rep = empirical_errors(&sys, &EstimatorSpec::LspeComplex, 1, DEFAULT_RIDGE, &rng).unwrap();
        assert_eq!(rep.smse_empirical, 0.0);
        assert_eq!(rep.eer_empirical, 0.0);
        assert!(rep.nmse_mean < 1e-20, "nmse {}", rep.nmse_mean);
        assert_eq!(rep.smse_analytic, 0.0);
        assert_eq!(rep.eer_bound, 0.0);
    }

    #[test]
    fn eer_bound_is_exactly_four_times_smse() {
        assert_eq!(eer_bound(0.3), 1.2);
        let rep = summarize_trials(&[TrialErrors::default()], 2.5);
        assert_eq!(rep.eer_bound, 10.0);
    }

    #[test]
    fn moment_gate_negative_control_fails_loudly() {
        // Feed the gate a corrupted analytic value: it must flag the failure.
        let c = moment_gate("corrupted", 10.0, 0.5, 0.001);
        assert!(!c.pass, "a corrupted analytic value slipped through the gate");
        let c = moment_gate("honest", 0.5002, 0.5, 0.001);
        assert!(c.pass);
    }

    #[test]
    fn moment_oracles_pass_at_1e5_samples() {
        let report = moment_oracles(&Rng::new(2024, 0), 100_000).unwrap();
        for c in &report.checks {
            assert!(
                c.pass,
                "{}: estimate {} vs analytic {} (se {})",
                c.name, c.estimate, c.analytic, c.std_err
            );
        }
    }

    #[test]
    fn si_mc_analytics_agree_with_closed_form_for_identity() {
        // The MC moment path must reproduce the closed-form SI analytics
        // within sampling error when run on a preprocessor that has one.
        let mut rng = Rng::new(31, 0);
        let ens = Ensemble::iid(12, 3, FieldTag::Complex);
        let prior = SignalPrior::new(3, 1.0, FieldTag::Complex).unwrap();
        let sys = build_system(&ens, &prior, NoiseModel::noiseless(12, FieldTag::Complex), &mut rng).unwrap();
        let consts = prior_constants(&sys.prior);
        let q = quantities_complex(&sys, DEFAULT_RIDGE).unwrap();
        let closed = smse_si(&q, &sys, &consts).unwrap();
        let mc = si_analytics_mc(&sys, &Preprocessor::Identity, &consts, 60_000, &Rng::new(31, 10)).unwrap();
        let rel_beta = (mc.beta_hat - closed.beta_hat).abs() / closed.beta_hat.abs();
        assert!(rel_beta < 0.05, "beta: mc {} vs closed {}", mc.beta_hat, closed.beta_hat);
        // smse = r_xx - num^2/den: compare the subtracted mass relatively
        let closed_mass = consts.r_xx - closed.smse;
        let mc_mass = consts.r_xx - mc.smse;
        assert!(
            (mc_mass - closed_mass).abs() / closed_mass < 0.05,
            "si mass: mc {mc_mass} vs closed {closed_mass}"
        );
    }
}
