//! Linear spectral estimators and the classical spectral initializer.
//!
//! A linear spectral estimator forms `D_y = K_x + Σ_m t_m(y) V_m`, where the
//! weights solve `T t = 𝒯(y) − 𝒯̄` against precomputed moments of the
//! preprocessed measurements:
//!
//! * `𝒯̄_m = E 𝒯(y_m)`,
//! * `T = Cov(𝒯(y))` (must be positive definite),
//! * `V_m = E[(𝒯(y_m) − 𝒯̄_m)(x x^H − K_x)]`, the cross-moment with the
//!   signal outer product, `K_x = E[x x^H] = σ_x² I`.
//!
//! By construction `D_y` is the linear-in-`𝒯(y)` minimizer of
//! `E‖D − x x^H‖²`, so its mean-square matrix error has a closed form (see
//! [`crate::analysis`]). For the Gaussian model all three shipped variants
//! have rank-one cross-moments `V_m = c_m a_m a_m^H`:
//!
//! * identity preprocessing over ℂ: `T = C_z ⊙ C_z* + C_ey`, `c_m = σ_x⁴`;
//! * identity preprocessing over ℝ: `T = 2 C_z ⊙ C_z + C_ey`, `c_m = 2σ_x⁴`;
//! * exponential preprocessing `𝒯(y) = exp(−γy)` over ℂ, where with
//!   `q = γ·diag(C_z) + 1` and `p_m = exp(−γ·mean_ey_m + γ²[C_ey]_mm/2)`:
//!   `𝒯̄ = p ⊘ q`,
//!   `T = p p^T ⊙ exp(γ² C_ey) ⊘ (q q^T − γ² C_z ⊙ C_z*) − p p^T ⊘ (q q^T)`,
//!   and `c_m = −γ σ_x⁴ p_m / q_m²` (note the sign: larger `y` shrinks the
//!   preprocessed value).
//!
//! The classical initializer is `D_β = β Σ_m 𝒯(y_m) a_m a_m^H`; its scale `β`
//! minimizing `E‖D_β − x x^H‖²` is exposed here as well. Estimates are read
//! out of either matrix as `x̂ = √λ₁ u₁` (zero when `λ₁ ≤ 0`).

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::eig::{leading_eigenpair, EigenPair};
use crate::error::{Error, Result};
use crate::mat::{hadamard, FieldTag, HadamardMode, Mat};
use crate::model::MeasurementSystem;
use crate::preprocess::Preprocessor;
use crate::rng::Rng;
use crate::solve::SpdFactor;

/// Ridge used by the harness when factoring `T`.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Which construction produced a set of quantities or a spectral matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    LspeReal,
    LspeComplex,
    LspeExp,
    LspeGeneric,
    SpectralInit,
}

/// Precomputed per-system moments defining one linear spectral estimator,
/// with the factorization of `T` cached for reuse across trials.
#[derive(Clone, Debug)]
pub struct LspeQuantities {
    /// Signal prior second moment `K_x` (N×N).
    pub k_x: Mat,
    /// `E 𝒯(y)` (length M).
    pub t_bar: Vec<f64>,
    /// `Cov(𝒯(y))` (M×M, real symmetric).
    pub t_mat: Mat,
    /// Rank-one cross-moment coefficients: `V_m = v_coeffs[m] · a_m a_m^H`.
    /// `None` when `generic_v` is used instead.
    pub v_coeffs: Option<Vec<f64>>,
    /// Dense cross-moments for the generic engine (each N×N Hermitian).
    pub generic_v: Option<Vec<Mat>>,
    /// Preprocessor these moments were derived for.
    pub preproc: Preprocessor,
    pub provenance: Provenance,
    factor: SpdFactor,
}

impl LspeQuantities {
    /// Whether factoring `T` needed the ridge fallback.
    pub fn regularized(&self) -> bool {
        self.factor.regularized()
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }
}

/// Data matrix ready for eigen-extraction.
#[derive(Clone, Debug)]
pub struct SpectralMatrix {
    /// Hermitian N×N data matrix.
    pub d: Mat,
    pub provenance: Provenance,
    /// The solved weights `t` (LSPE) or `β·𝒯(y)` (initializer).
    pub t_weights: Vec<f64>,
}

/// Scaled leading eigenvector of a spectral matrix.
#[derive(Clone, Debug)]
pub struct Estimate {
    /// `√max(λ₁,0) · u₁`; all-zero when `λ₁ ≤ 0`.
    pub x_hat: Vec<Complex64>,
    pub lambda1: f64,
    pub converged: bool,
    pub iters: usize,
}

fn require_field(sys: &MeasurementSystem, field: FieldTag) -> Result<()> {
    if sys.field() != field {
        return Err(Error::WrongField {
            expected: field,
            got: sys.field(),
        });
    }
    Ok(())
}

/// Identity-preprocessing quantities over ℝ.
pub fn quantities_real(sys: &MeasurementSystem, ridge: f64) -> Result<LspeQuantities> {
    require_field(sys, FieldTag::Real)?;
    let sigma4 = sys.prior.sigma_x_sq * sys.prior.sigma_x_sq;
    let t_bar: Vec<f64> = sys
        .c_z
        .diag_re()
        .iter()
        .zip(&sys.noise.mean_ey)
        .map(|(&d, &m)| d + m)
        .collect();
    let t_mat = hadamard(&sys.c_z, &sys.c_z, HadamardMode::Product)?
        .scale_re(2.0)
        .add(&sys.noise.c_ey)?;
    let factor = SpdFactor::with_ridge(&t_mat, ridge)?;
    Ok(LspeQuantities {
        k_x: Mat::identity(sys.n(), FieldTag::Real).scale_re(sys.prior.sigma_x_sq),
        t_bar,
        t_mat,
        v_coeffs: Some(alloc::vec![2.0 * sigma4; sys.m()]),
        generic_v: None,
        preproc: Preprocessor::Identity,
        provenance: Provenance::LspeReal,
        factor,
    })
}

/// Identity-preprocessing quantities over ℂ.
pub fn quantities_complex(sys: &MeasurementSystem, ridge: f64) -> Result<LspeQuantities> {
    require_field(sys, FieldTag::Complex)?;
    let sigma4 = sys.prior.sigma_x_sq * sys.prior.sigma_x_sq;
    let t_bar: Vec<f64> = sys
        .c_z
        .diag_re()
        .iter()
        .zip(&sys.noise.mean_ey)
        .map(|(&d, &m)| d + m)
        .collect();
    let t_mat = hadamard(&sys.c_z, &sys.c_z, HadamardMode::ConjProduct)?
        .real_part()
        .add(&sys.noise.c_ey)?;
    let factor = SpdFactor::with_ridge(&t_mat, ridge)?;
    Ok(LspeQuantities {
        k_x: Mat::identity(sys.n(), FieldTag::Complex).scale_re(sys.prior.sigma_x_sq),
        t_bar,
        t_mat,
        v_coeffs: Some(alloc::vec![sigma4; sys.m()]),
        generic_v: None,
        preproc: Preprocessor::Identity,
        provenance: Provenance::LspeComplex,
        factor,
    })
}

/// Exponential-preprocessing quantities over ℂ (`𝒯(y) = exp(−γ y)`).
pub fn quantities_exp(sys: &MeasurementSystem, gamma: f64, ridge: f64) -> Result<LspeQuantities> {
    require_field(sys, FieldTag::Complex)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParam("exponential preprocessing requires gamma > 0"));
    }
    let m = sys.m();
    let sigma4 = sys.prior.sigma_x_sq * sys.prior.sigma_x_sq;
    let cz_diag = sys.c_z.diag_re();
    let cey_diag = sys.noise.c_ey.diag_re();

    // q_m = gamma [C_z]_mm + 1,  p_m = exp(-gamma mean_m + gamma^2 [C_ey]_mm / 2)
    let q: Vec<f64> = cz_diag.iter().map(|&d| gamma * d + 1.0).collect();
    let p: Vec<f64> = sys
        .noise
        .mean_ey
        .iter()
        .zip(&cey_diag)
        .map(|(&mu, &v)| libm::exp(-gamma * mu + 0.5 * gamma * gamma * v))
        .collect();

    let t_bar: Vec<f64> = p.iter().zip(&q).map(|(&pm, &qm)| pm / qm).collect();

    let mut t_mat = Mat::zeros(m, m, FieldTag::Real);
    for i in 0..m {
        for j in 0..m {
            let qq = q[i] * q[j];
            let den = qq - gamma * gamma * sys.c_z.get(i, j).norm_sqr();
            if !(den > 0.0) {
                return Err(Error::ExpDenominator { row: i, col: j });
            }
            let pp = p[i] * p[j];
            let v = pp * libm::exp(gamma * gamma * sys.noise.c_ey.get(i, j).re) / den - pp / qq;
            t_mat.set(i, j, Complex64::new(v, 0.0));
        }
    }
    // the formula is symmetric in (i, j) up to rounding; enforce exactly
    t_mat.hermitize();

    let v_coeffs: Vec<f64> = (0..m)
        .map(|i| -gamma * sigma4 * p[i] / (q[i] * q[i]))
        .collect();

    let factor = SpdFactor::with_ridge(&t_mat, ridge)?;
    Ok(LspeQuantities {
        k_x: Mat::identity(sys.n(), FieldTag::Complex).scale_re(sys.prior.sigma_x_sq),
        t_bar,
        t_mat,
        v_coeffs: Some(v_coeffs),
        generic_v: None,
        preproc: Preprocessor::Exponential { gamma },
        provenance: Provenance::LspeExp,
        factor,
    })
}

/// Caller-supplied moments (e.g. estimated numerically for a preprocessor
/// without closed forms). `v` holds one Hermitian N×N cross-moment per
/// measurement.
pub fn quantities_generic(
    sys: &MeasurementSystem,
    preproc: Preprocessor,
    k_x: Mat,
    t_bar: Vec<f64>,
    t_mat: Mat,
    v: Vec<Mat>,
    ridge: f64,
) -> Result<LspeQuantities> {
    let m = sys.m();
    let n = sys.n();
    if t_bar.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: t_bar.len(),
        });
    }
    if t_mat.rows() != m || t_mat.cols() != m {
        return Err(Error::ShapeMismatch {
            expected: (m, m),
            got: (t_mat.rows(), t_mat.cols()),
        });
    }
    if t_mat.field() != FieldTag::Real {
        return Err(Error::WrongField {
            expected: FieldTag::Real,
            got: t_mat.field(),
        });
    }
    if v.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: v.len(),
        });
    }
    for vm in &v {
        if vm.rows() != n || vm.cols() != n {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                got: (vm.rows(), vm.cols()),
            });
        }
        vm.require_hermitian()?;
    }
    if k_x.rows() != n || k_x.cols() != n {
        return Err(Error::ShapeMismatch {
            expected: (n, n),
            got: (k_x.rows(), k_x.cols()),
        });
    }
    k_x.require_hermitian()?;
    let factor = SpdFactor::with_ridge(&t_mat, ridge)?;
    Ok(LspeQuantities {
        k_x,
        t_bar,
        t_mat,
        v_coeffs: None,
        generic_v: Some(v),
        preproc,
        provenance: Provenance::LspeGeneric,
        factor,
    })
}

/// Assemble `D_y = K_x + Σ_m t_m V_m` for one measurement vector, where `t`
/// solves `T t = 𝒯(y) − 𝒯̄` against the cached factorization. The
/// preprocessor applied is the one the quantities were derived for, so the
/// pairing cannot be violated.
pub fn assemble(q: &LspeQuantities, sys: &MeasurementSystem, y: &[f64]) -> Result<SpectralMatrix> {
    let m = sys.m();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    let ty = q.preproc.apply(y)?;
    let rhs: Vec<f64> = ty.iter().zip(&q.t_bar).map(|(&a, &b)| a - b).collect();
    let t = q.factor.solve_real(&rhs)?;

    let mut d = if let Some(coeffs) = &q.v_coeffs {
        let w: Vec<f64> = t.iter().zip(coeffs).map(|(&tm, &cm)| tm * cm).collect();
        sys.a.weighted_adjoint_gram(&w)?.add(&q.k_x)?
    } else {
        let vs = q.generic_v.as_ref().expect("generic quantities carry V_m");
        let mut acc = q.k_x.clone();
        for (tm, vm) in t.iter().zip(vs) {
            acc = acc.add(&vm.scale_re(*tm))?;
        }
        acc
    };

    let correction = d.hermitize();
    let scale = d.max_abs();
    if correction > 1e-10 * scale && scale > 0.0 {
        return Err(Error::NotHermitian { defect: correction });
    }

    Ok(SpectralMatrix {
        d,
        provenance: q.provenance,
        t_weights: t,
    })
}

/// Classical spectral-initializer matrix `D_β = β Σ_m 𝒯(y_m) a_m a_m^H`.
pub fn si_matrix(
    sys: &MeasurementSystem,
    y: &[f64],
    preproc: &Preprocessor,
    beta: f64,
) -> Result<SpectralMatrix> {
    if y.len() != sys.m() {
        return Err(Error::DimensionMismatch {
            expected: sys.m(),
            got: y.len(),
        });
    }
    if !beta.is_finite() {
        return Err(Error::InvalidParam("beta must be finite"));
    }
    let ty = preproc.apply(y)?;
    let w: Vec<f64> = ty.iter().map(|&v| beta * v).collect();
    let d = sys.a.weighted_adjoint_gram(&w)?;
    Ok(SpectralMatrix {
        d,
        provenance: Provenance::SpectralInit,
        t_weights: w,
    })
}

/// Numerator and denominator of the optimal initializer scale:
/// `num = Σ_m a_m^H Ṽ_m a_m` with `Ṽ_m = E[𝒯(y_m) x x^H] = V_m + 𝒯̄_m K_x`,
/// `den = Σ_{m,m'} (T + 𝒯̄ 𝒯̄^T)_{mm'} |a_m^H a_{m'}|²`.
pub(crate) fn si_moment_sums(q: &LspeQuantities, sys: &MeasurementSystem) -> Result<(f64, f64)> {
    let m = sys.m();
    let g = sys.a.gram();

    let mut num_terms = Vec::with_capacity(m);
    for i in 0..m {
        // a_m^H V_m a_m
        let qf_v = if let Some(coeffs) = &q.v_coeffs {
            let nrm = sys.a.row_norm_sqr(i);
            coeffs[i] * nrm * nrm
        } else {
            let vs = q.generic_v.as_ref().expect("generic quantities carry V_m");
            quadratic_form_row(&vs[i], &sys.a, i)
        };
        // a_m^H K_x a_m
        let qf_k = quadratic_form_row(&q.k_x, &sys.a, i);
        num_terms.push(qf_v + q.t_bar[i] * qf_k);
    }
    let num = crate::sum::pairwise_sum(&num_terms);

    let mut den_terms = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let ttilde = q.t_mat.get(i, j).re + q.t_bar[i] * q.t_bar[j];
            den_terms.push(ttilde * g.get(i, j).norm_sqr());
        }
    }
    let den = crate::sum::pairwise_sum(&den_terms);
    Ok((num, den))
}

/// `a_m^H W a_m` for the (Hermitian) matrix `W`, with `a_m` taken from row
/// `m` of the sensing matrix (which stores `a_m^H`, so `a_m[i] = conj(A[m][i])`
/// and the form is `Σ_ij A[m][i] W_ij conj(A[m][j])`). Real for Hermitian `W`.
fn quadratic_form_row(w: &Mat, a: &Mat, m: usize) -> f64 {
    let n = a.cols();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a.get(m, i) * w.get(i, j) * a.get(m, j).conj();
        }
    }
    acc.re
}

/// Scale minimizing `E‖D_β − x x^H‖²` for the initializer paired with the
/// same preprocessor the quantities were derived for.
pub fn si_optimal_beta(q: &LspeQuantities, sys: &MeasurementSystem) -> Result<f64> {
    let (num, den) = si_moment_sums(q, sys)?;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateScaling);
    }
    Ok(num / den)
}

/// Read the estimate out of a spectral matrix: `x̂ = √λ₁ u₁`, or the zero
/// vector when the leading eigenvalue is not positive.
pub fn extract(
    dmat: &SpectralMatrix,
    tol: f64,
    max_iter: usize,
    rng: &mut Rng,
) -> Result<Estimate> {
    let EigenPair {
        value,
        vector,
        converged,
        iters,
    } = leading_eigenpair(&dmat.d, tol, max_iter, rng)?;
    let x_hat = if value > 0.0 {
        let s = libm::sqrt(value);
        vector.iter().map(|v| v * s).collect()
    } else {
        alloc::vec![Complex64::new(0.0, 0.0); vector.len()]
    };
    Ok(Estimate {
        x_hat,
        lambda1: value,
        converged,
        iters,
    })
}
