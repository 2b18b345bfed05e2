//! Hermitian positive-definite solves.
//!
//! The estimator layer repeatedly solves `T t = rhs` against one fixed
//! covariance `T`, so the Cholesky factor is computed once ([`SpdFactor`]) and
//! reused; each solve is then two triangular substitutions. When `T` is
//! numerically rank-deficient (e.g. a noiseless model with few measurements),
//! factorization is retried once on `T + ridge·mean(diag(T))·I` and the result
//! is flagged as regularized.
//!
//! [`psd_factor`] is the sampling-side variant: it tolerates zero pivots (a
//! noiseless covariance is all zeros) by zeroing the corresponding factor
//! column, and only rejects matrices that are indefinite beyond tolerance.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat::{FieldTag, Mat};

/// Cached lower-triangular Cholesky factor `L` with `L L^H = T` (or the
/// ridged `T` when the first attempt failed).
#[derive(Clone, Debug)]
pub struct SpdFactor {
    l: Mat,
    regularized: bool,
}

impl SpdFactor {
    /// Factor a Hermitian positive-definite matrix. No ridge fallback.
    pub fn new(t: &Mat) -> Result<SpdFactor> {
        t.require_hermitian()?;
        Ok(SpdFactor {
            l: cholesky(t)?,
            regularized: false,
        })
    }

    /// Factor `t`; on failure retry once on `t + ridge·mean(diag(t))·I`.
    pub fn with_ridge(t: &Mat, ridge: f64) -> Result<SpdFactor> {
        t.require_hermitian()?;
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::InvalidParam("ridge must be finite and >= 0"));
        }
        match cholesky(t) {
            Ok(l) => Ok(SpdFactor {
                l,
                regularized: false,
            }),
            Err(e) => {
                if ridge == 0.0 {
                    return Err(e);
                }
                let n = t.rows();
                let diag = t.diag_re();
                let mean_diag = diag.iter().sum::<f64>() / n as f64;
                let shift = ridge * mean_diag;
                if !(shift > 0.0) {
                    return Err(e);
                }
                let mut shifted = t.clone();
                for i in 0..n {
                    let v = shifted.get(i, i);
                    shifted.set(i, i, Complex64::new(v.re + shift, 0.0));
                }
                Ok(SpdFactor {
                    l: cholesky(&shifted)?,
                    regularized: true,
                })
            }
        }
    }

    /// Whether the ridge fallback was used.
    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solve `T x = rhs`.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.l.rows();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        // forward: L y = rhs
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.l.get(i, j) * y[j];
            }
            y[i] = acc / self.l.get(i, i);
        }
        // backward: L^H x = y
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.l.get(j, i).conj() * y[j];
            }
            y[i] = acc / self.l.get(i, i);
        }
        Ok(y)
    }

    /// Solve with a real right-hand side, returning real parts (valid when
    /// `T` is real-valued, as the estimator covariances are).
    pub fn solve_real(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let crhs: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.solve(&crhs)?.into_iter().map(|z| z.re).collect())
    }

    /// `tr(T^{-1} H)` for Hermitian `H`: solve column-by-column and take the
    /// matching diagonal entry of each solution.
    pub fn inv_trace_product(&self, h: &Mat) -> Result<f64> {
        let n = self.l.rows();
        if h.rows() != n || h.cols() != n {
            return Err(Error::ShapeMismatch {
                expected: (n, n),
                got: (h.rows(), h.cols()),
            });
        }
        let mut terms = Vec::with_capacity(n);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = h.get(i, j);
            }
            let x = self.solve(&col)?;
            terms.push(x[j].re);
        }
        Ok(crate::sum::pairwise_sum(&terms))
    }
}

/// Plain lower Cholesky; fails on the first non-positive (or non-finite)
/// pivot, reporting its index.
fn cholesky(t: &Mat) -> Result<Mat> {
    let n = t.rows();
    let mut l = Mat::zeros(n, n, t.field());
    for i in 0..n {
        for j in 0..=i {
            let mut acc = t.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k).conj();
            }
            if i == j {
                let d = acc.re;
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::FactorizationFailed { pivot: i });
                }
                l.set(i, i, Complex64::new(libm::sqrt(d), 0.0));
            } else {
                l.set(i, j, acc / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// One-shot SPD solve with ridge retry: returns the solution and whether the
/// ridge was needed. `t` must be tagged real and symmetric.
pub fn solve_spd(t: &Mat, rhs: &[f64], ridge: f64) -> Result<(Vec<f64>, bool)> {
    if t.field() != FieldTag::Real {
        return Err(Error::WrongField {
            expected: FieldTag::Real,
            got: t.field(),
        });
    }
    let f = SpdFactor::with_ridge(t, ridge)?;
    Ok((f.solve_real(rhs)?, f.regularized()))
}

/// Lower factor `L` with `L L^H ≈ C` for Hermitian positive *semi*-definite
/// `C`, used to sample correlated Gaussians. A pivot within
/// `tol·max(diag)` of zero zeroes its column instead of failing; a pivot more
/// negative than that tolerance means `C` is indefinite and is an error.
pub fn psd_factor(c: &Mat, rel_tol: f64) -> Result<Mat> {
    c.require_hermitian()?;
    let n = c.rows();
    let scale = c
        .diag_re()
        .iter()
        .fold(0.0f64, |acc, &d| if d > acc { d } else { acc });
    let tol = rel_tol * scale;
    let mut l = Mat::zeros(n, n, c.field());
    for i in 0..n {
        for j in 0..=i {
            let mut acc = c.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k).conj();
            }
            if i == j {
                let d = acc.re;
                if d > tol {
                    l.set(i, i, Complex64::new(libm::sqrt(d), 0.0));
                } else if d >= -tol {
                    l.set(i, i, Complex64::new(0.0, 0.0));
                } else {
                    return Err(Error::FactorizationFailed { pivot: i });
                }
            } else {
                let piv = l.get(j, j).re;
                if piv == 0.0 {
                    l.set(i, j, Complex64::new(0.0, 0.0));
                } else {
                    l.set(i, j, acc / l.get(j, j));
                }
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let t = Mat::identity(3, FieldTag::Real);
        let (x, reg) = solve_spd(&t, &[1.0, -2.0, 0.5], 1e-8).unwrap();
        assert_eq!(x, alloc::vec![1.0, -2.0, 0.5]);
        assert!(!reg);
    }

    #[test]
    fn diagonal_solve_divides() {
        let t = Mat::from_real(2, 2, &[4.0, 0.0, 0.0, 9.0]).unwrap();
        let (x, reg) = solve_spd(&t, &[8.0, 3.0], 1e-8).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(!reg);
    }

    #[test]
    fn rank_deficient_matrix_takes_the_ridge_path() {
        // T = [[1,1],[1,1]] is singular; with ridge 1e-8 the solve lands on
        // the minimum-norm least-squares solution [0.5, 0.5] to ~1e-8.
        let t = Mat::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let (x, reg) = solve_spd(&t, &[1.0, 1.0], 1e-8).unwrap();
        assert!(reg, "expected the regularized flag");
        assert!((x[0] - 0.5).abs() < 1e-4, "x[0] = {}", x[0]);
        assert!((x[1] - 0.5).abs() < 1e-4, "x[1] = {}", x[1]);
    }

    #[test]
    fn rank_deficient_without_ridge_fails_with_pivot_index() {
        let t = Mat::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        match solve_spd(&t, &[1.0, 1.0], 0.0) {
            Err(Error::FactorizationFailed { pivot: 1 }) => {}
            other => panic!("expected pivot-1 failure, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let t = Mat::from_real(2, 2, &[1.0, 0.5, 0.2, 1.0]).unwrap();
        assert!(matches!(
            solve_spd(&t, &[1.0, 1.0], 1e-8),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn complex_field_input_is_rejected_by_solve_spd() {
        let t = Mat::identity(2, FieldTag::Complex);
        assert!(matches!(
            solve_spd(&t, &[1.0, 1.0], 1e-8),
            Err(Error::WrongField { .. })
        ));
    }

    #[test]
    fn complex_hermitian_factor_round_trips() {
        use num_complex::Complex64;
        let c = |re, im| Complex64::new(re, im);
        // B B^H for a fixed complex B is Hermitian PD.
        let b = Mat::from_complex(
            3,
            3,
            &[
                c(1.0, 0.2),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.4, -0.3),
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(-0.1, 0.5),
                c(0.3, 0.3),
                c(1.5, 0.0),
            ],
        )
        .unwrap();
        let t = b.gram();
        let f = SpdFactor::new(&t).unwrap();
        let rhs = [c(1.0, -1.0), c(0.5, 2.0), c(0.0, 0.25)];
        let x = f.solve(&rhs).unwrap();
        let back = t.matvec(&x).unwrap();
        for i in 0..3 {
            assert!((back[i] - rhs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn inv_trace_product_matches_explicit_inverse_on_diagonal_case() {
        let t = Mat::from_real(2, 2, &[2.0, 0.0, 0.0, 5.0]).unwrap();
        let h = Mat::from_real(2, 2, &[3.0, 1.0, 1.0, 7.0]).unwrap();
        let f = SpdFactor::new(&t).unwrap();
        // tr(T^-1 H) = 3/2 + 7/5
        let got = f.inv_trace_product(&h).unwrap();
        assert!((got - (1.5 + 1.4)).abs() < 1e-14);
    }

    #[test]
    fn psd_factor_handles_the_zero_matrix_and_rank_deficiency() {
        let z = Mat::zeros(3, 3, FieldTag::Complex);
        let l = psd_factor(&z, 1e-12).unwrap();
        assert_eq!(l.frob_norm_sqr(), 0.0);

        // rank-1 PSD
        let ones = Mat::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let l = psd_factor(&ones, 1e-12).unwrap();
        let back = l.mul(&l.adjoint()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.get(i, j) - ones.get(i, j)).norm() < 1e-12);
            }
        }

        // indefinite input must fail
        let indef = Mat::from_real(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(psd_factor(&indef, 1e-12).is_err());
    }
}
