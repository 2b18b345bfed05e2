//! Shared oracles for integration tests.
//!
//! The production code extracts leading eigenpairs by shifted power
//! iteration and solves SPD systems by Cholesky. These tests cross-check
//! both against an independent classical algorithm: a cyclic Jacobi
//! eigensolver for real symmetric matrices, with complex Hermitian input
//! handled through the 2N×2N real embedding
//! `E(H) = [[Re H, −Im H], [Im H, Re H]]`, which represents the same linear
//! operator on ℝ^{2N} and has each eigenvalue of `H` with doubled
//! multiplicity.

#![allow(dead_code)]

use lspe_core::mat::{FieldTag, Mat};
use num_complex::Complex64;

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix, returned as
/// (eigenvalues, eigenvectors-as-columns), unsorted. Plain textbook sweeps;
/// accuracy is limited only by rounding, which is what an oracle needs.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.rows();
    assert_eq!(a.cols(), n, "jacobi oracle needs a square matrix");
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let e = a.get(i, j);
            assert!(e.im == 0.0, "jacobi oracle takes real matrices");
            m[i][j] = e.re;
        }
    }
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i][j].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i][i]).collect();
    (values, v)
}

/// Real 2N×2N embedding of a complex Hermitian matrix.
pub fn embed_hermitian(h: &Mat) -> Mat {
    let n = h.rows();
    Mat::from_fn(2 * n, 2 * n, FieldTag::Real, |i, j| {
        let e = h.get(i % n, j % n);
        let v = match (i >= n, j >= n) {
            (false, false) | (true, true) => e.re,
            (false, true) => -e.im,
            (true, false) => e.im,
        };
        Complex64::new(v, 0.0)
    })
}

/// Leading (algebraically largest) eigenpair of a Hermitian matrix via the
/// Jacobi oracle; complex input goes through the real embedding. The
/// returned vector is unit-norm with its first sizable component rotated
/// real-positive, matching the production phase convention.
pub fn oracle_leading_eigenpair(h: &Mat) -> (f64, Vec<Complex64>) {
    let n = h.rows();
    let (vals, vecs, complex) = if h.field() == FieldTag::Complex {
        let (vals, vecs) = jacobi_eigen(&embed_hermitian(h));
        (vals, vecs, true)
    } else {
        let (vals, vecs) = jacobi_eigen(h);
        (vals, vecs, false)
    };
    let mut best = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[best] {
            best = i;
        }
    }
    let dim = if complex { 2 * n } else { n };
    let col: Vec<f64> = (0..dim).map(|k| vecs[k][best]).collect();
    let mut u: Vec<Complex64> = if complex {
        (0..n).map(|k| Complex64::new(col[k], col[k + n])).collect()
    } else {
        col.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    };
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in u.iter_mut() {
        *z /= norm;
    }
    fix_phase_like_production(&mut u);
    (vals[best], u)
}

/// Same phase convention as the production extractor: rotate so the first
/// component with |u_k| > 1e-12 is real and positive.
pub fn fix_phase_like_production(u: &mut [Complex64]) {
    for k in 0..u.len() {
        let a = u[k].norm();
        if a > 1e-12 {
            let rot = u[k].conj() / a;
            for z in u.iter_mut() {
                *z *= rot;
            }
            u[k] = Complex64::new(u[k].re, 0.0);
            return;
        }
    }
}

/// Dense inverse of a Hermitian positive-definite matrix via the Jacobi
/// oracle (through the embedding when complex).
pub fn oracle_spd_inverse(t: &Mat) -> Mat {
    let n = t.rows();
    if t.field() == FieldTag::Complex {
        let inv2n = oracle_spd_inverse(&embed_hermitian(t));
        // read back the (Re, -Im; Im, Re) blocks
        return Mat::from_fn(n, n, FieldTag::Complex, |i, j| {
            Complex64::new(inv2n.get(i, j).re, inv2n.get(i + n, j).re)
        });
    }
    let (vals, vecs) = jacobi_eigen(t);
    Mat::from_fn(n, n, FieldTag::Real, |i, j| {
        let mut acc = 0.0;
        for k in 0..n {
            assert!(vals[k] > 0.0, "oracle inverse requires positive definite input");
            acc += vecs[i][k] * vecs[j][k] / vals[k];
        }
        Complex64::new(acc, 0.0)
    })
}

/// Random Hermitian matrix with entries of order 1 (Gaussian), used to feed
/// the eigen oracles.
pub fn random_hermitian(n: usize, field: FieldTag, rng: &mut lspe_core::rng::Rng) -> Mat {
    let raw = rng.sample_gaussian(n * n, field, 1.0).unwrap();
    let b = Mat::from_complex(n, n, &raw).unwrap();
    let mut h = b.add(&b.adjoint()).unwrap().scale_re(0.5);
    if field == FieldTag::Real {
        // keep the Real tag for real inputs
        let entries: Vec<f64> = (0..n * n).map(|k| h.entries()[k].re).collect();
        h = Mat::from_real(n, n, &entries).unwrap();
    }
    h
}
