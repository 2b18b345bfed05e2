//! Leading eigenpair of a Hermitian matrix by shifted power iteration.
//!
//! The spectral estimate is the eigenvector of the *algebraically* largest
//! eigenvalue, which plain power iteration does not deliver when a negative
//! eigenvalue dominates in magnitude. Iterating instead on `D + cI` with the
//! Gershgorin shift `c = max_i Σ_j |D_ij|` makes the spectrum nonnegative
//! (every Gershgorin disc lies in `[−c, c]`, so `D + cI ⪰ 0`) while preserving
//! eigenvectors; the magnitude-dominant eigenvalue of the shifted matrix is
//! then exactly the algebraically largest of `D`.
//!
//! The eigenvector phase is fixed deterministically: the first component of
//! magnitude above 1e-12 is rotated to the positive real axis. Convergence is
//! declared when the phase-fixed iterate moves less than `tol` in Euclidean
//! norm; the Rayleigh quotient of the *unshifted* matrix is returned, so the
//! eigenvalue error is quadratic in the eigenvector error.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::Result;
use crate::mat::{vec_norm, Mat};
use crate::rng::Rng;

/// Iteration tolerance used by the harness.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Iteration cap used by the harness.
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Result of [`leading_eigenpair`].
#[derive(Clone, Debug)]
pub struct EigenPair {
    /// Algebraically largest eigenvalue (Rayleigh quotient at the final
    /// iterate).
    pub value: f64,
    /// Unit-norm eigenvector with deterministic phase.
    pub vector: Vec<Complex64>,
    /// Whether the move-per-iteration dropped below `tol` within the cap.
    pub converged: bool,
    /// Iterations actually performed.
    pub iters: usize,
}

/// Rotate `u` so its first component of magnitude > 1e-12 is real-positive.
/// An all-tiny vector is returned unchanged.
pub fn fix_phase(u: &mut [Complex64]) {
    for k in 0..u.len() {
        let a = u[k].norm();
        if a > 1e-12 {
            let rot = u[k].conj() / a;
            for v in u.iter_mut() {
                *v *= rot;
            }
            // make the pivot exactly real (its imaginary dust is rounding)
            u[k] = Complex64::new(u[k].re, 0.0);
            return;
        }
    }
}

/// Leading eigenpair of Hermitian `d`. The start vector is drawn from `rng`,
/// so results are reproducible for a fixed `(seed, stream)`.
pub fn leading_eigenpair(
    d: &Mat,
    tol: f64,
    max_iter: usize,
    rng: &mut Rng,
) -> Result<EigenPair> {
    d.require_hermitian()?;
    let n = d.rows();

    // Gershgorin shift: max absolute row sum bounds the spectral radius.
    let mut shift = 0.0f64;
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            row_sum += d.get(i, j).norm();
        }
        if row_sum > shift {
            shift = row_sum;
        }
    }

    let mut u = rng.sample_gaussian(n, d.field(), 1.0)?;
    let nu = vec_norm(&u);
    if nu == 0.0 {
        // unreachable in practice; fall back to e_1
        u[0] = Complex64::new(1.0, 0.0);
    } else {
        for v in u.iter_mut() {
            *v /= nu;
        }
    }
    fix_phase(&mut u);

    let mut converged = false;
    let mut iters = 0;
    for _ in 0..max_iter {
        iters += 1;
        // w = (D + shift I) u
        let mut w = d.matvec(&u)?;
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi += ui * shift;
        }
        let nw = vec_norm(&w);
        if nw == 0.0 {
            // u is in the kernel of D + cI; it is an exact eigenvector.
            converged = true;
            break;
        }
        for v in w.iter_mut() {
            *v /= nw;
        }
        fix_phase(&mut w);
        let mut delta_sq = 0.0;
        for (a, b) in w.iter().zip(&u) {
            delta_sq += (a - b).norm_sqr();
        }
        u = w;
        if libm::sqrt(delta_sq) < tol {
            converged = true;
            break;
        }
    }

    // Rayleigh quotient on the unshifted matrix; real for Hermitian d.
    let du = d.matvec(&u)?;
    let value = crate::mat::vec_dot_conj(&u, &du).re;

    Ok(EigenPair {
        value,
        vector: u,
        converged,
        iters,
    })
}
