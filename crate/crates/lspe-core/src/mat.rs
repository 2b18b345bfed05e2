//! Dense matrices over ℝ or ℂ.
//!
//! One storage type covers both fields: entries are `Complex64` and a
//! [`FieldTag`] records whether imaginary parts are structurally zero. Real
//! matrices therefore pay 2x memory for one shared code path, which is the
//! right trade at the problem sizes this crate targets (N up to a few
//! hundred). Mixing fields in a binary operation is an error, never a silent
//! promotion.
//!
//! Rows of a sensing matrix `A` are the conjugated measurement vectors: row
//! `m` holds `a_m^H`, so `G = A A^H` has entries `G[m][m'] = a_m^H a_{m'}`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar field a matrix or signal lives over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldTag {
    Real,
    Complex,
}

/// Elementwise product modes for [`hadamard`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HadamardMode {
    /// `a ⊙ b`
    Product,
    /// `a ⊙ conj(b)`
    ConjProduct,
    /// `a ⊘ b`, rejecting zero denominators
    Divide,
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    field: FieldTag,
    data: Vec<Complex64>,
}

impl Mat {
    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize, field: FieldTag) -> Mat {
        Mat {
            rows,
            cols,
            field,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize, field: FieldTag) -> Mat {
        let mut m = Mat::zeros(n, n, field);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Build from a row-major slice of real values.
    pub fn from_real(rows: usize, cols: usize, vals: &[f64]) -> Result<Mat> {
        if vals.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: vals.len(),
            });
        }
        Ok(Mat {
            rows,
            cols,
            field: FieldTag::Real,
            data: vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    /// Build from a row-major slice of complex values.
    pub fn from_complex(rows: usize, cols: usize, vals: &[Complex64]) -> Result<Mat> {
        if vals.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: vals.len(),
            });
        }
        Ok(Mat {
            rows,
            cols,
            field: FieldTag::Complex,
            data: vals.to_vec(),
        })
    }

    /// Build entry-by-entry from a closure.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        field: FieldTag,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Mat {
        let mut m = Mat::zeros(rows, cols, field);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    /// Raw row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Row `i` as a slice (length `cols`).
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Real parts of the diagonal.
    pub fn diag_re(&self) -> Vec<f64> {
        let n = core::cmp::min(self.rows, self.cols);
        (0..n).map(|i| self.get(i, i).re).collect()
    }

    /// Squared Euclidean norm of row `m` (`‖a_m‖²` when rows store `a_m^H`).
    pub fn row_norm_sqr(&self, m: usize) -> f64 {
        self.row(m).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        let mut best = 0.0f64;
        for z in &self.data {
            let a = z.norm();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// Squared Frobenius norm.
    pub fn frob_norm_sqr(&self) -> f64 {
        crate::sum::pairwise_sum(&self.data.iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>())
    }

    /// Conjugate transpose (plain transpose over ℝ).
    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, self.field, |i, j| self.get(j, i).conj())
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            field: self.field,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Copy of the real parts, tagged real.
    pub fn real_part(&self) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            field: FieldTag::Real,
            data: self.data.iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
        }
    }

    /// Retag a real-valued matrix as complex (no data change).
    pub fn to_complex(&self) -> Mat {
        Mat {
            field: FieldTag::Complex,
            ..self.clone()
        }
    }

    /// `self + other`.
    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape_field(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Mat { data, ..*self })
    }

    /// `self - other`.
    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape_field(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Mat { data, ..*self })
    }

    /// `self` scaled by a real factor.
    pub fn scale_re(&self, s: f64) -> Mat {
        Mat {
            data: self.data.iter().map(|z| z * s).collect(),
            ..self.clone()
        }
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, other.rows),
                got: (other.rows, other.cols),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols, self.field);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * x`.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += self.get(i, j) * xj;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Gram matrix `G = self * self^H` (Hermitian by construction: the upper
    /// triangle is computed and mirrored, the diagonal is exactly real).
    pub fn gram(&self) -> Mat {
        let m = self.rows;
        let mut g = Mat::zeros(m, m, self.field);
        for i in 0..m {
            for j in i..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.cols {
                    acc += self.get(i, k) * self.get(j, k).conj();
                }
                if i == j {
                    g.set(i, i, Complex64::new(acc.re, 0.0));
                } else {
                    g.set(i, j, acc);
                    g.set(j, i, acc.conj());
                }
            }
        }
        g
    }

    /// `self^H diag(w) self`: the weighted sum `Σ_m w_m a_m a_m^H` over the
    /// rows `a_m^H` of `self`. Hermitian by construction.
    pub fn weighted_adjoint_gram(&self, w: &[f64]) -> Result<Mat> {
        if w.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: w.len(),
            });
        }
        let n = self.cols;
        let mut d = Mat::zeros(n, n, self.field);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &wm) in w.iter().enumerate() {
                    // a_m[i] conj(a_m[j]) = conj(A[m][i]) A[m][j]
                    acc += self.get(m, i).conj() * self.get(m, j) * wm;
                }
                if i == j {
                    d.set(i, i, Complex64::new(acc.re, 0.0));
                } else {
                    d.set(i, j, acc);
                    d.set(j, i, acc.conj());
                }
            }
        }
        Ok(d)
    }

    /// Largest deviation from Hermitian symmetry, `max |A_ij - conj(A_ji)|`.
    /// Meaningful for square matrices.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.rows.min(self.cols);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Error unless square and Hermitian within `1e-10 * max_abs`.
    pub fn require_hermitian(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch {
                expected: (self.rows, self.rows),
                got: (self.rows, self.cols),
            });
        }
        let defect = self.hermitian_defect();
        if defect > 1e-10 * self.max_abs() {
            return Err(Error::NotHermitian { defect });
        }
        Ok(())
    }

    /// Replace by `(A + A^H)/2`, returning the largest correction applied.
    pub fn hermitize(&mut self) -> f64 {
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let a = self.get(i, j);
                let b = self.get(j, i).conj();
                let avg = (a + b) * 0.5;
                let corr = (a - avg).norm();
                if corr > worst {
                    worst = corr;
                }
                if i == j {
                    self.set(i, i, Complex64::new(avg.re, 0.0));
                } else {
                    self.set(i, j, avg);
                    self.set(j, i, avg.conj());
                }
            }
        }
        worst
    }

    fn check_same_shape_field(&self, other: &Mat) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                expected: (self.rows, self.cols),
                got: (other.rows, other.cols),
            });
        }
        Ok(())
    }
}

/// Elementwise combination of two same-shape, same-field matrices.
pub fn hadamard(a: &Mat, b: &Mat, mode: HadamardMode) -> Result<Mat> {
    a.check_same_shape_field(b)?;
    let mut data = Vec::with_capacity(a.data.len());
    for (idx, (x, y)) in a.data.iter().zip(&b.data).enumerate() {
        let v = match mode {
            HadamardMode::Product => x * y,
            HadamardMode::ConjProduct => x * y.conj(),
            HadamardMode::Divide => {
                if y.norm_sqr() == 0.0 {
                    return Err(Error::DivisionByZero { index: idx });
                }
                x / y
            }
        };
        data.push(v);
    }
    Ok(Mat { data, ..a.clone() })
}

/// `Σ_i conj(a_i) b_i`.
pub fn vec_dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

/// Squared Euclidean norm.
pub fn vec_norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Euclidean norm.
pub fn vec_norm(a: &[Complex64]) -> f64 {
    libm::sqrt(vec_norm_sqr(a))
}
