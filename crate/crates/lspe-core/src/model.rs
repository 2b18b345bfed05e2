//! Gaussian measurement model.
//!
//! A system is `y = |A x + e^z|² + e^y` with `x ~ N(0, σ_x² I)` over ℝ or ℂ
//! (circularly symmetric in the complex case), pre-squaring noise
//! `e^z ~ N(0, C_ez)` of the same field, and real post-squaring noise
//! `e^y ~ N(mean_ey, C_ey)`. The squared magnitude acts elementwise; over ℝ it
//! is a plain square.
//!
//! Rows of `A` hold the conjugated measurement vectors `a_m^H`. The channel
//! covariance `C_z = σ_x² A A^H + C_ez` is cached at build time because every
//! closed-form estimator moment is a function of it, as are the PSD sampling
//! factors of the two noise covariances.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat::{FieldTag, Mat};
use crate::rng::Rng;
use crate::solve::psd_factor;

/// Tolerance used when validating/factoring noise covariances.
const PSD_TOL: f64 = 1e-10;

/// IID Gaussian prior on the signal.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalPrior {
    pub n: usize,
    pub sigma_x_sq: f64,
    pub field: FieldTag,
}

impl SignalPrior {
    pub fn new(n: usize, sigma_x_sq: f64, field: FieldTag) -> Result<SignalPrior> {
        if n == 0 {
            return Err(Error::InvalidParam("signal dimension must be >= 1"));
        }
        if !(sigma_x_sq > 0.0) || !sigma_x_sq.is_finite() {
            return Err(Error::InvalidParam("sigma_x_sq must be finite and > 0"));
        }
        Ok(SignalPrior {
            n,
            sigma_x_sq,
            field,
        })
    }
}

/// Additive noise before and after the squaring nonlinearity.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    /// Covariance of `e^z` (Hermitian PSD, same field as the signal).
    pub c_ez: Mat,
    /// Mean of `e^y`.
    pub mean_ey: Vec<f64>,
    /// Covariance of `e^y` (real symmetric PSD).
    pub c_ey: Mat,
}

impl NoiseModel {
    /// The noiseless model of size `m`.
    pub fn noiseless(m: usize, field: FieldTag) -> NoiseModel {
        NoiseModel {
            c_ez: Mat::zeros(m, m, field),
            mean_ey: vec![0.0; m],
            c_ey: Mat::zeros(m, m, FieldTag::Real),
        }
    }

    /// Diagonal noise: `e^z ~ N(0, v_z I)`, `e^y ~ N(mean_y 1, v_y I)`.
    pub fn diagonal(m: usize, field: FieldTag, v_z: f64, mean_y: f64, v_y: f64) -> Result<NoiseModel> {
        if !(v_z >= 0.0) || !(v_y >= 0.0) || !v_z.is_finite() || !v_y.is_finite() || !mean_y.is_finite() {
            return Err(Error::InvalidParam("noise variances must be finite and >= 0"));
        }
        Ok(NoiseModel {
            c_ez: Mat::identity(m, field).scale_re(v_z),
            mean_ey: vec![mean_y; m],
            c_ey: Mat::identity(m, FieldTag::Real).scale_re(v_y),
        })
    }

    fn validate(&self, m: usize, field: FieldTag) -> Result<()> {
        if self.c_ez.rows() != m || self.c_ez.cols() != m {
            return Err(Error::ShapeMismatch {
                expected: (m, m),
                got: (self.c_ez.rows(), self.c_ez.cols()),
            });
        }
        if self.c_ez.field() != field {
            return Err(Error::WrongField {
                expected: field,
                got: self.c_ez.field(),
            });
        }
        if self.c_ey.rows() != m || self.c_ey.cols() != m {
            return Err(Error::ShapeMismatch {
                expected: (m, m),
                got: (self.c_ey.rows(), self.c_ey.cols()),
            });
        }
        if self.c_ey.field() != FieldTag::Real {
            return Err(Error::WrongField {
                expected: FieldTag::Real,
                got: self.c_ey.field(),
            });
        }
        if self.mean_ey.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.mean_ey.len(),
            });
        }
        Ok(())
    }
}

/// How the sensing matrix is generated.
#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleKind {
    /// Entries iid Gaussian with unit variance (`CN(0,1)` over ℂ).
    IidGaussian,
    /// `A = L_R G` with `G` iid unit-variance and `L_R L_R^T = R`,
    /// `R_ij = ρ^|i−j|`: rows are correlated, entry variance stays 1.
    RowCorrelated { rho: f64 },
    /// A caller-supplied matrix (the file-backed path in the CLI).
    Explicit(Mat),
}

/// Sensing-matrix ensemble: kind plus dimensions and field.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
    pub field: FieldTag,
}

impl Ensemble {
    pub fn iid(m: usize, n: usize, field: FieldTag) -> Ensemble {
        Ensemble {
            kind: EnsembleKind::IidGaussian,
            m,
            n,
            field,
        }
    }

    pub fn row_correlated(m: usize, n: usize, field: FieldTag, rho: f64) -> Result<Ensemble> {
        if !(libm::fabs(rho) < 1.0) {
            return Err(Error::InvalidParam("row correlation rho must satisfy |rho| < 1"));
        }
        Ok(Ensemble {
            kind: EnsembleKind::RowCorrelated { rho },
            m,
            n,
            field,
        })
    }

    pub fn explicit(a: Mat) -> Ensemble {
        let (m, n, field) = (a.rows(), a.cols(), a.field());
        Ensemble {
            kind: EnsembleKind::Explicit(a),
            m,
            n,
            field,
        }
    }
}

/// A drawn sensing matrix with its prior, noise, and cached covariances.
#[derive(Clone, Debug)]
pub struct MeasurementSystem {
    pub a: Mat,
    pub prior: SignalPrior,
    pub noise: NoiseModel,
    /// `C_z = σ_x² A A^H + C_ez`.
    pub c_z: Mat,
    ez_factor: Mat,
    ey_factor: Mat,
}

impl MeasurementSystem {
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn field(&self) -> FieldTag {
        self.prior.field
    }
}

/// Draw (or adopt) a sensing matrix and assemble the system around it.
pub fn build_system(
    ens: &Ensemble,
    prior: &SignalPrior,
    noise: NoiseModel,
    rng: &mut Rng,
) -> Result<MeasurementSystem> {
    if prior.field != ens.field {
        return Err(Error::FieldMismatch);
    }
    if prior.n != ens.n {
        return Err(Error::DimensionMismatch {
            expected: ens.n,
            got: prior.n,
        });
    }
    if ens.m == 0 || ens.n == 0 {
        return Err(Error::InvalidParam("system dimensions must be >= 1"));
    }
    noise.validate(ens.m, ens.field)?;

    let a = match &ens.kind {
        EnsembleKind::IidGaussian => draw_iid(ens.m, ens.n, ens.field, rng)?,
        EnsembleKind::RowCorrelated { rho } => {
            let g = draw_iid(ens.m, ens.n, ens.field, rng)?;
            let r = Mat::from_fn(ens.m, ens.m, FieldTag::Real, |i, j| {
                let d = if i > j { i - j } else { j - i };
                Complex64::new(libm::pow(*rho, d as f64), 0.0)
            });
            let l = psd_factor(&r, PSD_TOL)?;
            let l = if ens.field == FieldTag::Complex {
                l.to_complex()
            } else {
                l
            };
            l.mul(&g)?
        }
        EnsembleKind::Explicit(mat) => {
            if mat.rows() != ens.m || mat.cols() != ens.n {
                return Err(Error::ShapeMismatch {
                    expected: (ens.m, ens.n),
                    got: (mat.rows(), mat.cols()),
                });
            }
            if mat.field() != ens.field {
                return Err(Error::WrongField {
                    expected: ens.field,
                    got: mat.field(),
                });
            }
            mat.clone()
        }
    };

    // C_z = sigma_x^2 A A^H + C_ez (Hermitian by construction of gram()).
    let c_z = a.gram().scale_re(prior.sigma_x_sq).add(&noise.c_ez)?;

    let ez_factor = psd_factor(&noise.c_ez, PSD_TOL)?;
    let ey_factor = psd_factor(&noise.c_ey, PSD_TOL)?;

    Ok(MeasurementSystem {
        a,
        prior: prior.clone(),
        noise,
        c_z,
        ez_factor,
        ey_factor,
    })
}

fn draw_iid(m: usize, n: usize, field: FieldTag, rng: &mut Rng) -> Result<Mat> {
    let entries = rng.sample_gaussian(m * n, field, 1.0)?;
    match field {
        FieldTag::Real => {
            // keep the Real tag: entries already have zero imaginary parts
            let mut out = Mat::zeros(m, n, FieldTag::Real);
            for i in 0..m {
                for j in 0..n {
                    out.set(i, j, entries[i * n + j]);
                }
            }
            Ok(out)
        }
        FieldTag::Complex => Mat::from_complex(m, n, &entries),
    }
}

/// Draw `x ~ N(0, σ_x² I)` over the prior's field.
pub fn sample_signal(prior: &SignalPrior, rng: &mut Rng) -> Result<Vec<Complex64>> {
    rng.sample_gaussian(prior.n, prior.field, prior.sigma_x_sq)
}

/// Push one signal through the channel: returns `(y, z)` where
/// `z = A x + e^z` and `y = |z|² + e^y`. Noise draw order is `e^z` first,
/// then `e^y`, so a fixed stream reproduces a trial bitwise.
pub fn forward_measure(
    sys: &MeasurementSystem,
    x: &[Complex64],
    rng: &mut Rng,
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    if x.len() != sys.n() {
        return Err(Error::DimensionMismatch {
            expected: sys.n(),
            got: x.len(),
        });
    }
    let m = sys.m();
    let mut z = sys.a.matvec(x)?;

    let g = rng.sample_gaussian(m, sys.field(), 1.0)?;
    let ez = sys.ez_factor.matvec(&g)?;
    for i in 0..m {
        z[i] += ez[i];
    }

    let gy = rng.sample_gaussian(m, FieldTag::Real, 1.0)?;
    let ey = sys.ey_factor.matvec(&gy)?;

    let mut y = Vec::with_capacity(m);
    for i in 0..m {
        y.push(z[i].norm_sqr() + sys.noise.mean_ey[i] + ey[i].re);
    }
    Ok((y, z))
}
