//! Measurement preprocessors `𝒯(y)`.
//!
//! A preprocessor maps the raw intensity measurements elementwise before the
//! spectral matrix is formed. `identity` and `exp:GAMMA` admit closed-form
//! estimator moments; `optimal:DELTA` is the asymptotically optimal shape
//! `(y−1)/(y+√δ−1)` for unit-variance models, and `trunc:TAU` keeps a
//! measurement only while it does not exceed the threshold.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Elementwise measurement transform.
#[derive(Clone, Debug, PartialEq)]
pub enum Preprocessor {
    /// `𝒯(y) = y`
    Identity,
    /// `𝒯(y) = exp(−γ y)`, `γ > 0`
    Exponential { gamma: f64 },
    /// `𝒯(y) = (y − 1)/(y + √δ − 1)`, `δ > 1`
    Optimal { delta: f64 },
    /// `𝒯(y) = y·1[y ≤ τ]`, `τ > 0`
    Truncate { tau: f64 },
}

impl Preprocessor {
    /// Parse the textual form: `identity | exp:GAMMA | optimal:DELTA |
    /// trunc:TAU`, validating each parameter's domain.
    pub fn parse(s: &str) -> Result<Preprocessor> {
        let s = s.trim();
        if s == "identity" {
            return Ok(Preprocessor::Identity);
        }
        if let Some(rest) = s.strip_prefix("exp:") {
            let gamma: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam("exp preprocessor: GAMMA is not a number"))?;
            if !(gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::InvalidParam("exp preprocessor requires GAMMA > 0"));
            }
            return Ok(Preprocessor::Exponential { gamma });
        }
        if let Some(rest) = s.strip_prefix("optimal:") {
            let delta: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam("optimal preprocessor: DELTA is not a number"))?;
            if !(delta > 1.0) || !delta.is_finite() {
                return Err(Error::InvalidParam("optimal preprocessor requires DELTA > 1"));
            }
            return Ok(Preprocessor::Optimal { delta });
        }
        if let Some(rest) = s.strip_prefix("trunc:") {
            let tau: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam("trunc preprocessor: TAU is not a number"))?;
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::InvalidParam("trunc preprocessor requires TAU > 0"));
            }
            return Ok(Preprocessor::Truncate { tau });
        }
        Err(Error::InvalidParam(
            "unknown preprocessor (expected identity | exp:GAMMA | optimal:DELTA | trunc:TAU)",
        ))
    }

    /// Canonical textual form (inverse of [`Preprocessor::parse`]).
    pub fn label(&self) -> String {
        use alloc::format;
        match self {
            Preprocessor::Identity => String::from("identity"),
            Preprocessor::Exponential { gamma } => format!("exp:{gamma}"),
            Preprocessor::Optimal { delta } => format!("optimal:{delta}"),
            Preprocessor::Truncate { tau } => format!("trunc:{tau}"),
        }
    }

    /// Apply elementwise. The optimal preprocessor rejects inputs within
    /// 1e-12 of its pole at `y = 1 − √δ`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(y.len());
        match *self {
            Preprocessor::Identity => out.extend_from_slice(y),
            Preprocessor::Exponential { gamma } => {
                for &v in y {
                    out.push(libm::exp(-gamma * v));
                }
            }
            Preprocessor::Optimal { delta } => {
                let sqrt_delta = libm::sqrt(delta);
                for (i, &v) in y.iter().enumerate() {
                    let den = v + sqrt_delta - 1.0;
                    if libm::fabs(den) < 1e-12 {
                        return Err(Error::PreprocessorPole { index: i });
                    }
                    out.push((v - 1.0) / den);
                }
            }
            Preprocessor::Truncate { tau } => {
                for &v in y {
                    out.push(if v <= tau { v } else { 0.0 });
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_passes_through() {
        let p = Preprocessor::parse("identity").unwrap();
        assert_eq!(p.apply(&[0.0, 1.5, 9.0]).unwrap(), vec![0.0, 1.5, 9.0]);
    }

    #[test]
    fn exponential_matches_libm() {
        let p = Preprocessor::parse("exp:0.5").unwrap();
        let out = p.apply(&[0.0, 2.0]).unwrap();
        assert_eq!(out[0], 1.0);
        assert!((out[1] - libm::exp(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn optimal_shape_and_pole() {
        // delta = 4: T(y) = (y-1)/(y+1); T(0) = -1, T(1) = 0, T(3) = 0.5
        let p = Preprocessor::parse("optimal:4").unwrap();
        let out = p.apply(&[0.0, 1.0, 3.0]).unwrap();
        assert!((out[0] + 1.0).abs() < 1e-15);
        assert_eq!(out[1], 0.0);
        assert!((out[2] - 0.5).abs() < 1e-15);
        // pole at y = 1 - sqrt(4) = -1
        match p.apply(&[0.5, -1.0]) {
            Err(Error::PreprocessorPole { index: 1 }) => {}
            other => panic!("expected pole error at index 1, got {other:?}"),
        }
    }

    #[test]
    fn truncate_keeps_small_values_and_zeroes_large_ones() {
        let p = Preprocessor::parse("trunc:2.5").unwrap();
        assert_eq!(p.apply(&[1.0, 2.5, 2.6]).unwrap(), vec![1.0, 2.5, 0.0]);
    }

    #[test]
    fn parse_rejects_bad_parameters() {
        assert!(Preprocessor::parse("exp:0").is_err());
        assert!(Preprocessor::parse("exp:-1").is_err());
        assert!(Preprocessor::parse("exp:abc").is_err());
        assert!(Preprocessor::parse("optimal:1").is_err());
        assert!(Preprocessor::parse("trunc:0").is_err());
        assert!(Preprocessor::parse("median").is_err());
    }

    #[test]
    fn labels_round_trip() {
        for s in ["identity", "exp:0.001", "optimal:4", "trunc:9"] {
            let p = Preprocessor::parse(s).unwrap();
            assert_eq!(Preprocessor::parse(&p.label()).unwrap(), p);
        }
    }
}
