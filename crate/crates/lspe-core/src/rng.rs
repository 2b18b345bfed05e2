//! Reproducible random number streams.
//!
//! Every random quantity in this crate is drawn from an [`Rng`] addressed by a
//! `(seed, stream_id)` pair. Equal pairs yield bit-identical sequences on any
//! platform, and distinct stream ids under one seed are statistically
//! independent, so a Monte-Carlo run can hand stream `base + 1 + t` to trial
//! `t` and get results that do not depend on how trials were scheduled.
//!
//! Gaussians come from a Box-Muller transform over `libm`, which keeps the
//! sampler `no_std` and bit-deterministic. Complex samples are circularly
//! symmetric: real and imaginary parts are independent `N(0, σ²/2)`, so the
//! total variance `E|x|²` equals the requested `σ²`.

use alloc::vec::Vec;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::mat::FieldTag;

const TWO_PI: f64 = core::f64::consts::TAU;

/// Seeded, stream-addressed random generator.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    /// Generator for stream `stream_id` of the family identified by `seed`.
    pub fn new(seed: u64, stream_id: u64) -> Rng {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Rng {
            seed,
            stream_id,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Fresh generator on stream `stream_id + offset` of the same seed.
    ///
    /// Callers that fan out (per trial, per system, ...) must space their base
    /// stream ids far enough apart that derived ranges do not collide.
    pub fn substream(&self, offset: u64) -> Rng {
        Rng::new(self.seed, self.stream_id.wrapping_add(offset))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in the half-open interval `(0, 1]` with 53-bit resolution.
    pub fn uniform_open_closed(&mut self) -> f64 {
        let bits = self.inner.next_u64() >> 11; // top 53 bits
        (bits as f64 + 1.0) * (1.0 / 9007199254740992.0) // 2^-53
    }

    /// Standard normal draw (Box-Muller; the paired value is cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u = self.uniform_open_closed();
        let v = self.uniform_open_closed();
        let r = libm::sqrt(-2.0 * libm::log(u));
        let theta = TWO_PI * v;
        self.spare_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// `n` independent zero-mean Gaussians of total variance `variance` each:
    /// `N(0, σ²)` over ℝ, circularly symmetric `CN(0, σ²)` over ℂ.
    pub fn sample_gaussian(
        &mut self,
        n: usize,
        field: FieldTag,
        variance: f64,
    ) -> Result<Vec<Complex64>> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::InvalidParam("gaussian variance must be finite and >= 0"));
        }
        let mut out = Vec::with_capacity(n);
        match field {
            FieldTag::Real => {
                let s = libm::sqrt(variance);
                for _ in 0..n {
                    out.push(Complex64::new(s * self.standard_normal(), 0.0));
                }
            }
            FieldTag::Complex => {
                let s = libm::sqrt(variance * 0.5);
                for _ in 0..n {
                    let re = s * self.standard_normal();
                    let im = s * self.standard_normal();
                    out.push(Complex64::new(re, im));
                }
            }
        }
        Ok(out)
    }
}
