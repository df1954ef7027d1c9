//! Synchronization sequence generation.
//!
//! Chirps follow `x[n] = exp(jπ(a2·n² + a1·n + a0))`; Zadoff-Chu sequences
//! follow `x[n] = exp(-jπ·μ·n(n+1)/N)`, i.e. a chirp with `a2 = a1 = -μ/N`.

use std::f64::consts::PI;
use std::ops::Deref;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A finite, non-empty run of complex baseband samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSeq(Vec<Complex64>);

impl ComplexSeq {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return invalid("complex sequence must be non-empty");
        }
        Ok(ComplexSeq(samples))
    }

    /// `len` zero samples.
    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|s| s.norm_sqr()).sum()
    }
}

impl Deref for ComplexSeq {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

/// Quadratic-phase chirp parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub n_len: usize,
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_len < 2 {
            return invalid(format!("chirp length {} < 2", self.n_len));
        }
        if !(self.a2.is_finite() && self.a1.is_finite() && self.a0.is_finite()) {
            return invalid("chirp coefficients must be finite");
        }
        Ok(())
    }
}

/// Zadoff-Chu parameters. Primality of `n_len` is not required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZcSpec {
    pub n_len: usize,
    pub root: usize,
}

impl ZcSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_len < 2 {
            return invalid(format!("ZC length {} < 2", self.n_len));
        }
        if self.root >= self.n_len {
            return invalid(format!(
                "ZC root {} outside [0, {})",
                self.root, self.n_len
            ));
        }
        Ok(())
    }

    /// Quadratic coefficient of the equivalent chirp, `-μ/N`.
    pub fn chirp_a2(&self) -> f64 {
        -(self.root as f64) / self.n_len as f64
    }
}

pub fn gen_chirp(spec: &ChirpSpec) -> Result<ComplexSeq> {
    spec.validate()?;
    let samples = (0..spec.n_len)
        .map(|n| {
            let n = n as f64;
            Complex64::from_polar(1.0, PI * (spec.a2 * n * n + spec.a1 * n + spec.a0))
        })
        .collect();
    ComplexSeq::new(samples)
}

pub fn gen_zc(spec: &ZcSpec) -> Result<ComplexSeq> {
    spec.validate()?;
    let n_len = spec.n_len as u128;
    let root = spec.root as u128;
    // exp(-jπ·k/N) has period 2N in k, so reduce the integer exponent first.
    let samples = (0..n_len)
        .map(|n| {
            let k = (root * n * (n + 1)) % (2 * n_len);
            Complex64::from_polar(1.0, -PI * k as f64 / n_len as f64)
        })
        .collect();
    ComplexSeq::new(samples)
}

pub fn conjugate_seq(x: &ComplexSeq) -> ComplexSeq {
    ComplexSeq(x.iter().map(|s| s.conj()).collect())
}

/// Periodic frame carrying `pss` in even periods and `conj(pss)` in odd ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub period_samples: usize,
    pub pss: ComplexSeq,
    pub n_periods: usize,
    pub pss_offset: usize,
    /// Zeros outside the PSS when set, random unit-modulus data otherwise.
    pub guard_zero: bool,
}

impl FrameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_periods == 0 || self.period_samples == 0 {
            return invalid("frame needs at least one non-empty period");
        }
        if self.pss_offset + self.pss.len() > self.period_samples {
            return invalid(format!(
                "PSS at offset {} with length {} overflows period of {} samples",
                self.pss_offset,
                self.pss.len(),
                self.period_samples
            ));
        }
        Ok(())
    }
}

/// Assemble the alternating-conjugate frame. `rng` is only consumed for the
/// data fill, one uniform phase per non-PSS sample in order.
pub fn build_frame<R: Rng + ?Sized>(fs: &FrameSpec, rng: &mut R) -> Result<ComplexSeq> {
    fs.validate()?;
    let total = fs.n_periods * fs.period_samples;
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    let conj = conjugate_seq(&fs.pss);
    for p in 0..fs.n_periods {
        let base = p * fs.period_samples;
        let pss_start = base + fs.pss_offset;
        let pss_end = pss_start + fs.pss.len();
        let seq = if p % 2 == 0 { &fs.pss } else { &conj };
        out[pss_start..pss_end].copy_from_slice(seq);
        if !fs.guard_zero {
            for i in (base..pss_start).chain(pss_end..base + fs.period_samples) {
                out[i] = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
            }
        }
    }
    ComplexSeq::new(out)
}
