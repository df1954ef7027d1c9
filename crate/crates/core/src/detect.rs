//! Sliding correlators and timing estimators.
//!
//! All correlators treat the received buffer as zero outside its support, so
//! any lag range is valid. Normalizations are `1/N` for the direct and M-part
//! forms and `1/(N - k_d)` for the differential form, which makes a perfect
//! noiseless match read exactly 1.

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::ComplexSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrKind {
    Direct,
    /// Noncoherent combination of `M` equal segments.
    MPart(usize),
    /// Products of samples `k_d` apart.
    Differential(usize),
}

/// Correlator magnitude versus candidate lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrOutput {
    magnitudes: Vec<f64>,
    lag_offset: i64,
    kind: CorrKind,
}

impl CorrOutput {
    pub fn new(magnitudes: Vec<f64>, lag_offset: i64, kind: CorrKind) -> Result<Self> {
        if magnitudes.is_empty() {
            return invalid("correlator output must cover at least one lag");
        }
        if magnitudes.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return invalid("correlator magnitudes must be finite and non-negative");
        }
        Ok(CorrOutput { magnitudes, lag_offset, kind })
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Lag of `magnitudes()[0]`.
    pub fn lag_offset(&self) -> i64 {
        self.lag_offset
    }

    pub fn kind(&self) -> CorrKind {
        self.kind
    }

    pub fn lags(&self) -> Range<i64> {
        self.lag_offset..self.lag_offset + self.magnitudes.len() as i64
    }

    /// Magnitude at `lag`, if it was searched.
    pub fn at(&self, lag: i64) -> Option<f64> {
        usize::try_from(lag - self.lag_offset)
            .ok()
            .and_then(|i| self.magnitudes.get(i).copied())
    }
}

/// Timing estimate in samples on the receiver clock. Pair averages may land
/// on half samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingEstimate {
    pub k_hat: f64,
    pub peak_mag: f64,
}

/// `Σ_n y[n+k]·conj(x[n])` over the indices where both are defined.
fn sliding_dot(y: &[Complex64], x: &[Complex64], k: i64, parts: Range<usize>) -> Complex64 {
    let lo = (parts.start as i64).max(-k);
    let hi = (parts.end as i64).min(y.len() as i64 - k);
    if lo >= hi {
        return Complex64::new(0.0, 0.0);
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let ys = &y[(lo as i64 + k) as usize..(hi as i64 + k) as usize];
    ys.iter()
        .zip(&x[lo..hi])
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj())
}

fn check_range(k_range: &Range<i64>) -> Result<()> {
    if k_range.is_empty() {
        return invalid(format!("empty lag range {k_range:?}"));
    }
    Ok(())
}

pub fn direct_correlate(
    y: &ComplexSeq,
    x_local: &ComplexSeq,
    k_range: Range<i64>,
) -> Result<CorrOutput> {
    check_range(&k_range)?;
    let n = x_local.len();
    let scale = 1.0 / n as f64;
    let lag_offset = k_range.start;
    let magnitudes = k_range
        .map(|k| sliding_dot(y, x_local, k, 0..n).norm() * scale)
        .collect();
    CorrOutput::new(magnitudes, lag_offset, CorrKind::Direct)
}

pub fn mpart_correlate(
    y: &ComplexSeq,
    x_local: &ComplexSeq,
    m_parts: usize,
    k_range: Range<i64>,
) -> Result<CorrOutput> {
    check_range(&k_range)?;
    let n = x_local.len();
    if m_parts == 0 || n % m_parts != 0 {
        return invalid(format!("{m_parts} parts do not divide length {n}"));
    }
    let seg = n / m_parts;
    let scale = 1.0 / n as f64;
    let lag_offset = k_range.start;
    let magnitudes = k_range
        .map(|k| {
            let power: f64 = (0..m_parts)
                .map(|m| sliding_dot(y, x_local, k, m * seg..(m + 1) * seg).norm_sqr())
                .sum();
            power.sqrt() * scale
        })
        .collect();
    CorrOutput::new(magnitudes, lag_offset, CorrKind::MPart(m_parts))
}

pub fn diff_correlate(
    y: &ComplexSeq,
    x_local: &ComplexSeq,
    k_d: usize,
    k_range: Range<i64>,
) -> Result<CorrOutput> {
    check_range(&k_range)?;
    let n = x_local.len();
    if k_d == 0 || k_d >= n {
        return invalid(format!("differential lag {k_d} outside [1, {n})"));
    }
    // The sum factors as a sliding dot product between the received products
    // y[m+k_d]·y*[m] and the local products x[n+k_d]·x*[n].
    let rx: Vec<Complex64> = y.windows(k_d + 1).map(|w| w[k_d] * w[0].conj()).collect();
    let local: Vec<Complex64> = x_local
        .windows(k_d + 1)
        .map(|w| w[k_d] * w[0].conj())
        .collect();
    let terms = n - k_d;
    let scale = 1.0 / terms as f64;
    let lag_offset = k_range.start;
    let magnitudes = k_range
        .map(|k| sliding_dot(&rx, &local, k, 0..terms).norm() * scale)
        .collect();
    CorrOutput::new(magnitudes, lag_offset, CorrKind::Differential(k_d))
}

/// Lag of the largest magnitude; ties go to the smallest lag.
pub fn argmax_timing(c: &CorrOutput) -> TimingEstimate {
    let (best, peak) = c
        .magnitudes
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bm), (i, &m)| {
            if m > bm {
                (i, m)
            } else {
                (bi, bm)
            }
        });
    TimingEstimate {
        k_hat: (c.lag_offset + best as i64) as f64,
        peak_mag: peak,
    }
}

/// Average of the estimates against `x` and `x*`, both already referred to
/// the same PSS position.
pub fn conjugate_pair_estimate(e1: TimingEstimate, e2: TimingEstimate) -> TimingEstimate {
    TimingEstimate {
        k_hat: (e1.k_hat + e2.k_hat) / 2.0,
        peak_mag: e1.peak_mag.min(e2.peak_mag),
    }
}
