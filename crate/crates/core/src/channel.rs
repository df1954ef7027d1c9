//! Baseband propagation: `y[n] = h·x[n-d]·exp(j2πnΔf/f_s) + w[n]`.
//!
//! The phase ramp runs on the receiver's absolute sample index `n`, and the
//! delay is a whole number of samples. No sampling-clock offset is modelled.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::ComplexSeq;

/// How the complex channel gain `h` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// `h = 1`, the pure AWGN case.
    #[default]
    Unit,
    Fixed(Complex64),
    /// `h ~ CN(0, sigma_h2)`, drawn once per call.
    Rayleigh { sigma_h2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub delay_samples: usize,
    pub freq_offset_hz: f64,
    pub sample_rate_hz: f64,
    pub gain_mode: GainMode,
    /// Noise variance per complex sample.
    pub noise_sigma2: f64,
    pub out_len: usize,
}

impl ChannelConfig {
    pub fn validate(&self, signal_len: usize) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return invalid(format!("sample rate {} must be positive", self.sample_rate_hz));
        }
        if !self.freq_offset_hz.is_finite() {
            return invalid("frequency offset must be finite");
        }
        if !(self.noise_sigma2.is_finite() && self.noise_sigma2 >= 0.0) {
            return invalid(format!("noise variance {} must be >= 0", self.noise_sigma2));
        }
        if let GainMode::Rayleigh { sigma_h2 } = self.gain_mode {
            if !(sigma_h2.is_finite() && sigma_h2 > 0.0) {
                return invalid(format!("rayleigh variance {sigma_h2} must be positive"));
            }
        }
        if self.delay_samples + signal_len > self.out_len {
            return invalid(format!(
                "delay {} + signal length {} exceeds window of {} samples",
                self.delay_samples, signal_len, self.out_len
            ));
        }
        Ok(())
    }
}

/// Per-sample SNR in dB: `10·log10(|h|²·E|x|² / σ_w²)` with `E|x|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub snr_db: f64,
}

pub fn snr_to_noise_sigma2(s: SnrSpec, gain_power: f64) -> f64 {
    gain_power / 10f64.powf(s.snr_db / 10.0)
}

/// Circular complex Gaussian with total variance `sigma2`.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma2: f64) -> Complex64 {
    let scale = (sigma2 / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Draws `h` (Rayleigh mode only) and then `out_len` noise samples, in that
/// order. With zero noise variance no noise samples are drawn.
pub fn apply_channel<R: Rng + ?Sized>(
    x: &ComplexSeq,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<ComplexSeq> {
    cfg.validate(x.len())?;
    let h = match cfg.gain_mode {
        GainMode::Unit => Complex64::new(1.0, 0.0),
        GainMode::Fixed(h) => h,
        GainMode::Rayleigh { sigma_h2 } => complex_gaussian(rng, sigma_h2),
    };
    let cycles_per_sample = cfg.freq_offset_hz / cfg.sample_rate_hz;
    let mut y = vec![Complex64::new(0.0, 0.0); cfg.out_len];
    for (m, s) in x.iter().enumerate() {
        let n = m + cfg.delay_samples;
        let turns = (n as f64 * cycles_per_sample).fract();
        y[n] = h * s * Complex64::from_polar(1.0, TAU * turns);
    }
    if cfg.noise_sigma2 > 0.0 {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, cfg.noise_sigma2);
        }
    }
    ComplexSeq::new(y)
}
