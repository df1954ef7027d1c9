//! Monte Carlo timing-detection experiment.
//!
//! Each trial draws a uniform carrier offset and a uniform delay, sends a
//! two-period frame through a unit-gain AWGN channel and runs one detection
//! scheme. A trial is an error when the estimate misses the true delay by
//! more than `error_threshold_s`.
//!
//! Every trial owns a ChaCha stream keyed by `(seed, snr index, trial
//! index)`, so results do not depend on scheduling, and all schemes at the
//! same SNR see the same offsets, delays and noise.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, snr_to_noise_sigma2, ChannelConfig, GainMode, SnrSpec};
use crate::detect::{
    argmax_timing, conjugate_pair_estimate, diff_correlate, direct_correlate, TimingEstimate,
};
use crate::error::{invalid, Error, Result};
use crate::signal::{build_frame, conjugate_seq, gen_zc, ComplexSeq, FrameSpec, ZcSpec};

/// Two-sided 95% normal quantile.
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Nominal synchronization period in seconds.
const SYNC_PERIOD_S: f64 = 10e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `x` then `x*`, direct correlation on each, estimates averaged.
    ConjugatedPair,
    /// Direct correlation on the first period only.
    DirectSingle,
    /// Differential correlation on the first period only.
    DiffSingle,
    /// Differential correlation on both periods, estimates averaged.
    DiffAveragedPair,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::ConjugatedPair,
        Scheme::DirectSingle,
        Scheme::DiffSingle,
        Scheme::DiffAveragedPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ConjugatedPair => "conjugated_pair",
            Scheme::DirectSingle => "direct_single",
            Scheme::DiffSingle => "diff_single",
            Scheme::DiffAveragedPair => "diff_averaged_pair",
        }
    }

    /// Whether the second period carries `x*` rather than another `x`.
    pub fn uses_conjugate(self) -> bool {
        self == Scheme::ConjugatedPair
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_len: usize,
    pub root: usize,
    pub subcarrier_spacing_hz: f64,
    /// Defaults to `n_len · subcarrier_spacing_hz`.
    pub sample_rate_hz: Option<f64>,
    /// Defaults to 10 ms rounded to whole samples.
    pub period_samples: Option<usize>,
    pub max_cfo_hz: f64,
    /// Pins every trial's offset instead of drawing it (still consumes the draw).
    pub fixed_cfo_hz: Option<f64>,
    /// `+inf` means noiseless.
    pub snr_db_list: Vec<f64>,
    pub n_trials: u64,
    pub schemes: Vec<Scheme>,
    /// Sample distance of the differential correlators.
    pub kd: usize,
    pub error_threshold_s: f64,
    pub seed: u64,
    /// Random unit-modulus data around the PSS instead of zeros.
    pub data_fill: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_len: 131,
            root: 1,
            subcarrier_spacing_hz: 1250.0,
            sample_rate_hz: None,
            period_samples: None,
            max_cfo_hz: 40_000.0,
            fixed_cfo_hz: None,
            snr_db_list: (0..=10).map(|i| -14.0 + 2.0 * i as f64).collect(),
            n_trials: 2000,
            schemes: Scheme::ALL.to_vec(),
            kd: 1,
            error_threshold_s: 1e-6,
            seed: 0,
            data_fill: false,
        }
    }
}

impl SimConfig {
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate_hz
            .unwrap_or(self.n_len as f64 * self.subcarrier_spacing_hz)
    }

    pub fn period(&self) -> usize {
        self.period_samples
            .unwrap_or_else(|| (SYNC_PERIOD_S * self.sample_rate()).round() as usize)
    }

    /// Same configuration with the derived defaults written out.
    pub fn resolved(&self) -> SimConfig {
        SimConfig {
            sample_rate_hz: Some(self.sample_rate()),
            period_samples: Some(self.period()),
            ..self.clone()
        }
    }

    fn largest_offset_hz(&self) -> f64 {
        self.fixed_cfo_hz.map_or(0.0, f64::abs).max(self.max_cfo_hz)
    }

    /// Slack around the nominal PSS position that covers the largest
    /// CFO-induced peak shift of `N·Δf/f_s` samples.
    pub fn search_margin(&self) -> usize {
        (self.n_len as f64 * self.largest_offset_hz() / self.sample_rate()).ceil() as usize + 2
    }

    /// Largest true delay drawn by a trial.
    pub fn max_delay(&self) -> usize {
        self.period() - self.n_len - self.search_margin()
    }

    pub fn validate(&self) -> Result<()> {
        ZcSpec { n_len: self.n_len, root: self.root }.validate()?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.subcarrier_spacing_hz) {
            return invalid("subcarrier spacing must be positive");
        }
        if !positive(self.sample_rate()) {
            return invalid("sample rate must be positive");
        }
        if !(self.max_cfo_hz.is_finite() && self.max_cfo_hz >= 0.0) {
            return invalid("maximum CFO must be finite and >= 0");
        }
        if self.fixed_cfo_hz.is_some_and(|f| !f.is_finite()) {
            return invalid("fixed CFO must be finite");
        }
        if !positive(self.error_threshold_s) {
            return invalid("error threshold must be positive");
        }
        if self.snr_db_list.is_empty() || self.snr_db_list.iter().any(|s| s.is_nan()) {
            return invalid("SNR list must be non-empty and free of NaN");
        }
        if self.n_trials == 0 {
            return invalid("at least one trial is required");
        }
        if self.schemes.is_empty() {
            return invalid("at least one scheme is required");
        }
        if self.kd == 0 || self.kd >= self.n_len {
            return invalid(format!("kd {} outside [1, {})", self.kd, self.n_len));
        }
        if self.period() < self.n_len + self.search_margin() {
            return invalid(format!(
                "period of {} samples cannot hold a {}-sample PSS plus a {}-sample search margin",
                self.period(),
                self.n_len,
                self.search_margin()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub true_delay: usize,
    pub estimate: f64,
    pub cfo_hz: f64,
    pub is_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub error_rate: f64,
    pub errors: u64,
    pub trials: u64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Rows in SNR-major order, schemes in configured order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, snr_db: f64, scheme: Scheme) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.snr_db == snr_db)
    }

    pub fn scheme_rows(&self, scheme: Scheme) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }
}

/// 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Random stream of one trial.
pub fn trial_rng(seed: u64, snr_index: usize, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) | trial_index);
    rng
}

/// Validated configuration plus the local replicas.
struct Experiment<'a> {
    cfg: &'a SimConfig,
    x: ComplexSeq,
    x_conj: ComplexSeq,
    period: usize,
    margin: usize,
    sample_rate: f64,
}

impl<'a> Experiment<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let x = gen_zc(&ZcSpec { n_len: cfg.n_len, root: cfg.root })?;
        let x_conj = conjugate_seq(&x);
        Ok(Experiment {
            cfg,
            x,
            x_conj,
            period: cfg.period(),
            margin: cfg.search_margin(),
            sample_rate: cfg.sample_rate(),
        })
    }

    /// Lag window of one full period around PSS occurrence `occurrence`.
    fn window(&self, occurrence: usize) -> Range<i64> {
        let start = (occurrence * self.period) as i64 - self.margin as i64;
        start..start + self.period as i64
    }

    fn frame<R: Rng + ?Sized>(&self, scheme: Scheme, rng: &mut R) -> Result<ComplexSeq> {
        let spec = FrameSpec {
            period_samples: self.period,
            pss: self.x.clone(),
            n_periods: 2,
            pss_offset: 0,
            guard_zero: !self.cfg.data_fill,
        };
        let frame = build_frame(&spec, rng)?;
        if scheme.uses_conjugate() {
            return Ok(frame);
        }
        let mut samples = frame.into_inner();
        samples[self.period..self.period + self.x.len()].copy_from_slice(&self.x);
        ComplexSeq::new(samples)
    }

    fn detect(&self, y: &ComplexSeq, scheme: Scheme) -> Result<TimingEstimate> {
        let kd = self.cfg.kd;
        let shift_back = |mut e: TimingEstimate| {
            e.k_hat -= self.period as f64;
            e
        };
        let est = match scheme {
            Scheme::ConjugatedPair => {
                let e1 = argmax_timing(&direct_correlate(y, &self.x, self.window(0))?);
                let e2 = argmax_timing(&direct_correlate(y, &self.x_conj, self.window(1))?);
                conjugate_pair_estimate(e1, shift_back(e2))
            }
            Scheme::DirectSingle => argmax_timing(&direct_correlate(y, &self.x, self.window(0))?),
            Scheme::DiffSingle => argmax_timing(&diff_correlate(y, &self.x, kd, self.window(0))?),
            Scheme::DiffAveragedPair => {
                let e1 = argmax_timing(&diff_correlate(y, &self.x, kd, self.window(0))?);
                let e2 = argmax_timing(&diff_correlate(y, &self.x, kd, self.window(1))?);
                conjugate_pair_estimate(e1, shift_back(e2))
            }
        };
        Ok(est)
    }

    /// Draw order: offset, delay, frame data, noise.
    fn trial<R: Rng + ?Sized>(&self, scheme: Scheme, snr_db: f64, rng: &mut R) -> Result<TrialResult> {
        let cfg = self.cfg;
        let drawn = cfg.max_cfo_hz * (2.0 * rng.random::<f64>() - 1.0);
        let cfo_hz = cfg.fixed_cfo_hz.unwrap_or(drawn);
        let true_delay = rng.random_range(0..=cfg.max_delay());
        let frame = self.frame(scheme, rng)?;
        let channel = ChannelConfig {
            delay_samples: true_delay,
            freq_offset_hz: cfo_hz,
            sample_rate_hz: self.sample_rate,
            gain_mode: GainMode::Unit,
            noise_sigma2: snr_to_noise_sigma2(SnrSpec { snr_db }, 1.0),
            out_len: 3 * self.period,
        };
        let y = apply_channel(&frame, &channel, rng)?;
        let estimate = self.detect(&y, scheme)?.k_hat;
        let is_error =
            (estimate - true_delay as f64).abs() / self.sample_rate > cfg.error_threshold_s;
        Ok(TrialResult { true_delay, estimate, cfo_hz, is_error })
    }
}

pub fn run_trial<R: Rng + ?Sized>(
    cfg: &SimConfig,
    scheme: Scheme,
    snr_db: f64,
    rng: &mut R,
) -> Result<TrialResult> {
    Experiment::new(cfg)?.trial(scheme, snr_db, rng)
}

/// Timing estimate of `scheme` on a received buffer whose first PSS is
/// nominally at sample 0 and second at `cfg.period()`.
pub fn scheme_detect(y: &ComplexSeq, scheme: Scheme, cfg: &SimConfig) -> Result<TimingEstimate> {
    Experiment::new(cfg)?.detect(y, scheme)
}

pub fn run_sweep(cfg: &SimConfig) -> Result<SweepResult> {
    run_sweep_with(cfg, |_| {})
}

/// [`run_sweep`] with a callback after each finished row.
pub fn run_sweep_with(cfg: &SimConfig, on_row: impl Fn(&SweepRow)) -> Result<SweepResult> {
    let exp = Experiment::new(cfg)?;
    let mut rows = Vec::with_capacity(cfg.snr_db_list.len() * cfg.schemes.len());
    for (si, &snr_db) in cfg.snr_db_list.iter().enumerate() {
        for &scheme in &cfg.schemes {
            let errors = (0..cfg.n_trials)
                .into_par_iter()
                .map(|t| {
                    exp.trial(scheme, snr_db, &mut trial_rng(cfg.seed, si, t))
                        .map(|r| u64::from(r.is_error))
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            let (wilson_lo, wilson_hi) = wilson_interval(errors, cfg.n_trials);
            let row = SweepRow {
                snr_db,
                scheme,
                error_rate: errors as f64 / cfg.n_trials as f64,
                errors,
                trials: cfg.n_trials,
                wilson_lo,
                wilson_hi,
            };
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_channel;

    #[test]
    fn defaults_resolve() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.sample_rate(), 163_750.0);
        assert_eq!(cfg.period(), 1638);
        assert_eq!(cfg.search_margin(), 34);
        assert_eq!(cfg.max_delay(), 1638 - 131 - 34);
        cfg.validate().unwrap();
        let r = cfg.resolved();
        assert_eq!(r.sample_rate_hz, Some(163_750.0));
        assert_eq!(r.period_samples, Some(1638));
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            SimConfig { n_trials: 0, ..SimConfig::default() },
            SimConfig { root: 131, ..SimConfig::default() },
            SimConfig { kd: 131, ..SimConfig::default() },
            SimConfig { snr_db_list: vec![], ..SimConfig::default() },
            SimConfig { schemes: vec![], ..SimConfig::default() },
            SimConfig { period_samples: Some(150), ..SimConfig::default() },
            SimConfig { max_cfo_hz: -1.0, ..SimConfig::default() },
        ];
        for cfg in bad {
            assert!(run_sweep(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("npss".parse::<Scheme>().is_err());
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036_994).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5);
        let (lo, hi) = wilson_interval(100, 100);
        assert!(hi == 1.0 && lo < 1.0);
    }

    fn received(cfg: &SimConfig, scheme: Scheme, delay: usize, dlam: f64) -> ComplexSeq {
        let exp = Experiment::new(cfg).unwrap();
        let frame = exp.frame(scheme, &mut trial_rng(0, 0, 0)).unwrap();
        let ch = ChannelConfig {
            delay_samples: delay,
            freq_offset_hz: dlam * cfg.subcarrier_spacing_hz,
            sample_rate_hz: cfg.sample_rate(),
            gain_mode: GainMode::Unit,
            noise_sigma2: 0.0,
            out_len: 3 * cfg.period(),
        };
        apply_channel(&frame, &ch, &mut trial_rng(0, 0, 0)).unwrap()
    }

    #[test]
    fn noiseless_scheme_estimates() {
        let cfg = SimConfig::default();
        let d = 700;
        let y = received(&cfg, Scheme::ConjugatedPair, d, 20.0);
        assert_eq!(scheme_detect(&y, Scheme::ConjugatedPair, &cfg).unwrap().k_hat, d as f64);

        let y = received(&cfg, Scheme::DirectSingle, d, 20.0);
        // The transmitted ZC has quadratic coefficient -1/N: peak at d + Δλ.
        assert_eq!(scheme_detect(&y, Scheme::DirectSingle, &cfg).unwrap().k_hat, (d + 20) as f64);
        for dlam in [-31.5, -3.0, 0.0, 11.2, 20.0, 32.0] {
            let y = received(&cfg, Scheme::DiffSingle, d, dlam);
            assert_eq!(scheme_detect(&y, Scheme::DiffSingle, &cfg).unwrap().k_hat, d as f64);
            assert_eq!(scheme_detect(&y, Scheme::DiffAveragedPair, &cfg).unwrap().k_hat, d as f64);
        }
    }

    #[test]
    fn edge_delays_stay_inside_windows() {
        let cfg = SimConfig::default();
        for d in [0, cfg.max_delay()] {
            for dlam in [-32.0, 32.0] {
                let y = received(&cfg, Scheme::ConjugatedPair, d, dlam);
                assert_eq!(scheme_detect(&y, Scheme::ConjugatedPair, &cfg).unwrap().k_hat, d as f64);
            }
        }
    }

    #[test]
    fn high_snr_conjugated_pair_never_errs() {
        let cfg = SimConfig::default();
        for seed in 0..100 {
            let r = run_trial(&cfg, Scheme::ConjugatedPair, 60.0, &mut trial_rng(seed, 0, 0)).unwrap();
            assert!(!r.is_error, "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn high_snr_direct_single_errs_at_full_offset() {
        let cfg = SimConfig { fixed_cfo_hz: Some(40_000.0), ..SimConfig::default() };
        let r = run_trial(&cfg, Scheme::DirectSingle, 60.0, &mut trial_rng(3, 0, 0)).unwrap();
        assert!(r.is_error);
        assert_eq!(r.estimate - r.true_delay as f64, 32.0);
    }

    #[test]
    fn ideal_conditions_never_err() {
        let cfg = SimConfig { max_cfo_hz: 0.0, ..SimConfig::default() };
        for scheme in Scheme::ALL {
            for seed in 0..5 {
                let r = run_trial(&cfg, scheme, f64::INFINITY, &mut trial_rng(seed, 0, 0)).unwrap();
                assert!(!r.is_error && r.cfo_hz == 0.0, "{scheme} {r:?}");
            }
        }
    }

    #[test]
    fn single_trial_sweep_matches_run_trial() {
        let cfg = SimConfig {
            n_trials: 1,
            snr_db_list: vec![-4.0],
            schemes: vec![Scheme::ConjugatedPair],
            seed: 77,
            ..SimConfig::default()
        };
        let sweep = run_sweep(&cfg).unwrap();
        let r = run_trial(&cfg, Scheme::ConjugatedPair, -4.0, &mut trial_rng(77, 0, 0)).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        assert_eq!(sweep.rows[0].errors, u64::from(r.is_error));
    }

    #[test]
    fn data_fill_trials_run() {
        let cfg = SimConfig { data_fill: true, ..SimConfig::default() };
        let r = run_trial(&cfg, Scheme::ConjugatedPair, 60.0, &mut trial_rng(1, 0, 0)).unwrap();
        assert!(r.estimate.is_finite());
    }
}
