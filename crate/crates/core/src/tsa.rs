//! Time-synchronous averaging (TSA).
//!
//! Folds a signal at the shaft period and averages: with `V` samples per
//! revolution and `L` whole revolutions in the record,
//! `averaged[i] = (1/L) Σ_n signal[start(n) + i]`. Content synchronous with
//! the shaft adds coherently; everything else (noise, asynchronous tones) is
//! attenuated — white noise variance drops by the factor `L`.
//!
//! The output grid is `V = round(sample_rate / shaft_freq)` samples. Each
//! revolution's start index is phase-locked to the true period,
//! `start(n) = round(n · sample_rate / shaft_freq)`, so a non-integer
//! sample-per-revolution ratio contributes at most half a sample of phase
//! error per revolution instead of accumulating across the record. The
//! result still carries a warning flag once the slip a naive fixed-stride
//! fold would have accumulated exceeds half a sample — at that point the
//! phase correction is materially engaged and sub-sample jitter remains in
//! the average.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util;

#[derive(Debug, Error)]
pub enum TsaError {
    #[error("shaft frequency and sample rate must be finite and > 0")]
    BadRate,
    #[error("samples per revolution V = {v} is too small (need >= 2)")]
    PeriodTooShort { v: i64 },
    #[error("record too short: {len} samples, need at least one revolution ({v})")]
    TooShort { len: usize, v: usize },
    #[error("signal contains non-finite samples")]
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct TsaResult {
    /// One averaged revolution, `samples_per_period` long.
    pub averaged: Vec<f64>,
    /// V — samples per shaft revolution.
    pub samples_per_period: usize,
    /// L — whole revolutions averaged.
    pub periods_averaged: usize,
    /// RMS of what averaging removed over the folded span.
    pub residual_rms: f64,
    /// Set when a fixed-stride fold would have slipped more than half a
    /// sample over the record; starts are phase-locked, so only sub-sample
    /// jitter remains in the average.
    pub drift_warning: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsaSidecar {
    pub samples_per_period: usize,
    pub periods_averaged: usize,
    pub residual_rms: f64,
    pub drift_warning: bool,
    pub sample_rate_hz: f64,
    pub shaft_freq_hz: f64,
}

impl TsaResult {
    /// CSV with header `angle_fraction,averaged_value`; angle runs [0, 1).
    pub fn to_csv(&self) -> String {
        let v = self.samples_per_period as f64;
        let mut out = String::from("angle_fraction,averaged_value\n");
        for (i, val) in self.averaged.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i as f64 / v, val));
        }
        out
    }

    pub fn sidecar(&self, sample_rate_hz: f64, shaft_freq_hz: f64) -> TsaSidecar {
        TsaSidecar {
            samples_per_period: self.samples_per_period,
            periods_averaged: self.periods_averaged,
            residual_rms: self.residual_rms,
            drift_warning: self.drift_warning,
            sample_rate_hz,
            shaft_freq_hz,
        }
    }
}

/// Average `signal` over whole shaft revolutions.
pub fn tsa(signal: &[f64], sample_rate_hz: f64, shaft_freq_hz: f64) -> Result<TsaResult, TsaError> {
    if !(sample_rate_hz > 0.0 && shaft_freq_hz > 0.0)
        || !sample_rate_hz.is_finite()
        || !shaft_freq_hz.is_finite()
    {
        return Err(TsaError::BadRate);
    }
    let ratio = sample_rate_hz / shaft_freq_hz;
    let v_signed = ratio.round() as i64;
    if v_signed < 2 {
        return Err(TsaError::PeriodTooShort { v: v_signed });
    }
    let v = v_signed as usize;
    if signal.len() < v {
        return Err(TsaError::TooShort { len: signal.len(), v });
    }
    if signal.iter().any(|s| !s.is_finite()) {
        return Err(TsaError::NonFinite);
    }
    // phase-locked revolution starts: round(n * ratio), as many as fit
    let start = |n: usize| (n as f64 * ratio).round() as usize;
    let mut l = ((signal.len() - v) as f64 / ratio) as usize + 1;
    while start(l - 1) + v > signal.len() {
        l -= 1;
    }
    while start(l) + v <= signal.len() {
        l += 1;
    }

    let mut averaged = vec![0.0; v];
    for n in 0..l {
        let block = &signal[start(n)..start(n) + v];
        for (acc, &s) in averaged.iter_mut().zip(block) {
            *acc += s;
        }
    }
    let inv_l = 1.0 / l as f64;
    for a in averaged.iter_mut() {
        *a *= inv_l;
    }

    let mut residual_sq = 0.0;
    for n in 0..l {
        let block = &signal[start(n)..start(n) + v];
        for (a, &s) in averaged.iter().zip(block) {
            residual_sq += (s - a) * (s - a);
        }
    }
    let residual_rms = (residual_sq / (l * v) as f64).sqrt();

    let drift_per_rev = (ratio - v as f64).abs();
    let drift_warning = drift_per_rev * l as f64 > 0.5;

    Ok(TsaResult {
        averaged,
        samples_per_period: v,
        periods_averaged: l,
        residual_rms,
        drift_warning,
    })
}

/// TSA applied to each decomposition mode with shared timing parameters.
pub fn tsa_bank(
    modes: &[Vec<f64>],
    sample_rate_hz: f64,
    shaft_freq_hz: f64,
) -> Result<Vec<TsaResult>, TsaError> {
    modes.iter().map(|m| tsa(m, sample_rate_hz, shaft_freq_hz)).collect()
}

/// Convenience for calibration tests: population variance.
pub fn signal_variance(x: &[f64]) -> f64 {
    util::variance(x)
}
