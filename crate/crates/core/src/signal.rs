//! Noise injection and envelope spectra.
//!
//! `add_awgn` adds white Gaussian noise calibrated against the signal's AC
//! power: the noise variance is `P_ac / 10^(SNR_dB/10)` with the signal mean
//! excluded from `P_ac`, so a DC offset does not inflate the apparent signal
//! power. Draws come from a seeded ChaCha stream, making every realization
//! reproducible byte-for-byte.
//!
//! `envelope_spectrum` demodulates via the analytic signal (one-sided
//! spectrum doubling), takes the envelope magnitude, removes its mean and
//! returns the one-sided amplitude spectrum — the standard tool for making
//! modulation sidebands readable.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use thiserror::Error;

use crate::util;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("signal contains non-finite samples")]
    NonFinite,
    #[error("signal has zero AC power: SNR calibration is undefined")]
    ZeroVariance,
    #[error("record too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("snr must be finite, got {0}")]
    BadSnr(f64),
}

/// A signal plus calibrated noise, with the realized SNR measured back from
/// the actual noise draw.
#[derive(Debug, Clone)]
pub struct NoisySignal {
    pub data: Vec<f64>,
    /// Requested SNR.
    pub snr_db: f64,
    /// 10·log10(P_ac / var(noise drawn)); converges to `snr_db` as 1/√N.
    pub achieved_snr_db: f64,
    pub seed: u64,
}

/// Add white Gaussian noise at `snr_db` relative to the mean-removed signal
/// power. Identical `(signal, snr_db, seed)` always yields identical output.
pub fn add_awgn(signal: &[f64], snr_db: f64, seed: u64) -> Result<NoisySignal, SignalError> {
    if signal.len() < 2 {
        return Err(SignalError::TooShort { len: signal.len(), min: 2 });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(SignalError::NonFinite);
    }
    if !snr_db.is_finite() {
        return Err(SignalError::BadSnr(snr_db));
    }
    let p_ac = util::variance(signal);
    if p_ac == 0.0 {
        return Err(SignalError::ZeroVariance);
    }
    let noise_var = p_ac / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, noise_var.sqrt()).expect("finite std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..signal.len()).map(|_| normal.sample(&mut rng)).collect();
    let realized_var = util::variance(&noise);
    let achieved_snr_db = 10.0 * (p_ac / realized_var).log10();
    let data = signal.iter().zip(&noise).map(|(s, n)| s + n).collect();
    Ok(NoisySignal { data, snr_db, achieved_snr_db, seed })
}

/// One-sided amplitude spectrum of the analytic-signal envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeSpectrum {
    pub freq_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl EnvelopeSpectrum {
    /// CSV with header `freq_hz,magnitude`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,magnitude\n");
        for (f, m) in self.freq_hz.iter().zip(&self.magnitude) {
            out.push_str(&format!("{f},{m}\n"));
        }
        out
    }
}

/// Envelope spectrum via the analytic signal. Frequency resolution is
/// `sample_rate / len`; bins run from DC to Nyquist.
pub fn envelope_spectrum(
    signal: &[f64],
    sample_rate_hz: f64,
) -> Result<EnvelopeSpectrum, SignalError> {
    let n = signal.len();
    if n < 8 {
        return Err(SignalError::TooShort { len: n, min: 8 });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(SignalError::NonFinite);
    }
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(SignalError::BadSnr(sample_rate_hz));
    }

    // analytic signal: double strictly-positive bins, zero the negative
    // ones, leave DC (and Nyquist for even n) untouched
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, b) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            continue;
        }
        if k <= (n - 1) / 2 {
            *b *= 2.0;
        } else {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut envelope: Vec<f64> = buf.iter().map(|c| (*c / n as f64).norm()).collect();
    let mean = util::mean(&envelope);
    for e in envelope.iter_mut() {
        *e -= mean;
    }

    let mut env_c: Vec<Complex64> = envelope.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut env_c);
    let bins = half + 1;
    let mut freq_hz = Vec::with_capacity(bins);
    let mut magnitude = Vec::with_capacity(bins);
    for (k, b) in env_c.iter().take(bins).enumerate() {
        freq_hz.push(k as f64 * sample_rate_hz / n as f64);
        let scale = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
        magnitude.push(scale * b.norm() / n as f64);
    }
    Ok(EnvelopeSpectrum { freq_hz, magnitude })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn zero_db_means_equal_powers() {
        let x = tone(50.0, 10_000.0, 100_000);
        let noisy = add_awgn(&x, 0.0, 42).unwrap();
        let noise: Vec<f64> = noisy.data.iter().zip(&x).map(|(a, b)| a - b).collect();
        let p_sig = util::variance(&x);
        let p_noise = util::variance(&noise);
        assert!((p_noise / p_sig - 1.0).abs() < 0.01, "ratio {}", p_noise / p_sig);
    }

    #[test]
    fn minus_ten_db_means_tenfold_noise() {
        let x = tone(50.0, 10_000.0, 100_000);
        let noisy = add_awgn(&x, -10.0, 7).unwrap();
        let noise: Vec<f64> = noisy.data.iter().zip(&x).map(|(a, b)| a - b).collect();
        let ratio = util::variance(&noise) / util::variance(&x);
        assert!((ratio / 10.0 - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn achieved_snr_close_to_target() {
        let x = tone(50.0, 10_000.0, 100_000);
        for seed in [1u64, 2, 3] {
            let noisy = add_awgn(&x, 10.0, seed).unwrap();
            assert!(
                (noisy.achieved_snr_db - 10.0).abs() < 0.1,
                "achieved {} dB",
                noisy.achieved_snr_db
            );
        }
    }

    #[test]
    fn dc_offset_does_not_count_as_signal_power() {
        let x = tone(50.0, 10_000.0, 100_000);
        let shifted: Vec<f64> = x.iter().map(|v| v + 100.0).collect();
        let a = add_awgn(&x, 0.0, 5).unwrap();
        let b = add_awgn(&shifted, 0.0, 5).unwrap();
        let noise_a: Vec<f64> = a.data.iter().zip(&x).map(|(p, q)| p - q).collect();
        let noise_b: Vec<f64> = b.data.iter().zip(&shifted).map(|(p, q)| p - q).collect();
        assert_relative_eq!(util::variance(&noise_a), util::variance(&noise_b), epsilon = 1e-12);
    }

    #[test]
    fn deterministic_per_seed_distinct_across_seeds() {
        let x = tone(50.0, 1000.0, 1000);
        let a = add_awgn(&x, 0.0, 9).unwrap();
        let b = add_awgn(&x, 0.0, 9).unwrap();
        let c = add_awgn(&x, 0.0, 10).unwrap();
        assert_eq!(a.data, b.data);
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(add_awgn(&[3.0; 100], 0.0, 1), Err(SignalError::ZeroVariance)));
        assert!(matches!(add_awgn(&[1.0], 0.0, 1), Err(SignalError::TooShort { .. })));
        let mut x = tone(5.0, 100.0, 64);
        x[0] = f64::NAN;
        assert!(matches!(add_awgn(&x, 0.0, 1), Err(SignalError::NonFinite)));
        let y = tone(5.0, 100.0, 64);
        assert!(matches!(add_awgn(&y, f64::NAN, 1), Err(SignalError::BadSnr(_))));
    }

    #[test]
    fn am_modulation_shows_up_at_modulation_frequency() {
        // carrier 1 kHz, 0.5-depth AM at 25 Hz: envelope spectrum peaks at
        // 25 Hz with amplitude ~0.5.
        let fs = 10_000.0;
        let n = 10_000;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (1.0 + 0.5 * (2.0 * PI * 25.0 * t).sin()) * (2.0 * PI * 1000.0 * t).sin()
            })
            .collect();
        let es = envelope_spectrum(&x, fs).unwrap();
        let df = es.freq_hz[1];
        assert_relative_eq!(df, 1.0, epsilon = 1e-9);
        let peak = es
            .magnitude
            .iter()
            .enumerate()
            .skip(1)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert_eq!(peak.0, 25, "envelope peak at {} Hz", es.freq_hz[peak.0]);
        assert_relative_eq!(*peak.1, 0.5, max_relative = 0.05);
    }

    #[test]
    fn envelope_of_plain_tone_is_flat() {
        let fs = 8000.0;
        let x = tone(800.0, fs, 8000);
        let es = envelope_spectrum(&x, fs).unwrap();
        // After mean removal the spectrum holds only edge-effect ripple,
        // far below the unit carrier amplitude.
        let max = es.magnitude.iter().skip(1).cloned().fold(0.0f64, f64::max);
        assert!(max < 0.05, "flat-envelope leakage {max}");
    }

    #[test]
    fn csv_export_shape() {
        let x = tone(100.0, 1000.0, 64);
        let es = envelope_spectrum(&x, 1000.0).unwrap();
        let csv = es.to_csv();
        assert!(csv.starts_with("freq_hz,magnitude\n"));
        assert_eq!(csv.lines().count(), 34); // header + 33 bins (N/2+1)
    }
}
