//! Human-readable run report with machine-stable verdict lines.
//!
//! Two headline checks are evaluated against the aggregated feature table:
//!
//! * trend A — at the lowest SNR, the largest Lyapunov exponent is positive
//!   for every mode except the last, and negative for the last mode;
//! * trend B — the correlation dimension does not increase as the crack
//!   deepens, checked per (speed-load, SNR, mode) family, with two headline
//!   families: the last mode at the lowest SNR and the second-to-last mode
//!   at the highest SNR, both on the first declared speed-load.
//!
//! Verdict lines are exact strings (`trend A verdict: REPRODUCED` /
//! `NOT REPRODUCED`) so downstream checks can parse them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use gearvib_core::chaos::FeatureRecord;

use crate::config::ResolvedExperiment;
use crate::manifest::{CaseStatus, RunManifest};

pub const TREND_A_PASS: &str = "trend A verdict: REPRODUCED";
pub const TREND_A_FAIL: &str = "trend A verdict: NOT REPRODUCED";
pub const TREND_B_PASS: &str = "trend B verdict: REPRODUCED";
pub const TREND_B_FAIL: &str = "trend B verdict: NOT REPRODUCED";
pub const TREND_A_THRESHOLD: f64 = 0.75;

/// Key: (speed_load, snr_db as ordered bits, condition, mode).
fn record_map(records: &[FeatureRecord]) -> BTreeMap<(String, u64, String, usize), &FeatureRecord> {
    records
        .iter()
        .map(|r| ((r.speed_load.clone(), r.snr_db.to_bits(), r.condition.clone(), r.mode), r))
        .collect()
}

fn le_sign_pattern(
    map: &BTreeMap<(String, u64, String, usize), &FeatureRecord>,
    speed_load: &str,
    snr_db: f64,
    condition: &str,
    num_modes: usize,
) -> (String, bool) {
    let mut glyphs = String::new();
    let mut matched = true;
    for mode in 1..=num_modes {
        let key = (speed_load.to_string(), snr_db.to_bits(), condition.to_string(), mode);
        let lambda = map.get(&key).and_then(|r| r.le.as_ref()).map(|le| le.lambda_per_s);
        let expect_positive = mode < num_modes;
        match lambda {
            Some(l) if l > 0.0 => {
                glyphs.push_str(" +");
                matched &= expect_positive;
            }
            Some(_) => {
                glyphs.push_str(" -");
                matched &= !expect_positive;
            }
            None => {
                glyphs.push_str(" ?");
                matched = false;
            }
        }
    }
    (glyphs, matched)
}

/// Correlation dimensions across crack levels for one family, in declared
/// crack order; None if any cell is missing.
fn family_dimensions(
    map: &BTreeMap<(String, u64, String, usize), &FeatureRecord>,
    exp: &ResolvedExperiment,
    speed_load: &str,
    snr_db: f64,
    mode: usize,
) -> Option<Vec<f64>> {
    exp.config
        .crack_levels
        .iter()
        .map(|c| {
            let key = (speed_load.to_string(), snr_db.to_bits(), c.label.clone(), mode);
            map.get(&key).and_then(|r| r.cd.as_ref()).map(|cd| cd.dimension)
        })
        .collect()
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

pub fn write_report(
    exp: &ResolvedExperiment,
    manifest: &RunManifest,
    records: &[FeatureRecord],
) -> String {
    let mut out = String::new();
    let cfg = &exp.config;
    let num_modes = cfg.vmd.num_modes;
    let map = record_map(records);

    let n_done = manifest.cases.iter().filter(|c| c.status == CaseStatus::Done).count();
    let n_failed = manifest.cases.len() - n_done;
    let n_sim_cached = manifest.sims.values().filter(|s| s.from_cache).count();
    let n_case_cached = manifest.cases.iter().filter(|c| c.from_cache).count();

    let _ = writeln!(out, "experiment run report");
    let _ = writeln!(out, "=====================");
    let _ = writeln!(out, "configuration sha256: {}", manifest.config_sha256);
    let _ = writeln!(out, "master seed: {}", manifest.master_seed);
    let _ = writeln!(
        out,
        "simulations: {} ({} reused from a previous run)",
        manifest.sims.len(),
        n_sim_cached
    );
    let _ = writeln!(
        out,
        "cases: {} declared, {} done, {} failed, {} reused from a previous run",
        manifest.cases.len(),
        n_done,
        n_failed,
        n_case_cached
    );
    let _ = writeln!(out, "feature rows: {}", records.len());
    let _ = writeln!(out);

    let _ = writeln!(out, "failed cases:");
    if n_failed == 0 {
        let _ = writeln!(out, "  (none)");
    } else {
        for c in manifest.failed_cases() {
            let _ = writeln!(
                out,
                "  {}: {}",
                c.id,
                c.reason.as_deref().unwrap_or("unknown failure")
            );
        }
    }
    let _ = writeln!(out);

    // ---- trend A ------------------------------------------------------
    let snr_low = cfg.snr_db.iter().copied().fold(f64::INFINITY, f64::min);
    let _ = writeln!(
        out,
        "trend A - largest Lyapunov exponent sign pattern at the lowest SNR ({snr_low} dB)"
    );
    let _ = writeln!(
        out,
        "  expected per case: modes 1-{} positive, mode {} negative",
        num_modes.saturating_sub(1),
        num_modes
    );
    let mut n_cases = 0usize;
    let mut n_matched = 0usize;
    for sl in &cfg.speed_loads {
        for crack in &cfg.crack_levels {
            let (glyphs, matched) =
                le_sign_pattern(&map, &sl.label, snr_low, &crack.label, num_modes);
            n_cases += 1;
            n_matched += matched as usize;
            let _ = writeln!(
                out,
                "  {} {}:{}  {}",
                sl.label,
                crack.label,
                glyphs,
                if matched { "match" } else { "mismatch" }
            );
        }
    }
    let rate_ok = n_cases > 0 && n_matched as f64 >= TREND_A_THRESHOLD * n_cases as f64;
    let _ = writeln!(
        out,
        "  matched {}/{} cases (threshold {:.0}%)",
        n_matched,
        n_cases,
        TREND_A_THRESHOLD * 100.0
    );
    let _ = writeln!(out, "{}", if rate_ok { TREND_A_PASS } else { TREND_A_FAIL });
    let _ = writeln!(out);

    // ---- trend B ------------------------------------------------------
    let snr_high = cfg.snr_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let crack_chain = cfg
        .crack_levels
        .iter()
        .map(|c| c.label.as_str())
        .collect::<Vec<_>>()
        .join(" -> ");
    let _ = writeln!(
        out,
        "trend B - correlation dimension non-increasing with crack depth ({crack_chain})"
    );
    for sl in &cfg.speed_loads {
        for &snr in &cfg.snr_db {
            for mode in 1..=num_modes {
                let line = match family_dimensions(&map, exp, &sl.label, snr, mode) {
                    Some(dims) => {
                        let vals = dims
                            .iter()
                            .map(|d| format!("{d:.3}"))
                            .collect::<Vec<_>>()
                            .join(" ");
                        format!(
                            "{vals} -> non-increasing: {}",
                            if non_increasing(&dims) { "yes" } else { "no" }
                        )
                    }
                    None => "incomplete (missing estimates)".to_string(),
                };
                let _ = writeln!(out, "  {} snr {:+} mode {}: {}", sl.label, snr, mode, line);
            }
        }
    }
    // headline families: last mode at the lowest SNR, second-to-last mode at
    // the highest SNR, first declared speed-load
    let mut headline_ok = true;
    if let Some(sl) = cfg.speed_loads.first() {
        let headliners = [(snr_low, num_modes), (snr_high, num_modes.saturating_sub(1).max(1))];
        for (snr, mode) in headliners {
            let dims = family_dimensions(&map, exp, &sl.label, snr, mode);
            let ok = dims.as_deref().map(non_increasing).unwrap_or(false);
            headline_ok &= ok;
            let vals = match &dims {
                Some(d) => d.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "),
                None => "incomplete".to_string(),
            };
            let _ = writeln!(
                out,
                "  headline family {} snr {:+} mode {}: {} -> non-increasing: {}",
                sl.label,
                snr,
                mode,
                vals,
                if ok { "yes" } else { "no" }
            );
        }
    } else {
        headline_ok = false;
    }
    let _ = writeln!(out, "{}", if headline_ok { TREND_B_PASS } else { TREND_B_FAIL });

    out
}
