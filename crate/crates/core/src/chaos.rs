//! Chaos metrics on scalar time series.
//!
//! A signal is delay-embedded into `m`-dimensional state space
//! (`x_i = [s_i, s_{i+d}, …, s_{i+(m-1)d}]`), then two complexity features
//! are estimated:
//!
//! - **Largest Lyapunov exponent** from the mean log-divergence curve of
//!   nearest-neighbor pairs: each point is paired with its nearest neighbor
//!   outside a Theiler window, `y(k)` averages `ln‖x_{i+k} − x_{j+k}‖` over
//!   surviving pairs, and the exponent is the least-squares slope of `y(k)`
//!   over its most linear stretch. Positive slopes mean exponential
//!   divergence; periodic signals give ~0, contracting ones negative.
//! - **Correlation dimension** from pairwise correlation sums
//!   `C(r) = #{pairs with ‖x_i − x_j‖ < r} / #pairs` (Theiler-excluded):
//!   the dimension is the slope of `ln C` vs `ln r` over the scaling range.
//!
//! Both fits share one range policy: the longest contiguous window whose
//! local slopes stay within 15% of the window median (a strict relative
//! test, so saturated plateaus with near-zero slope are rejected). When no
//! window qualifies, the full curve is fitted and the low `r²` shows up in
//! the reliability flag.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util;

/// Fits with `r² >=` this are marked reliable in estimates and records.
pub const R2_RELIABLE: f64 = 0.8;

/// Local slopes must stay within this relative band around the window
/// median for the window to count as linear.
pub const SLOPE_BAND: f64 = 0.15;

#[derive(Debug, Error)]
pub enum ChaosError {
    #[error("bad embedding: dim {dim} delay {delay} (need dim >= 2, delay >= 1)")]
    BadEmbedding { dim: usize, delay: usize },
    #[error("record too short: {len} samples, embedding needs more than {min}")]
    TooShort { len: usize, min: usize },
    #[error("too few embedded points: {count}, need >= {min}")]
    TooFewPoints { count: usize, min: usize },
    #[error("signal has zero variance")]
    ZeroVariance,
    #[error("signal contains non-finite samples")]
    NonFinite,
    #[error("all embedded points are identical")]
    DegenerateGeometry,
    #[error("no neighbor pairs survive the Theiler window {theiler}")]
    NoValidPairs { theiler: usize },
}

/// Delay embedding of a scalar series: `count` points of dimension `dim`,
/// stored row-major.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub dim: usize,
    pub delay: usize,
    pub count: usize,
    data: Vec<f64>,
}

impl Embedding {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let a = self.point(i);
        let b = self.point(j);
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// Build the delay embedding. Point count is `len − (dim−1)·delay`.
pub fn embed(signal: &[f64], dim: usize, delay: usize) -> Result<Embedding, ChaosError> {
    if dim < 2 || delay < 1 {
        return Err(ChaosError::BadEmbedding { dim, delay });
    }
    let span = (dim - 1) * delay;
    if signal.len() <= span {
        return Err(ChaosError::TooShort { len: signal.len(), min: span });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(ChaosError::NonFinite);
    }
    let count = signal.len() - span;
    let mut data = Vec::with_capacity(count * dim);
    for i in 0..count {
        for k in 0..dim {
            data.push(signal[i + k * delay]);
        }
    }
    Ok(Embedding { dim, delay, count, data })
}

/// Fit-range selection for the divergence and correlation-sum curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitRange {
    /// Longest contiguous stretch with locally stable slope.
    Auto,
    /// Explicit inclusive index window into the curve.
    Fixed(usize, usize),
}

/// Longest window (inclusive indices) whose consecutive-point slopes all lie
/// within `SLOPE_BAND` of the window median; ties prefer the earliest start.
fn stable_slope_window(x: &[f64], y: &[f64], min_len: usize) -> Option<(usize, usize)> {
    let n = x.len();
    if n < min_len.max(2) {
        return None;
    }
    let slopes: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut best: Option<(usize, usize)> = None;
    for a in 0..n - 1 {
        for b in (a + min_len.saturating_sub(1)).max(a + 1)..n {
            // window [a, b] uses slopes a..b
            let mut w: Vec<f64> = slopes[a..b].to_vec();
            w.sort_by(|p, q| p.partial_cmp(q).unwrap());
            let median = w[w.len() / 2];
            let tol = SLOPE_BAND * median.abs();
            let ok = slopes[a..b].iter().all(|s| (s - median).abs() <= tol);
            if ok {
                let len = b - a + 1;
                let better = match best {
                    None => true,
                    Some((pa, pb)) => len > pb - pa + 1,
                };
                if better {
                    best = Some((a, b));
                }
            }
        }
    }
    best
}

/// Largest-Lyapunov-exponent estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeEstimate {
    /// Slope of the divergence curve per time step.
    pub lambda_per_sample: f64,
    /// `lambda_per_sample` scaled by the sample rate.
    pub lambda_per_s: f64,
    pub r2: f64,
    /// Inclusive index window of the fitted stretch.
    pub fit_range: (usize, usize),
    /// Mean log divergence per step offset.
    pub divergence_curve: Vec<f64>,
    /// `r2 >= R2_RELIABLE`.
    pub reliable: bool,
}

/// Estimate the largest Lyapunov exponent of `signal`.
///
/// `theiler` excludes temporally close neighbors (`|i − j| <= theiler`);
/// use at least one characteristic period of the signal.
pub fn lyapunov(
    signal: &[f64],
    dim: usize,
    delay: usize,
    sample_rate_hz: f64,
    theiler: usize,
    fit: FitRange,
) -> Result<LeEstimate, ChaosError> {
    if util::variance(signal) == 0.0 {
        return Err(ChaosError::ZeroVariance);
    }
    let emb = embed(signal, dim, delay)?;
    let m = emb.count;
    if m < 100 {
        return Err(ChaosError::TooFewPoints { count: m, min: 100 });
    }

    // nearest neighbor outside the Theiler window, at nonzero distance
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(m);
    for i in 0..m {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in 0..m {
            let far_enough = i.abs_diff(j) > theiler;
            if !far_enough {
                continue;
            }
            let d = emb.dist(i, j);
            if d > 0.0 && d < best {
                best = d;
                best_j = j;
            }
        }
        if best_j != usize::MAX {
            pairs.push((i, best_j));
        }
    }
    if pairs.is_empty() {
        return Err(ChaosError::NoValidPairs { theiler });
    }

    let max_steps = (m / 5).clamp(10, 100);
    let mut curve = Vec::with_capacity(max_steps);
    for k in 0..max_steps {
        let mut sum = 0.0;
        let mut cnt = 0usize;
        for &(i, j) in &pairs {
            if i + k < m && j + k < m {
                let d = emb.dist(i + k, j + k);
                if d > 0.0 {
                    sum += d.ln();
                    cnt += 1;
                }
            }
        }
        if cnt < 10 {
            break;
        }
        curve.push(sum / cnt as f64);
    }
    if curve.len() < 3 {
        return Err(ChaosError::NoValidPairs { theiler });
    }

    let steps: Vec<f64> = (0..curve.len()).map(|k| k as f64).collect();
    let (a, b) = match fit {
        FitRange::Fixed(a, b) => (a.min(curve.len() - 1), b.min(curve.len() - 1)),
        FitRange::Auto => {
            stable_slope_window(&steps, &curve, 5).unwrap_or((0, curve.len() - 1))
        }
    };
    let (a, b) = if a < b { (a, b) } else { (0, curve.len() - 1) };
    let (slope, _, r2) = util::linear_fit(&steps[a..=b], &curve[a..=b]);

    Ok(LeEstimate {
        lambda_per_sample: slope,
        lambda_per_s: slope * sample_rate_hz,
        r2,
        fit_range: (a, b),
        divergence_curve: curve,
        reliable: r2 >= R2_RELIABLE,
    })
}

/// Radius grid for the correlation sum: `n_radii` log-spaced radii, by
/// default spanning three decades up to the attractor diameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiiPolicy {
    pub n_radii: usize,
    /// Override the smallest radius.
    pub r_min: Option<f64>,
    /// Override the largest radius.
    pub r_max: Option<f64>,
}

impl Default for RadiiPolicy {
    fn default() -> Self {
        Self { n_radii: 40, r_min: None, r_max: None }
    }
}

/// Correlation-dimension estimate with its correlation-sum curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdEstimate {
    pub dimension: f64,
    pub r2: f64,
    /// Radius interval actually fitted.
    pub scaling_range: (f64, f64),
    /// Radii with nonzero correlation sums.
    pub radii: Vec<f64>,
    /// C(r) values in (0, 1], parallel to `radii`.
    pub corr_sums: Vec<f64>,
    /// `r2 >= R2_RELIABLE`.
    pub reliable: bool,
}

/// Grassberger–Procaccia correlation dimension.
pub fn correlation_dimension(
    signal: &[f64],
    dim: usize,
    delay: usize,
    theiler: usize,
    radii: &RadiiPolicy,
    fit: FitRange,
) -> Result<CdEstimate, ChaosError> {
    if util::variance(signal) == 0.0 {
        return Err(ChaosError::ZeroVariance);
    }
    let emb = embed(signal, dim, delay)?;
    let m = emb.count;
    if m < 200 {
        return Err(ChaosError::TooFewPoints { count: m, min: 200 });
    }

    // pass 1: largest pairwise distance among considered pairs
    let mut d_max = 0.0f64;
    let mut n_pairs = 0usize;
    for i in 0..m {
        for j in (i + theiler + 1)..m {
            let d = emb.dist(i, j);
            if d > d_max {
                d_max = d;
            }
            n_pairs += 1;
        }
    }
    if n_pairs == 0 {
        return Err(ChaosError::NoValidPairs { theiler });
    }
    if d_max == 0.0 {
        return Err(ChaosError::DegenerateGeometry);
    }

    let n_radii = radii.n_radii.max(4);
    let r_max = radii.r_max.unwrap_or(d_max);
    let r_min = radii.r_min.unwrap_or(r_max * 1e-3);
    let log_min = r_min.ln();
    let log_step = (r_max.ln() - log_min) / (n_radii - 1) as f64;
    let grid: Vec<f64> = (0..n_radii).map(|k| (log_min + k as f64 * log_step).exp()).collect();

    // pass 2: histogram pair distances onto the grid, then cumulate
    let mut hist = vec![0u64; n_radii + 1];
    for i in 0..m {
        for j in (i + theiler + 1)..m {
            let d = emb.dist(i, j);
            // first grid index with r > d  ==  count of radii <= d
            let idx = if d < grid[0] {
                0
            } else {
                let t = ((d.ln() - log_min) / log_step).floor() as usize + 1;
                t.min(n_radii)
            };
            hist[idx] += 1;
        }
    }
    let mut cum = 0u64;
    let mut r_kept = Vec::with_capacity(n_radii);
    let mut c_kept = Vec::with_capacity(n_radii);
    for (k, &r) in grid.iter().enumerate() {
        cum += hist[k];
        if cum > 0 {
            r_kept.push(r);
            c_kept.push(cum as f64 / n_pairs as f64);
        }
    }
    if r_kept.len() < 3 {
        return Err(ChaosError::DegenerateGeometry);
    }

    let log_r: Vec<f64> = r_kept.iter().map(|r| r.ln()).collect();
    let log_c: Vec<f64> = c_kept.iter().map(|c| c.ln()).collect();
    let (a, b) = match fit {
        FitRange::Fixed(a, b) => (a.min(log_r.len() - 1), b.min(log_r.len() - 1)),
        FitRange::Auto => {
            stable_slope_window(&log_r, &log_c, 5).unwrap_or((0, log_r.len() - 1))
        }
    };
    let (a, b) = if a < b { (a, b) } else { (0, log_r.len() - 1) };
    let (slope, _, r2) = util::linear_fit(&log_r[a..=b], &log_c[a..=b]);

    Ok(CdEstimate {
        dimension: slope,
        r2,
        scaling_range: (r_kept[a], r_kept[b]),
        radii: r_kept,
        corr_sums: c_kept,
        reliable: r2 >= R2_RELIABLE,
    })
}

/// One labeled series for the feature table.
#[derive(Debug, Clone)]
pub struct FeatureInput<'a> {
    /// Health condition label: `H`, `C1`, `C2`, `C3`.
    pub condition: String,
    pub speed_load: String,
    pub snr_db: f64,
    /// 1-based decomposition mode index.
    pub mode: usize,
    pub signal: &'a [f64],
    pub sample_rate_hz: f64,
    pub theiler: usize,
}

/// Chaos features for one (condition, mode) cell, with failure capture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub condition: String,
    pub speed_load: String,
    pub snr_db: f64,
    pub mode: usize,
    /// Plot label: healthy `H{mode}_{mode}`, cracked `C{level}_{mode}`.
    pub label: String,
    pub le: Option<LeEstimate>,
    pub cd: Option<CdEstimate>,
    pub failure: Option<String>,
    pub reliable: bool,
}

/// Label scheme used by the bar-chart exports.
pub fn feature_label(condition: &str, mode: usize) -> String {
    if condition == "H" {
        format!("H{mode}_{mode}")
    } else {
        format!("{condition}_{mode}")
    }
}

/// Compute LE + CD for every input; failures land in the record instead of
/// aborting the batch.
pub fn feature_table(inputs: &[FeatureInput], dim: usize, delay: usize) -> Vec<FeatureRecord> {
    inputs
        .iter()
        .map(|inp| {
            let le = lyapunov(
                inp.signal,
                dim,
                delay,
                inp.sample_rate_hz,
                inp.theiler,
                FitRange::Auto,
            );
            let cd = correlation_dimension(
                inp.signal,
                dim,
                delay,
                inp.theiler,
                &RadiiPolicy::default(),
                FitRange::Auto,
            );
            let failure = match (&le, &cd) {
                (Ok(_), Ok(_)) => None,
                (Err(e), Ok(_)) => Some(format!("lyapunov: {e}")),
                (Ok(_), Err(e)) => Some(format!("correlation_dimension: {e}")),
                (Err(e1), Err(e2)) => {
                    Some(format!("lyapunov: {e1}; correlation_dimension: {e2}"))
                }
            };
            let le = le.ok();
            let cd = cd.ok();
            let reliable = le.as_ref().map_or(false, |l| l.reliable)
                && cd.as_ref().map_or(false, |c| c.reliable);
            FeatureRecord {
                condition: inp.condition.clone(),
                speed_load: inp.speed_load.clone(),
                snr_db: inp.snr_db,
                mode: inp.mode,
                label: feature_label(&inp.condition, inp.mode),
                le,
                cd,
                failure,
                reliable,
            }
        })
        .collect()
}

/// CSV with header `condition,speed_load,snr_db,mode,LE_per_s,LE_r2,CD,CD_r2,reliable`.
/// Failed estimates leave their cells empty.
pub fn records_to_csv(records: &[FeatureRecord]) -> String {
    let mut out = String::from("condition,speed_load,snr_db,mode,LE_per_s,LE_r2,CD,CD_r2,reliable\n");
    for r in records {
        let (le, le_r2) = match &r.le {
            Some(l) => (format!("{}", l.lambda_per_s), format!("{}", l.r2)),
            None => (String::new(), String::new()),
        };
        let (cd, cd_r2) = match &r.cd {
            Some(c) => (format!("{}", c.dimension), format!("{}", c.r2)),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.condition, r.speed_load, r.snr_db, r.mode, le, le_r2, cd, cd_r2, r.reliable
        ));
    }
    out
}
