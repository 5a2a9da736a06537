//! Plot-data emitters: each writes a self-describing CSV under
//! `<run_dir>/plots/` from artifacts a finished run left behind. A missing
//! artifact is an error that names the case it belongs to.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gearvib_core::cemg::{self, SimResult};
use gearvib_core::chaos::FeatureRecord;
use gearvib_core::tvms::{build_profile, CrackSpec};

use crate::config::ResolvedExperiment;
use crate::manifest::RunManifest;
use crate::pipeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "snake_case")]
pub enum PlotKind {
    /// Mesh stiffness over one period, one series per crack level.
    Tvms,
    /// Pinion vertical acceleration vs time, one file per simulation.
    Timeseries,
    /// Decomposed modes vs time, one file per case.
    Vmfs,
    /// Synchronously averaged modes vs shaft angle, one file per case.
    Tsa,
    /// Mean log-divergence curves behind each Lyapunov fit.
    Divergence,
    /// Correlation sums vs radius behind each dimension fit.
    CorrSum,
    /// Bar-chart table of features keyed by condition/mode labels.
    Features,
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PlotKind::Tvms => "tvms",
            PlotKind::Timeseries => "timeseries",
            PlotKind::Vmfs => "vmfs",
            PlotKind::Tsa => "tsa",
            PlotKind::Divergence => "divergence",
            PlotKind::CorrSum => "corr_sum",
            PlotKind::Features => "features",
        };
        f.write_str(name)
    }
}

pub const ALL_PLOTS: [PlotKind; 7] = [
    PlotKind::Tvms,
    PlotKind::Timeseries,
    PlotKind::Vmfs,
    PlotKind::Tsa,
    PlotKind::Divergence,
    PlotKind::CorrSum,
    PlotKind::Features,
];

/// Emit the requested plot data sets; returns the files written.
pub fn emit_plots(run_dir: &Path, which: &[PlotKind]) -> Result<Vec<PathBuf>> {
    let exp: ResolvedExperiment = {
        let path = run_dir.join(pipeline::CONFIG_JSON);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {} (is this a run directory?)", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    let manifest = RunManifest::load(run_dir).context("loading run manifest")?;
    let plots_dir = run_dir.join("plots");
    std::fs::create_dir_all(&plots_dir)?;

    let kinds: Vec<PlotKind> =
        if which.is_empty() { ALL_PLOTS.to_vec() } else { which.to_vec() };
    let mut written = Vec::new();
    for kind in kinds {
        let files = match kind {
            PlotKind::Tvms => emit_tvms(&exp, &plots_dir)?,
            PlotKind::Timeseries => emit_timeseries(&manifest, run_dir, &plots_dir)?,
            PlotKind::Vmfs => emit_vmfs(&manifest, run_dir, &plots_dir)?,
            PlotKind::Tsa => emit_tsa(&exp, &manifest, run_dir, &plots_dir)?,
            PlotKind::Divergence => emit_divergence(&manifest, run_dir, &plots_dir)?,
            PlotKind::CorrSum => emit_corr_sum(&manifest, run_dir, &plots_dir)?,
            PlotKind::Features => emit_features(run_dir, &plots_dir)?,
        };
        written.extend(files);
    }
    Ok(written)
}

fn done_case_ids(manifest: &RunManifest) -> Vec<String> {
    manifest
        .cases
        .iter()
        .filter(|c| c.status == crate::manifest::CaseStatus::Done)
        .map(|c| c.id.clone())
        .collect()
}

fn case_artifact(run_dir: &Path, case_id: &str, file: &str) -> Result<PathBuf> {
    let path = run_dir.join("cases").join(case_id).join(file);
    if !path.is_file() {
        bail!("plot input missing for case {case_id}: {}", path.display());
    }
    Ok(path)
}

fn emit_tvms(exp: &ResolvedExperiment, plots_dir: &Path) -> Result<Vec<PathBuf>> {
    let mech = &exp.system.mech;
    let mut written = Vec::new();
    for crack in &exp.config.crack_levels {
        let profile = build_profile(
            &exp.system.geometry,
            &CrackSpec::at_depth(crack.depth_fraction),
            cemg::PROFILE_SAMPLES,
            mech.m_p_kg,
            mech.m_g_kg,
            mech.zeta,
        )
        .with_context(|| format!("building stiffness profile for crack level {}", crack.label))?;
        let path = plots_dir.join(format!("tvms_{}.csv", crack.label));
        std::fs::write(&path, profile.to_csv())?;
        written.push(path);
    }
    Ok(written)
}

fn emit_timeseries(
    manifest: &RunManifest,
    run_dir: &Path,
    plots_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (key, entry) in &manifest.sims {
        let base = run_dir.join(&entry.base);
        let sim = SimResult::load(&base).map_err(|e| {
            anyhow!("plot input missing for simulation {key}: {} ({e})", base.display())
        })?;
        let ddy = sim.channel("ddy_p").ok_or_else(|| anyhow!("ddy_p channel missing"))?;
        let mut csv = String::from("t,ddy_p\n");
        for (t, v) in sim.t.iter().zip(ddy) {
            csv.push_str(&format!("{t},{v}\n"));
        }
        let path = plots_dir.join(format!("timeseries_{key}.csv"));
        std::fs::write(&path, csv)?;
        written.push(path);
    }
    Ok(written)
}

fn emit_vmfs(manifest: &RunManifest, run_dir: &Path, plots_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for id in done_case_ids(manifest) {
        let src = case_artifact(run_dir, &id, "vmd_modes.csv")?;
        let dst = plots_dir.join(format!("vmfs_{id}.csv"));
        std::fs::copy(&src, &dst).with_context(|| format!("copying {}", src.display()))?;
        written.push(dst);
    }
    Ok(written)
}

/// Parse a two-column CSV (header skipped) into its columns.
fn read_two_column_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let (Some(x), Some(y)) = (parts.next(), parts.next()) else {
            bail!("malformed row in {}", path.display());
        };
        xs.push(x.parse::<f64>().with_context(|| format!("bad number in {}", path.display()))?);
        ys.push(y.parse::<f64>().with_context(|| format!("bad number in {}", path.display()))?);
    }
    Ok((xs, ys))
}

fn emit_tsa(
    exp: &ResolvedExperiment,
    manifest: &RunManifest,
    run_dir: &Path,
    plots_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let num_modes = exp.config.vmd.num_modes;
    let mut written = Vec::new();
    for id in done_case_ids(manifest) {
        let mut columns: Vec<Vec<f64>> = Vec::new();
        let mut angle: Vec<f64> = Vec::new();
        for k in 1..=num_modes {
            let path = case_artifact(run_dir, &id, &format!("tsa_mode_{k}.csv"))?;
            let (xs, ys) = read_two_column_csv(&path)?;
            if k == 1 {
                angle = xs;
            } else if xs.len() != angle.len() {
                bail!("inconsistent averaged lengths for case {id}");
            }
            columns.push(ys);
        }
        let mut csv = String::from("angle_fraction");
        for k in 1..=num_modes {
            csv.push_str(&format!(",mode_{k}"));
        }
        csv.push('\n');
        for (i, a) in angle.iter().enumerate() {
            csv.push_str(&format!("{a}"));
            for col in &columns {
                csv.push_str(&format!(",{}", col[i]));
            }
            csv.push('\n');
        }
        let path = plots_dir.join(format!("tsa_{id}.csv"));
        std::fs::write(&path, csv)?;
        written.push(path);
    }
    Ok(written)
}

fn load_records(run_dir: &Path, case_id: &str) -> Result<Vec<FeatureRecord>> {
    case_artifact(run_dir, case_id, "features.json")?;
    pipeline::load_case_records(run_dir, case_id)
}

fn emit_divergence(
    manifest: &RunManifest,
    run_dir: &Path,
    plots_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for id in done_case_ids(manifest) {
        let records = load_records(run_dir, &id)?;
        let curves: Vec<(usize, &[f64], f64)> = records
            .iter()
            .filter_map(|r| {
                r.le.as_ref().map(|le| (r.mode, le.divergence_curve.as_slice(), r.snr_db))
            })
            .collect();
        let sample_rate = records
            .first()
            .map(|_| ())
            .and_then(|_| {
                // step duration comes from the averaged-signal rate stored in
                // the TSA sidecar; fall back to step index if unavailable
                let path = run_dir.join("cases").join(&id).join("tsa.json");
                let text = std::fs::read_to_string(path).ok()?;
                let sidecars: Vec<gearvib_core::tsa::TsaSidecar> =
                    serde_json::from_str(&text).ok()?;
                sidecars.first().map(|s| s.sample_rate_hz)
            })
            .unwrap_or(1.0);
        let longest = curves.iter().map(|(_, c, _)| c.len()).max().unwrap_or(0);
        let mut csv = String::from("step,t_s");
        for (mode, _, _) in &curves {
            csv.push_str(&format!(",mode_{mode}"));
        }
        csv.push('\n');
        for i in 0..longest {
            csv.push_str(&format!("{i},{}", i as f64 / sample_rate));
            for (_, curve, _) in &curves {
                match curve.get(i) {
                    Some(v) => csv.push_str(&format!(",{v}")),
                    None => csv.push(','),
                }
            }
            csv.push('\n');
        }
        let path = plots_dir.join(format!("divergence_{id}.csv"));
        std::fs::write(&path, csv)?;
        written.push(path);
    }
    Ok(written)
}

fn emit_corr_sum(
    manifest: &RunManifest,
    run_dir: &Path,
    plots_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for id in done_case_ids(manifest) {
        let records = load_records(run_dir, &id)?;
        let mut csv = String::from("mode,r,corr_sum\n");
        for r in &records {
            if let Some(cd) = &r.cd {
                for (radius, c) in cd.radii.iter().zip(&cd.corr_sums) {
                    csv.push_str(&format!("{},{radius},{c}\n", r.mode));
                }
            }
        }
        let path = plots_dir.join(format!("corr_sum_{id}.csv"));
        std::fs::write(&path, csv)?;
        written.push(path);
    }
    Ok(written)
}

fn emit_features(run_dir: &Path, plots_dir: &Path) -> Result<Vec<PathBuf>> {
    let agg = run_dir.join(pipeline::FEATURES_CSV);
    if !agg.is_file() {
        bail!("plot input missing: aggregated feature table {}", agg.display());
    }
    // regroup per case from the sidecar records so labels carry over exactly
    let manifest = RunManifest::load(run_dir)?;
    let mut csv = String::from("label,condition,speed_load,snr_db,mode,LE_per_s,CD,reliable\n");
    for id in done_case_ids(&manifest) {
        let records = load_records(run_dir, &id)?;
        for r in &records {
            let le = r.le.as_ref().map(|l| l.lambda_per_s.to_string()).unwrap_or_default();
            let cd = r.cd.as_ref().map(|c| c.dimension.to_string()).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.label, r.condition, r.speed_load, r.snr_db, r.mode, le, cd, r.reliable
            ));
        }
    }
    let path = plots_dir.join("features_bars.csv");
    std::fs::write(&path, csv)?;
    Ok(vec![path])
}
