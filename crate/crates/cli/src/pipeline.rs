//! The experiment runner: simulate each (speed-load, crack) pair once,
//! then fan out over SNR levels — noise injection, decomposition,
//! synchronous averaging, chaos features — and aggregate one feature table.
//!
//! Cases are independent rayon jobs; artifacts land in per-case
//! directories; the manifest is assembled after the parallel section.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use gearvib_core::cemg::{self, SimResult, State};
use gearvib_core::chaos::{feature_table, FeatureInput, FeatureRecord};
use gearvib_core::signal::add_awgn;
use gearvib_core::tsa::{tsa_bank, TsaSidecar};
use gearvib_core::tvms::CrackSpec;
use gearvib_core::vmd::{vmd, VmdResult};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{resolve_system, CrackLevel, ResolvedExperiment, SpeedLoadCase};
use crate::manifest::{
    artifacts_intact, sha256_file, CaseEntry, CaseStatus, RunManifest, SimEntry,
};
use crate::report;

pub const FEATURES_CSV: &str = "features.csv";
pub const REPORT_TXT: &str = "run_report.txt";
pub const CONFIG_JSON: &str = "config.json";

/// Noise seed for one case: the master seed and the case labels pushed
/// through SHA-256 so any label change decorrelates the realization.
pub fn case_seed(master_seed: u64, speed_load: &str, crack: &str, snr_db: f64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(speed_load.as_bytes());
    hasher.update([0x1f]);
    hasher.update(crack.as_bytes());
    hasher.update([0x1f]);
    hasher.update(format!("{snr_db}").as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn sim_key(speed_load: &str, crack: &str) -> String {
    format!("{speed_load}-{crack}")
}

pub fn case_id(speed_load: &str, crack: &str, snr_db: f64) -> String {
    format!("{speed_load}-{crack}-snr{snr_db:+}")
}

/// Samples retained after the start-up discard.
pub fn retained_range(sim: &SimResult, discard_s: f64) -> std::ops::Range<usize> {
    let skip = ((discard_s * sim.sample_rate_hz).round() as usize).min(sim.n_samples());
    skip..sim.n_samples()
}

/// Shaft frequency as a tachometer would report it: mean pinion speed over
/// the retained window.
pub fn measured_shaft_freq_hz(sim: &SimResult, discard_s: f64) -> f64 {
    let range = retained_range(sim, discard_s);
    let omega = &sim.channel("omega_p").expect("omega_p channel")[range];
    omega.iter().sum::<f64>() / omega.len() as f64 / std::f64::consts::TAU
}

/// Everything one case produces before persistence.
pub struct CaseAnalysis {
    pub records: Vec<FeatureRecord>,
    pub decomposition: VmdResult,
    pub tsa_csvs: Vec<String>,
    pub tsa_sidecars: Vec<TsaSidecar>,
    pub shaft_freq_hz: f64,
    pub achieved_snr_db: f64,
}

/// Run the analysis chain for one case on an already-simulated record.
pub fn analyze_case(
    sim: &SimResult,
    exp: &ResolvedExperiment,
    speed_load: &SpeedLoadCase,
    crack: &CrackLevel,
    snr_db: f64,
    seed: u64,
) -> Result<CaseAnalysis> {
    let fs = sim.sample_rate_hz;
    let range = retained_range(sim, exp.config.acquisition.discard_s);
    if range.is_empty() {
        return Err(anyhow!("nothing left after discarding the start-up window"));
    }
    let ddy = &sim.channel("ddy_p").ok_or_else(|| anyhow!("ddy_p channel missing"))?[range];
    let shaft_freq_hz = measured_shaft_freq_hz(sim, exp.config.acquisition.discard_s);

    let noisy = add_awgn(ddy, snr_db, seed).context("noise injection")?;
    let decomposition =
        vmd(&noisy.data, fs, &exp.config.vmd.to_config()).context("decomposition")?;
    let averaged =
        tsa_bank(&decomposition.modes, fs, shaft_freq_hz).context("synchronous averaging")?;

    let samples_per_rev = averaged.first().map(|t| t.samples_per_period).unwrap_or(0);
    let theiler = (exp.config.chaos.theiler_mesh_periods * samples_per_rev as f64
        / exp.system.geometry.teeth_pinion as f64)
        .round() as usize;

    let inputs: Vec<FeatureInput> = averaged
        .iter()
        .enumerate()
        .map(|(k, t)| FeatureInput {
            condition: crack.label.clone(),
            speed_load: speed_load.label.clone(),
            snr_db,
            mode: k + 1,
            signal: &t.averaged,
            sample_rate_hz: fs,
            theiler,
        })
        .collect();
    let records =
        feature_table(&inputs, exp.config.chaos.embedding_dim, exp.config.chaos.delay);

    Ok(CaseAnalysis {
        records,
        tsa_csvs: averaged.iter().map(|t| t.to_csv()).collect(),
        tsa_sidecars: averaged.iter().map(|t| t.sidecar(fs, shaft_freq_hz)).collect(),
        decomposition,
        shaft_freq_hz,
        achieved_snr_db: noisy.achieved_snr_db,
    })
}

fn write_artifact(
    run_dir: &Path,
    rel: PathBuf,
    bytes: &[u8],
    artifacts: &mut BTreeMap<PathBuf, String>,
) -> Result<()> {
    let path = run_dir.join(&rel);
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    let hash: String = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
    artifacts.insert(rel, hash);
    Ok(())
}

/// Persist one case's artifacts under `cases/<id>/`; returns the artifact
/// table for the manifest.
pub fn write_case_artifacts(
    run_dir: &Path,
    id: &str,
    analysis: &CaseAnalysis,
) -> Result<BTreeMap<PathBuf, String>> {
    let case_rel = PathBuf::from("cases").join(id);
    std::fs::create_dir_all(run_dir.join(&case_rel))?;
    let mut artifacts = BTreeMap::new();

    write_artifact(
        run_dir,
        case_rel.join("vmd_modes.csv"),
        analysis.decomposition.to_csv().as_bytes(),
        &mut artifacts,
    )?;
    write_artifact(
        run_dir,
        case_rel.join("vmd.json"),
        serde_json::to_string_pretty(&analysis.decomposition.sidecar())?.as_bytes(),
        &mut artifacts,
    )?;
    for (k, csv) in analysis.tsa_csvs.iter().enumerate() {
        write_artifact(
            run_dir,
            case_rel.join(format!("tsa_mode_{}.csv", k + 1)),
            csv.as_bytes(),
            &mut artifacts,
        )?;
    }
    write_artifact(
        run_dir,
        case_rel.join("tsa.json"),
        serde_json::to_string_pretty(&analysis.tsa_sidecars)?.as_bytes(),
        &mut artifacts,
    )?;
    write_artifact(
        run_dir,
        case_rel.join("features.json"),
        serde_json::to_string_pretty(&analysis.records)?.as_bytes(),
        &mut artifacts,
    )?;
    write_artifact(
        run_dir,
        case_rel.join(FEATURES_CSV),
        gearvib_core::chaos::records_to_csv(&analysis.records).as_bytes(),
        &mut artifacts,
    )?;
    Ok(artifacts)
}

pub struct RunSummary {
    pub run_dir: PathBuf,
    pub manifest: RunManifest,
    pub n_done: usize,
    pub n_failed: usize,
}

enum SimOutcome {
    Ready { entry: SimEntry, result: Arc<SimResult> },
    Failed { reason: String },
}

/// Execute the full matrix. Finished cases from a previous run with the
/// same configuration are reused, not recomputed.
pub fn run_experiment(exp: &ResolvedExperiment, workers: usize) -> Result<RunSummary> {
    exp.validate()?;
    match workers {
        0 => run_inner(exp),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building worker pool")?
            .install(|| run_inner(exp)),
    }
}

fn run_inner(exp: &ResolvedExperiment) -> Result<RunSummary> {
    let t_run = Instant::now();
    let run_dir = exp.config.output_dir.clone();
    std::fs::create_dir_all(run_dir.join("sims"))?;
    std::fs::create_dir_all(run_dir.join("cases"))?;
    std::fs::write(run_dir.join(CONFIG_JSON), serde_json::to_string_pretty(exp)?)?;

    let config_hash = exp.content_sha256();
    let prior = RunManifest::load(&run_dir)
        .ok()
        .filter(|m| m.config_sha256 == config_hash);

    // one simulation per (speed-load, crack), shared across SNR levels
    let sim_specs: Vec<(&SpeedLoadCase, &CrackLevel)> = exp
        .config
        .speed_loads
        .iter()
        .flat_map(|sl| exp.config.crack_levels.iter().map(move |c| (sl, c)))
        .collect();

    let sim_results: BTreeMap<String, SimOutcome> = sim_specs
        .par_iter()
        .map(|(sl, crack)| {
            let key = sim_key(&sl.label, &crack.label);
            let outcome = prepare_sim(exp, sl, crack, &run_dir, prior.as_ref());
            (key, outcome)
        })
        .collect();

    // the declared case matrix, in aggregation order
    struct Declared<'a> {
        id: String,
        sl: &'a SpeedLoadCase,
        crack: &'a CrackLevel,
        snr_db: f64,
        seed: u64,
    }
    let declared: Vec<Declared> = exp
        .config
        .speed_loads
        .iter()
        .flat_map(|sl| {
            exp.config.crack_levels.iter().flat_map(move |crack| {
                exp.config.snr_db.iter().map(move |&snr_db| Declared {
                    id: case_id(&sl.label, &crack.label, snr_db),
                    sl,
                    crack,
                    snr_db,
                    seed: case_seed(exp.config.master_seed, &sl.label, &crack.label, snr_db),
                })
            })
        })
        .collect();

    let case_results: Vec<(CaseEntry, Option<Vec<FeatureRecord>>)> = declared
        .par_iter()
        .map(|case| {
            let t_case = Instant::now();
            let mut entry = CaseEntry {
                id: case.id.clone(),
                speed_load: case.sl.label.clone(),
                crack: case.crack.label.clone(),
                snr_db: case.snr_db,
                seed: case.seed,
                status: CaseStatus::Failed,
                reason: None,
                artifacts: BTreeMap::new(),
                from_cache: false,
                wall_time_s: 0.0,
                measured_shaft_freq_hz: None,
            };

            // reuse a finished case whose artifacts still check out
            if let Some(prev) = prior.as_ref().and_then(|m| m.case(&case.id)) {
                if prev.status == CaseStatus::Done && artifacts_intact(&run_dir, &prev.artifacts)
                {
                    if let Ok(records) = load_case_records(&run_dir, &case.id) {
                        let mut entry = prev.clone();
                        entry.from_cache = true;
                        entry.wall_time_s = 0.0;
                        return (entry, Some(records));
                    }
                }
            }

            let sim = match sim_results.get(&sim_key(&case.sl.label, &case.crack.label)) {
                Some(SimOutcome::Ready { result, .. }) => result.clone(),
                Some(SimOutcome::Failed { reason }) => {
                    entry.reason = Some(format!("simulation failed: {reason}"));
                    entry.wall_time_s = t_case.elapsed().as_secs_f64();
                    return (entry, None);
                }
                None => unreachable!("sim prepared for every declared pair"),
            };

            match analyze_case(&sim, exp, case.sl, case.crack, case.snr_db, case.seed)
                .and_then(|analysis| {
                    let artifacts = write_case_artifacts(&run_dir, &case.id, &analysis)?;
                    Ok((analysis, artifacts))
                }) {
                Ok((analysis, artifacts)) => {
                    entry.status = CaseStatus::Done;
                    entry.artifacts = artifacts;
                    entry.measured_shaft_freq_hz = Some(analysis.shaft_freq_hz);
                    entry.wall_time_s = t_case.elapsed().as_secs_f64();
                    (entry, Some(analysis.records))
                }
                Err(e) => {
                    entry.reason = Some(format!("{e:#}"));
                    entry.wall_time_s = t_case.elapsed().as_secs_f64();
                    (entry, None)
                }
            }
        })
        .collect();

    // aggregate feature table in declared order
    let mut all_records: Vec<FeatureRecord> = Vec::new();
    for (_, records) in &case_results {
        if let Some(r) = records {
            all_records.extend(r.iter().cloned());
        }
    }
    let features_csv = gearvib_core::chaos::records_to_csv(&all_records);
    std::fs::write(run_dir.join(FEATURES_CSV), &features_csv)?;

    let sims = sim_results
        .into_iter()
        .filter_map(|(key, outcome)| match outcome {
            SimOutcome::Ready { entry, .. } => Some((key, entry)),
            SimOutcome::Failed { .. } => None,
        })
        .collect();

    let mut manifest = RunManifest {
        config_sha256: config_hash,
        master_seed: exp.config.master_seed,
        sims,
        cases: case_results.iter().map(|(e, _)| e.clone()).collect(),
        features_csv_sha256: Some(
            Sha256::digest(features_csv.as_bytes())
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect(),
        ),
        wall_time_s: 0.0,
    };

    let report = report::write_report(exp, &manifest, &all_records);
    std::fs::write(run_dir.join(REPORT_TXT), report)?;

    manifest.wall_time_s = t_run.elapsed().as_secs_f64();
    manifest.save(&run_dir)?;

    let n_failed = manifest.failed_cases().count();
    Ok(RunSummary {
        run_dir,
        n_done: manifest.cases.len() - n_failed,
        n_failed,
        manifest,
    })
}

fn prepare_sim(
    exp: &ResolvedExperiment,
    sl: &SpeedLoadCase,
    crack: &CrackLevel,
    run_dir: &Path,
    prior: Option<&RunManifest>,
) -> SimOutcome {
    let t_sim = Instant::now();
    let key = sim_key(&sl.label, &crack.label);
    let base_rel = PathBuf::from("sims").join(&key);
    let base_abs = run_dir.join(&base_rel);

    if let Some(prev) = prior.and_then(|m| m.sims.get(&key)) {
        let bin_ok = sha256_file(&base_abs.with_extension("bin"))
            .map(|h| h == prev.bin_sha256)
            .unwrap_or(false);
        if bin_ok {
            if let Ok(result) = SimResult::load(&base_abs) {
                let mut entry = prev.clone();
                entry.from_cache = true;
                entry.wall_time_s = 0.0;
                return SimOutcome::Ready { entry, result: Arc::new(result) };
            }
        }
    }

    let system = resolve_system(&exp.system, sl);
    let spec = CrackSpec::at_depth(crack.depth_fraction);
    let sim = match cemg::simulate(
        &system,
        &spec,
        exp.config.acquisition.duration_s,
        exp.config.acquisition.sample_rate_hz,
        State::zeros(),
    ) {
        Ok(s) => s,
        Err(e) => return SimOutcome::Failed { reason: format!("{e}") },
    };
    if let Err(e) = sim.save(&base_abs) {
        return SimOutcome::Failed { reason: format!("persisting simulation: {e}") };
    }
    let bin_sha256 = match sha256_file(&base_abs.with_extension("bin")) {
        Ok(h) => h,
        Err(e) => return SimOutcome::Failed { reason: format!("{e:#}") },
    };
    SimOutcome::Ready {
        entry: SimEntry {
            speed_load: sl.label.clone(),
            crack: crack.label.clone(),
            base: base_rel,
            bin_sha256,
            from_cache: false,
            wall_time_s: t_sim.elapsed().as_secs_f64(),
        },
        result: Arc::new(sim),
    }
}

pub fn load_case_records(run_dir: &Path, case_id: &str) -> Result<Vec<FeatureRecord>> {
    let path = run_dir.join("cases").join(case_id).join("features.json");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
