//! `gearvib` — simulate a motor-driven spur-gear stage with a tooth crack,
//! decompose the vibration, and extract chaos features, per case or as a
//! full experiment matrix.
//!
//! Exit codes: 0 success, 1 runtime/partial failure, 2 bad configuration.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gearvib_cli::config::{
    load_experiment, load_system_params, preset, resolve_system, ConfigStage, CrackLevel,
    ResolvedExperiment, SpeedLoadCase,
};
use gearvib_cli::pipeline::{self, analyze_case, case_id, write_case_artifacts};
use gearvib_cli::plots::{emit_plots, PlotKind};
use gearvib_core::cemg::{self, SimResult, State};
use gearvib_core::tvms::CrackSpec;
use gearvib_core::vmd::vmd;

#[derive(Parser)]
#[command(name = "gearvib", version, about = "gear-crack vibration experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one operating point and persist the raw record.
    Simulate(SimulateArgs),
    /// Add noise to a persisted record and split it into narrow-band modes.
    Decompose(DecomposeArgs),
    /// Full single-case chain (noise, decomposition, averaging, features).
    Features(FeaturesArgs),
    /// Run a whole experiment matrix with a resumable manifest.
    Run(RunArgs),
    /// Export plot-ready CSVs from a finished run directory.
    Plots(PlotsArgs),
    /// Check a config file; exit 0 if usable, 2 otherwise.
    ValidateConfig(ValidateArgs),
}

/// Where the plant description and analysis settings come from.
#[derive(Args)]
struct SourceArgs {
    /// Built-in experiment preset (`desk` or `full`).
    #[arg(long, default_value = "desk", conflicts_with = "config")]
    preset: String,
    /// Experiment config TOML (overrides --preset).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SourceArgs {
    fn load(&self) -> Result<ResolvedExperiment> {
        match &self.config {
            Some(path) => load_experiment(path),
            None => preset(&self.preset),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Plant description TOML (overrides the preset's plant).
    #[arg(long)]
    system: Option<PathBuf>,
    /// Nominal shaft frequency (sets the supply frequency).
    #[arg(long, default_value_t = 25.0)]
    shaft_freq_hz: f64,
    /// Brake torque on the output gear.
    #[arg(long, default_value_t = 2.8247)]
    load_torque_nm: f64,
    /// Crack depth as a fraction of the full crack path (0 = healthy).
    #[arg(long, default_value_t = 0.0)]
    crack_depth: f64,
    /// Override the preset's record length.
    #[arg(long)]
    duration_s: Option<f64>,
    /// Override the preset's sample rate.
    #[arg(long)]
    sample_rate_hz: Option<f64>,
    /// Output base path; writes <out>.bin and <out>.json.
    #[arg(long)]
    out: PathBuf,
    /// Also write <out>.csv with every channel.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Base path of a persisted simulation (no extension).
    #[arg(long)]
    sim: PathBuf,
    /// Output directory for vmd_modes.csv and vmd.json.
    #[arg(long)]
    out: PathBuf,
    /// Start-up transient to drop (defaults to the preset's value).
    #[arg(long)]
    discard_s: Option<f64>,
    /// Inject white noise at this SNR before decomposing.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Noise seed (only used with --snr-db).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Base path of a persisted simulation (no extension).
    #[arg(long)]
    sim: PathBuf,
    /// Run directory; artifacts land under <out>/cases/<id>/.
    #[arg(long)]
    out: PathBuf,
    /// Condition label for the feature rows (e.g. H, C1).
    #[arg(long, default_value = "H")]
    condition: String,
    /// Speed-load label for the feature rows.
    #[arg(long, default_value = "case")]
    speed_load: String,
    /// Noise level injected before decomposition.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start-up transient to drop (defaults to the preset's value).
    #[arg(long)]
    discard_s: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for case-level parallelism (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct PlotsArgs {
    /// A finished run directory (holds manifest.json).
    #[arg(long)]
    run: PathBuf,
    /// Which plot data sets to emit (default: all).
    #[arg(long, value_enum, num_args = 1.., value_delimiter = ',')]
    which: Vec<PlotKind>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: SourceArgs,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Features(args) => cmd_features(args),
        Command::Run(args) => cmd_run(args),
        Command::Plots(args) => cmd_plots(args),
        Command::ValidateConfig(args) => cmd_validate(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<ConfigStage>().is_some() { 2 } else { 1 };
            std::process::exit(code);
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let exp = args.source.load()?;
    let base_system = match &args.system {
        Some(path) => load_system_params(path)?,
        None => exp.system,
    };
    let sl = SpeedLoadCase {
        label: "cli".into(),
        shaft_freq_hz: args.shaft_freq_hz,
        load_torque_nm: args.load_torque_nm,
    };
    let system = resolve_system(&base_system, &sl);
    let crack = CrackSpec::at_depth(args.crack_depth);
    let duration = args.duration_s.unwrap_or(exp.config.acquisition.duration_s);
    let rate = args.sample_rate_hz.unwrap_or(exp.config.acquisition.sample_rate_hz);

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let sim = cemg::simulate(&system, &crack, duration, rate, State::zeros())?;
    sim.save(&args.out)?;
    if args.csv {
        std::fs::write(args.out.with_extension("csv"), sim.to_csv())?;
    }
    let summary = cemg::steady_state_summary(&sim, &system.motor);
    println!(
        "simulated {} samples at {} Hz -> {}.bin",
        sim.n_samples(),
        sim.sample_rate_hz,
        args.out.display()
    );
    if let Ok(s) = summary {
        println!(
            "steady state: rotor speed {:.2} rad/s, slip {:.3}%, torque {:.3} N*m, converged: {}",
            s.mean_rotor_speed_rad_s,
            100.0 * s.slip,
            s.mean_torque_nm,
            s.converged
        );
    }
    Ok(0)
}

fn cmd_decompose(args: DecomposeArgs) -> Result<i32> {
    let exp = args.source.load()?;
    let sim = SimResult::load(&args.sim)
        .with_context(|| format!("loading simulation {}", args.sim.display()))?;
    let discard = args.discard_s.unwrap_or(exp.config.acquisition.discard_s);
    let range = pipeline::retained_range(&sim, discard);
    let ddy =
        &sim.channel("ddy_p").context("record lacks a ddy_p channel")?[range];

    let signal: Vec<f64> = match args.snr_db {
        Some(snr) => gearvib_core::signal::add_awgn(ddy, snr, args.seed)?.data,
        None => ddy.to_vec(),
    };
    let result = vmd(&signal, sim.sample_rate_hz, &exp.config.vmd.to_config())?;

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("vmd_modes.csv"), result.to_csv())?;
    std::fs::write(
        args.out.join("vmd.json"),
        serde_json::to_string_pretty(&result.sidecar())?,
    )?;
    println!(
        "decomposed {} samples into {} modes (centers: {}) -> {}",
        signal.len(),
        result.modes.len(),
        result
            .center_frequencies_hz
            .iter()
            .map(|f| format!("{f:.1} Hz"))
            .collect::<Vec<_>>()
            .join(", "),
        args.out.display()
    );
    Ok(0)
}

fn cmd_features(args: FeaturesArgs) -> Result<i32> {
    let mut exp = args.source.load()?;
    if let Some(d) = args.discard_s {
        exp.config.acquisition.discard_s = d;
    }
    let sim = SimResult::load(&args.sim)
        .with_context(|| format!("loading simulation {}", args.sim.display()))?;
    let sl = SpeedLoadCase {
        label: args.speed_load.clone(),
        shaft_freq_hz: 0.0, // labels only; the chain measures speed from the record
        load_torque_nm: 0.0,
    };
    let crack = CrackLevel { label: args.condition.clone(), depth_fraction: 0.0 };
    let analysis = analyze_case(&sim, &exp, &sl, &crack, args.snr_db, args.seed)?;
    let id = case_id(&sl.label, &crack.label, args.snr_db);
    std::fs::create_dir_all(&args.out)?;
    write_case_artifacts(&args.out, &id, &analysis)?;
    println!(
        "features for case {id} -> {}",
        args.out.join("cases").join(&id).display()
    );
    for r in &analysis.records {
        let le = r
            .le
            .as_ref()
            .map(|l| format!("{:+.4}", l.lambda_per_s))
            .unwrap_or_else(|| "  n/a".into());
        let cd = r
            .cd
            .as_ref()
            .map(|c| format!("{:.3}", c.dimension))
            .unwrap_or_else(|| "n/a".into());
        println!("  {}: LE {le} 1/s, CD {cd}, reliable: {}", r.label, r.reliable);
    }
    Ok(0)
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let mut exp = args.source.load()?;
    if let Some(out) = args.out {
        exp.config.output_dir = out;
    }
    if let Some(seed) = args.seed {
        exp.config.master_seed = seed;
    }
    let summary = pipeline::run_experiment(&exp, args.workers)?;
    for case in &summary.manifest.cases {
        let status = match (&case.status, case.from_cache) {
            (gearvib_cli::manifest::CaseStatus::Done, true) => "done (cached)",
            (gearvib_cli::manifest::CaseStatus::Done, false) => "done",
            (gearvib_cli::manifest::CaseStatus::Failed, _) => "FAILED",
        };
        match &case.reason {
            Some(reason) => println!("  {} ... {status}: {reason}", case.id),
            None => println!("  {} ... {status}", case.id),
        }
    }
    println!(
        "run finished: {} done, {} failed -> {}",
        summary.n_done,
        summary.n_failed,
        summary.run_dir.display()
    );
    println!(
        "feature table: {}",
        summary.run_dir.join(pipeline::FEATURES_CSV).display()
    );
    println!("report: {}", summary.run_dir.join(pipeline::REPORT_TXT).display());
    Ok(if summary.n_failed == 0 { 0 } else { 1 })
}

fn cmd_plots(args: PlotsArgs) -> Result<i32> {
    let written = emit_plots(&args.run, &args.which)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!("{} plot data files", written.len());
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> Result<i32> {
    let exp = args.source.load()?;
    let n_cases = exp.config.speed_loads.len()
        * exp.config.crack_levels.len()
        * exp.config.snr_db.len();
    println!(
        "configuration OK: {} cases ({} speed-loads x {} cracks x {} SNR levels), output {}",
        n_cases,
        exp.config.speed_loads.len(),
        exp.config.crack_levels.len(),
        exp.config.snr_db.len(),
        exp.config.output_dir.display()
    );
    Ok(0)
}
