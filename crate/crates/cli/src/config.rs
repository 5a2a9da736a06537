//! Experiment configuration: the TOML schema, built-in presets, and
//! semantic validation.
//!
//! An experiment is a cross product of speed-load cases, crack levels, and
//! SNR levels, run against one plant description (`SystemParams`, stored in
//! its own TOML file so several experiments can share it). All physical
//! quantities carry their unit in the key name.

use std::path::{Path, PathBuf};

use anyhow::Result;
use gearvib_core::vmd::{InitScheme, VmdConfig};
use gearvib_core::{GearGeometry, MechParams, MotorParams, SystemParams};
use serde::{Deserialize, Serialize};

/// Error class that must map to exit code 2 (bad configuration), as opposed
/// to runtime failures (exit code 1).
#[derive(Debug)]
pub struct ConfigStage(pub String);

impl std::fmt::Display for ConfigStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigStage {}

pub fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigStage(msg.into()).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Acquisition {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Start-up transient dropped before any analysis.
    pub discard_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedLoadCase {
    pub label: String,
    /// Nominal (synchronous) shaft frequency; sets the supply frequency via
    /// the motor's pole-pair count.
    pub shaft_freq_hz: f64,
    pub load_torque_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackLevel {
    pub label: String,
    /// Fraction of the full-depth crack path, 0 = healthy.
    pub depth_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VmdSettings {
    pub num_modes: usize,
    pub alpha: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Center-frequency start: "zeros" (default) condenses modes onto the
    /// low-frequency band where gear content lives; "uniform" tiles the
    /// spectrum, which under broadband noise parks modes on empty bands.
    pub init: InitScheme,
}

impl Default for VmdSettings {
    fn default() -> Self {
        let base = VmdConfig::default();
        Self {
            num_modes: base.num_modes,
            alpha: base.alpha,
            tau: base.tau,
            tol: base.tol,
            max_iters: base.max_iters,
            init: InitScheme::Zeros,
        }
    }
}

impl VmdSettings {
    pub fn to_config(&self) -> VmdConfig {
        let mut cfg = VmdConfig::default();
        cfg.num_modes = self.num_modes;
        cfg.alpha = self.alpha;
        cfg.tau = self.tau;
        cfg.tol = self.tol;
        cfg.max_iters = self.max_iters;
        cfg.init = self.init;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosSettings {
    pub embedding_dim: usize,
    pub delay: usize,
    /// Theiler exclusion expressed in gear-mesh periods of the averaged
    /// revolution (scaled to samples at run time).
    pub theiler_mesh_periods: f64,
}

impl Default for ChaosSettings {
    fn default() -> Self {
        Self { embedding_dim: 3, delay: 1, theiler_mesh_periods: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Plant description TOML, resolved relative to this config file.
    /// Absent when the experiment came from a built-in preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_params_file: Option<PathBuf>,
    pub acquisition: Acquisition,
    #[serde(rename = "speed_load")]
    pub speed_loads: Vec<SpeedLoadCase>,
    #[serde(rename = "crack")]
    pub crack_levels: Vec<CrackLevel>,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub vmd: VmdSettings,
    #[serde(default)]
    pub chaos: ChaosSettings,
}

/// A config joined with the plant it references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub system: SystemParams,
}

fn label_ok(label: &str) -> bool {
    !label.is_empty()
        && label.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

impl ExperimentConfig {
    fn validate_shape(&self) -> Result<()> {
        if self.speed_loads.is_empty() {
            return config_error("at least one [[speed_load]] case is required");
        }
        if self.crack_levels.is_empty() {
            return config_error("at least one [[crack]] level is required");
        }
        if self.snr_db.is_empty() {
            return config_error("snr_db needs at least one level");
        }
        for axis in [
            self.speed_loads.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(),
            self.crack_levels.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(),
        ] {
            for (i, label) in axis.iter().enumerate() {
                if !label_ok(label) {
                    return config_error(format!(
                        "label {label:?} invalid: use ASCII letters, digits, '.', '_', '-'"
                    ));
                }
                if axis[..i].contains(label) {
                    return config_error(format!("duplicate label {label:?}"));
                }
            }
        }
        for sl in &self.speed_loads {
            if !(sl.shaft_freq_hz > 0.0 && sl.shaft_freq_hz.is_finite()) {
                return config_error(format!(
                    "speed_load {}: shaft_freq_hz must be positive",
                    sl.label
                ));
            }
            if !(sl.load_torque_nm >= 0.0 && sl.load_torque_nm.is_finite()) {
                return config_error(format!(
                    "speed_load {}: load_torque_nm must be non-negative",
                    sl.label
                ));
            }
        }
        for c in &self.crack_levels {
            if gearvib_core::CrackSpec::at_depth(c.depth_fraction).validate().is_err() {
                return config_error(format!(
                    "crack {}: depth_fraction {} out of range",
                    c.label, c.depth_fraction
                ));
            }
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return config_error("snr_db entries must be finite");
        }
        let a = &self.acquisition;
        if !(a.sample_rate_hz > 0.0 && a.sample_rate_hz.is_finite()) {
            return config_error("acquisition.sample_rate_hz must be positive");
        }
        if !(a.duration_s > 0.0 && a.duration_s.is_finite()) {
            return config_error("acquisition.duration_s must be positive");
        }
        if !(a.discard_s >= 0.0 && a.discard_s < a.duration_s) {
            return config_error("acquisition.discard_s must lie in [0, duration_s)");
        }
        if self.vmd.num_modes == 0 {
            return config_error("vmd.num_modes must be at least 1");
        }
        if self.chaos.embedding_dim < 2 {
            return config_error("chaos.embedding_dim must be at least 2");
        }
        if self.chaos.delay == 0 {
            return config_error("chaos.delay must be at least 1");
        }
        if !(self.chaos.theiler_mesh_periods >= 0.0) {
            return config_error("chaos.theiler_mesh_periods must be non-negative");
        }
        Ok(())
    }
}

impl ResolvedExperiment {
    /// Full semantic validation, including every per-case plant variant.
    pub fn validate(&self) -> Result<()> {
        self.config.validate_shape()?;
        for sl in &self.config.speed_loads {
            let system = resolve_system(&self.system, sl);
            if let Err(e) = system.validate() {
                return config_error(format!("speed_load {}: {e}", sl.label));
            }
            let required = gearvib_core::cemg::MIN_RATE_OVER_MESH
                * system.mesh_frequency_estimate_hz();
            if self.config.acquisition.sample_rate_hz < required {
                return config_error(format!(
                    "speed_load {}: sample_rate_hz {} below required {required}",
                    sl.label, self.config.acquisition.sample_rate_hz
                ));
            }
        }
        Ok(())
    }

    /// Stable hash of everything that affects results (output path excluded).
    pub fn content_sha256(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut slim = self.clone();
        slim.config.output_dir = PathBuf::new();
        slim.config.system_params_file = None;
        let bytes = serde_json::to_vec(&slim).expect("config serialize");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Apply one speed-load case to the shared plant: the supply frequency
/// follows the nominal shaft speed through the pole-pair count, and the
/// brake torque is set directly.
pub fn resolve_system(base: &SystemParams, sl: &SpeedLoadCase) -> SystemParams {
    let mut system = *base;
    system.motor.supply_frequency_hz = sl.shaft_freq_hz * system.motor.pole_pairs as f64;
    system.mech.t_l_nm = sl.load_torque_nm;
    system
}

pub fn load_system_params(path: &Path) -> Result<SystemParams> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return config_error(format!("reading system params {}: {e}", path.display())),
    };
    let system: SystemParams = match toml::from_str(&text) {
        Ok(s) => s,
        Err(e) => return config_error(format!("parsing {}: {e}", path.display())),
    };
    Ok(system)
}

pub fn load_experiment(config_path: &Path) -> Result<ResolvedExperiment> {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => return config_error(format!("reading config {}: {e}", config_path.display())),
    };
    let config: ExperimentConfig = match toml::from_str(&text) {
        Ok(c) => c,
        Err(e) => return config_error(format!("parsing {}: {e}", config_path.display())),
    };
    let Some(rel) = config.system_params_file.clone() else {
        return config_error(format!(
            "{}: system_params_file is required in file-based configs",
            config_path.display()
        ));
    };
    let base = config_path.parent().unwrap_or(Path::new("."));
    let system = load_system_params(&base.join(rel))?;
    let resolved = ResolvedExperiment { config, system };
    resolved.validate()?;
    Ok(resolved)
}

/// 16-tooth benchtop plant: small, stiff, resolvable at 10 kHz.
pub fn desk_system() -> SystemParams {
    let geometry = GearGeometry {
        teeth_pinion: 16,
        teeth_gear: 16,
        module_mm: 2.5,
        pressure_angle_rad: 20f64.to_radians(),
        face_width_m: 0.002,
        root_radius_m: 0.016875,
        youngs_modulus_pa: 2.068e11,
        poisson_ratio: 0.3,
    };
    let r_b = geometry.base_radius_pinion_m();
    SystemParams {
        motor: MotorParams {
            r_s_ohm: 1.6,
            r_r_ohm: 1.4,
            l_ss_h: 0.208,
            l_rr_h: 0.208,
            l_ms_h: 0.2,
            pole_pairs: 2,
            supply_amplitude_v: 325.27,
            supply_frequency_hz: 50.0,
        },
        mech: MechParams {
            m_p_kg: 0.8,
            m_g_kg: 0.8,
            k_yp_n_per_m: 3e7,
            k_yg_n_per_m: 3e7,
            c_yp_ns_per_m: 400.0,
            c_yg_ns_per_m: 400.0,
            i_m_kg_m2: 4e-3,
            i_p_kg_m2: 1.5e-3,
            i_g_kg_m2: 1.5e-3,
            k_t_nm_per_rad: 450.0,
            c_t_nms_per_rad: 0.3,
            r_p_m: r_b,
            r_g_m: r_b,
            b_v_nms_per_rad: 0.002,
            t_l_nm: 2.8247,
            friction_p_nm: 0.0,
            friction_g_nm: 0.0,
            zeta: 0.07,
        },
        geometry,
    }
}

/// 25-tooth rig sampled at 100 kHz — the full-scale acquisition.
pub fn full_system() -> SystemParams {
    let geometry = GearGeometry {
        teeth_pinion: 25,
        teeth_gear: 25,
        module_mm: 2.0,
        pressure_angle_rad: 20f64.to_radians(),
        face_width_m: 0.02,
        root_radius_m: 0.0225,
        youngs_modulus_pa: 2.068e11,
        poisson_ratio: 0.3,
    };
    let r_b = geometry.base_radius_pinion_m();
    let mut system = desk_system();
    system.geometry = geometry;
    system.mech.r_p_m = r_b;
    system.mech.r_g_m = r_b;
    system
}

fn standard_matrix(
    output_dir: PathBuf,
    acquisition: Acquisition,
    system: SystemParams,
) -> ResolvedExperiment {
    ResolvedExperiment {
        config: ExperimentConfig {
            output_dir,
            master_seed: 20260814,
            system_params_file: None,
            acquisition,
            speed_loads: vec![
                SpeedLoadCase {
                    label: "25Hz-25lb".into(),
                    shaft_freq_hz: 25.0,
                    load_torque_nm: 2.8247,
                },
                SpeedLoadCase {
                    label: "25Hz-50lb".into(),
                    shaft_freq_hz: 25.0,
                    load_torque_nm: 5.6494,
                },
            ],
            crack_levels: vec![
                CrackLevel { label: "H".into(), depth_fraction: 0.0 },
                CrackLevel { label: "C1".into(), depth_fraction: 0.2 },
                CrackLevel { label: "C2".into(), depth_fraction: 0.4 },
                CrackLevel { label: "C3".into(), depth_fraction: 0.6 },
            ],
            snr_db: vec![-10.0, 10.0],
            vmd: VmdSettings::default(),
            chaos: ChaosSettings::default(),
        },
        system,
    }
}

/// Built-in experiment matrices. `desk` finishes in minutes on a laptop;
/// `full` is the 100 kHz / 4 s acquisition.
pub fn preset(name: &str) -> Result<ResolvedExperiment> {
    let exp = match name {
        "desk" => standard_matrix(
            PathBuf::from("runs/desk"),
            Acquisition { sample_rate_hz: 10_000.0, duration_s: 1.5, discard_s: 0.5 },
            desk_system(),
        ),
        "full" => standard_matrix(
            PathBuf::from("runs/full"),
            Acquisition { sample_rate_hz: 100_000.0, duration_s: 4.0, discard_s: 0.5 },
            full_system(),
        ),
        other => return config_error(format!("unknown preset {other:?}: expected desk or full")),
    };
    exp.validate()?;
    Ok(exp)
}
