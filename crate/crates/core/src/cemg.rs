//! Coupled electromechanical gearbox simulator.
//!
//! A three-phase induction machine in abc phase coordinates drives a spur
//! gear pair through a flexible coupling. The 16-state model couples:
//!
//! - six winding currents governed by `L(θ_r)·İ = V − R·I − ω_r·(dL/dθ_r)·I`
//!   with the position-dependent stator–rotor mutual inductances,
//! - translational bearing motion of pinion and gear (y-direction),
//! - torsion of rotor, pinion, and gear, tied together by the coupling
//!   spring and the gear mesh force.
//!
//! The mesh force uses a tabulated time-varying stiffness/damping profile
//! looked up at the pinion angle, so a cracked tooth feeds directly into
//! the vibration response. Integration is fixed-step RK4; the recorded
//! output adds pinion vertical acceleration, mesh force, and
//! electromagnetic torque to the raw states.

use std::io::{Read as IoRead, Write as IoWrite};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::tvms::{self, CrackSpec, GearGeometry, StiffnessProfile, TvmsError};
use crate::util;

/// Mesh-stiffness tabulation resolution used by `simulate`.
pub const PROFILE_SAMPLES: usize = 1024;

/// Minimum sample-rate margin over the estimated mesh frequency.
pub const MIN_RATE_OVER_MESH: f64 = 20.0;

const TWO_THIRDS_PI: f64 = 2.0 * std::f64::consts::PI / 3.0;

#[derive(Debug, Error)]
pub enum CemgError {
    #[error("invalid motor parameters: {0}")]
    InvalidMotor(String),
    #[error("invalid mechanical parameters: {0}")]
    InvalidMech(String),
    #[error(transparent)]
    Gear(#[from] TvmsError),
    #[error("duration must be positive and representable, got {0} s")]
    BadDuration(f64),
    #[error(
        "sample rate {got_hz} Hz below {MIN_RATE_OVER_MESH}x estimated mesh frequency ({required_hz} Hz required)"
    )]
    SampleRateTooLow { got_hz: f64, required_hz: f64 },
    #[error("inductance matrix singular at theta_r = {theta_r}")]
    SingularInductance { theta_r: f64 },
    #[error("simulation diverged at step {step} (t = {t} s): channel {channel} became non-finite")]
    Diverged { step: usize, t: f64, channel: &'static str },
    #[error("summary needs more than 1 s of data, got {duration_s} s")]
    TooShortForSummary { duration_s: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("metadata error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("corrupt result file: {0}")]
    CorruptFile(String),
}

/// Induction-machine electrical parameters (abc frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    pub r_s_ohm: f64,
    pub r_r_ohm: f64,
    pub l_ss_h: f64,
    pub l_rr_h: f64,
    pub l_ms_h: f64,
    pub pole_pairs: u32,
    pub supply_amplitude_v: f64,
    pub supply_frequency_hz: f64,
}

impl MotorParams {
    /// Synchronous mechanical speed (rad/s).
    pub fn synchronous_speed_rad_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.supply_frequency_hz / self.pole_pairs as f64
    }

    pub fn validate(&self) -> Result<(), CemgError> {
        let bad = |msg: String| Err(CemgError::InvalidMotor(msg));
        if !(self.r_s_ohm > 0.0 && self.r_r_ohm > 0.0) {
            return bad(format!(
                "resistances must be positive, got {} and {}",
                self.r_s_ohm, self.r_r_ohm
            ));
        }
        if !(self.l_ms_h > 0.0 && self.l_ss_h > self.l_ms_h && self.l_rr_h > self.l_ms_h) {
            return bad(format!(
                "need L_ss > L_ms > 0 and L_rr > L_ms, got L_ss={} L_rr={} L_ms={}",
                self.l_ss_h, self.l_rr_h, self.l_ms_h
            ));
        }
        if self.pole_pairs == 0 {
            return bad("pole pairs must be at least 1".into());
        }
        if !(self.supply_amplitude_v >= 0.0 && self.supply_amplitude_v.is_finite()) {
            return bad(format!("supply amplitude {} invalid", self.supply_amplitude_v));
        }
        if !(self.supply_frequency_hz > 0.0) {
            return bad(format!("supply frequency {} invalid", self.supply_frequency_hz));
        }
        // inductance matrix must stay invertible over a rotor sweep
        for i in 0..64 {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
            let (l, _) = inductance_matrix(theta, self);
            if solve6(&l, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_none() {
                return bad(format!("inductance matrix singular at theta_r = {theta}"));
            }
        }
        Ok(())
    }
}

/// Drivetrain mechanical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechParams {
    pub m_p_kg: f64,
    pub m_g_kg: f64,
    pub k_yp_n_per_m: f64,
    pub k_yg_n_per_m: f64,
    pub c_yp_ns_per_m: f64,
    pub c_yg_ns_per_m: f64,
    pub i_m_kg_m2: f64,
    pub i_p_kg_m2: f64,
    pub i_g_kg_m2: f64,
    pub k_t_nm_per_rad: f64,
    pub c_t_nms_per_rad: f64,
    pub r_p_m: f64,
    pub r_g_m: f64,
    pub b_v_nms_per_rad: f64,
    pub t_l_nm: f64,
    /// Constant friction moments on pinion and gear (0 unless configured).
    pub friction_p_nm: f64,
    pub friction_g_nm: f64,
    /// Mesh damping ratio feeding the stiffness profile.
    pub zeta: f64,
}

impl MechParams {
    pub fn validate(&self) -> Result<(), CemgError> {
        let bad = |msg: String| Err(CemgError::InvalidMech(msg));
        let positives = [
            ("m_p_kg", self.m_p_kg),
            ("m_g_kg", self.m_g_kg),
            ("k_yp_n_per_m", self.k_yp_n_per_m),
            ("k_yg_n_per_m", self.k_yg_n_per_m),
            ("i_m_kg_m2", self.i_m_kg_m2),
            ("i_p_kg_m2", self.i_p_kg_m2),
            ("i_g_kg_m2", self.i_g_kg_m2),
            ("k_t_nm_per_rad", self.k_t_nm_per_rad),
            ("r_p_m", self.r_p_m),
            ("r_g_m", self.r_g_m),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negatives = [
            ("c_yp_ns_per_m", self.c_yp_ns_per_m),
            ("c_yg_ns_per_m", self.c_yg_ns_per_m),
            ("c_t_nms_per_rad", self.c_t_nms_per_rad),
            ("b_v_nms_per_rad", self.b_v_nms_per_rad),
            ("t_l_nm", self.t_l_nm),
            ("zeta", self.zeta),
        ];
        for (name, v) in non_negatives {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.friction_p_nm.is_finite() && self.friction_g_nm.is_finite()) {
            return bad("friction moments must be finite".into());
        }
        Ok(())
    }
}

/// Complete plant description for one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub motor: MotorParams,
    pub mech: MechParams,
    pub geometry: GearGeometry,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), CemgError> {
        self.motor.validate()?;
        self.mech.validate()?;
        self.geometry.validate()?;
        Ok(())
    }

    /// Stable content hash of the parameter set (hex SHA-256 of its JSON).
    pub fn sha256_hex(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("params serialize");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Estimated gear mesh frequency at synchronous speed.
    pub fn mesh_frequency_estimate_hz(&self) -> f64 {
        self.motor.supply_frequency_hz / self.motor.pole_pairs as f64
            * self.geometry.teeth_pinion as f64
    }
}

/// Simulation state: six winding currents, two translations with their
/// velocities, and three rotation angles with their speeds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub i_as: f64,
    pub i_bs: f64,
    pub i_cs: f64,
    pub i_ar: f64,
    pub i_br: f64,
    pub i_cr: f64,
    pub y_p: f64,
    pub y_g: f64,
    pub dy_p: f64,
    pub dy_g: f64,
    pub theta_p: f64,
    pub theta_g: f64,
    pub theta_r: f64,
    pub omega_p: f64,
    pub omega_g: f64,
    pub omega_r: f64,
}

/// State field names, in `to_array` order.
pub const STATE_NAMES: [&str; 16] = [
    "i_as", "i_bs", "i_cs", "i_ar", "i_br", "i_cr", "y_p", "y_g", "dy_p", "dy_g", "theta_p",
    "theta_g", "theta_r", "omega_p", "omega_g", "omega_r",
];

/// Recorded channels: every state plus derived outputs.
pub const CHANNEL_NAMES: [&str; 19] = [
    "i_as", "i_bs", "i_cs", "i_ar", "i_br", "i_cr", "y_p", "y_g", "dy_p", "dy_g", "theta_p",
    "theta_g", "theta_r", "omega_p", "omega_g", "omega_r", "ddy_p", "mesh_force_n", "torque_nm",
];

impl State {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn to_array(self) -> [f64; 16] {
        [
            self.i_as, self.i_bs, self.i_cs, self.i_ar, self.i_br, self.i_cr, self.y_p, self.y_g,
            self.dy_p, self.dy_g, self.theta_p, self.theta_g, self.theta_r, self.omega_p,
            self.omega_g, self.omega_r,
        ]
    }

    pub fn from_array(a: [f64; 16]) -> Self {
        State {
            i_as: a[0],
            i_bs: a[1],
            i_cs: a[2],
            i_ar: a[3],
            i_br: a[4],
            i_cr: a[5],
            y_p: a[6],
            y_g: a[7],
            dy_p: a[8],
            dy_g: a[9],
            theta_p: a[10],
            theta_g: a[11],
            theta_r: a[12],
            omega_p: a[13],
            omega_g: a[14],
            omega_r: a[15],
        }
    }

    /// Name of the first non-finite field, if any.
    fn first_non_finite(&self) -> Option<&'static str> {
        self.to_array()
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| STATE_NAMES[i])
    }
}

pub type Mat6 = [[f64; 6]; 6];

/// Winding inductance matrix and its derivative with respect to the
/// mechanical rotor angle. Stator and rotor blocks carry self terms on the
/// diagonal and −L_ms/2 mutuals; the stator–rotor block rotates with the
/// electrical angle (pole pairs × θ_r) and its transpose closes the matrix
/// symmetrically (flux-linkage reciprocity).
pub fn inductance_matrix(theta_r: f64, motor: &MotorParams) -> (Mat6, Mat6) {
    let p = motor.pole_pairs as f64;
    let te = p * theta_r;
    let lm = motor.l_ms_h;
    let half = -0.5 * lm;

    let mut l = [[0.0; 6]; 6];
    let mut dl = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            l[i][j] = if i == j { motor.l_ss_h } else { half };
            l[3 + i][3 + j] = if i == j { motor.l_rr_h } else { half };
        }
    }
    // phase offsets of the stator–rotor block: row i, column j sees the
    // electrical angle advanced by (j − i)·2π/3
    for i in 0..3 {
        for j in 0..3 {
            let shift = (j as i32 - i as i32) as f64 * TWO_THIRDS_PI;
            let arg = te + shift;
            let m = lm * arg.cos();
            let dm = -lm * p * arg.sin();
            l[i][3 + j] = m;
            l[3 + j][i] = m;
            dl[i][3 + j] = dm;
            dl[3 + j][i] = dm;
        }
    }
    (l, dl)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve6(a: &Mat6, b: &[f64; 6]) -> Option<[f64; 6]> {
    let mut m = *a;
    let mut x = *b;
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..6 {
        let pivot_row = (col..6).max_by(|&r1, &r2| {
            m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap()
        })?;
        if m[pivot_row][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot_row);
        x.swap(col, pivot_row);
        for row in col + 1..6 {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..6 {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..6).rev() {
        let mut v = x[col];
        for k in col + 1..6 {
            v -= m[col][k] * x[k];
        }
        x[col] = v / m[col][col];
    }
    Some(x)
}

/// Electromagnetic torque from the co-energy derivative: the three current
/// sine groups scaled by −L_ms and the pole-pair count.
pub fn electromagnetic_torque(state: &State, motor: &MotorParams) -> f64 {
    let p = motor.pole_pairs as f64;
    let te = p * state.theta_r;
    let g1 = state.i_as * state.i_ar + state.i_bs * state.i_br + state.i_cs * state.i_cr;
    let g2 = state.i_as * state.i_cr + state.i_bs * state.i_ar + state.i_cs * state.i_br;
    let g3 = state.i_as * state.i_br + state.i_bs * state.i_cr + state.i_cs * state.i_ar;
    -motor.l_ms_h
        * p
        * (g1 * te.sin() + g2 * (te - TWO_THIRDS_PI).sin() + g3 * (te + TWO_THIRDS_PI).sin())
}

/// Dynamic mesh force along the line of action: stiffness times the
/// transmission error plus damping times its rate.
pub fn mesh_force(state: &State, mech: &MechParams, k: f64, c: f64) -> f64 {
    let deflection = (state.y_p - state.y_g) - (mech.r_p_m * state.theta_p - mech.r_g_m * state.theta_g);
    let rate = (state.dy_p - state.dy_g) - (mech.r_p_m * state.omega_p - mech.r_g_m * state.omega_g);
    k * deflection + c * rate
}

fn supply_voltage(motor: &MotorParams, t: f64) -> [f64; 3] {
    let w = 2.0 * std::f64::consts::PI * motor.supply_frequency_hz;
    [
        motor.supply_amplitude_v * (w * t).cos(),
        motor.supply_amplitude_v * (w * t - TWO_THIRDS_PI).cos(),
        motor.supply_amplitude_v * (w * t + TWO_THIRDS_PI).cos(),
    ]
}

/// Derived outputs recorded alongside the raw state.
#[derive(Debug, Clone, Copy)]
struct Aux {
    ddy_p: f64,
    mesh_force_n: f64,
    torque_nm: f64,
}

fn eval_rhs(
    state: &State,
    t: f64,
    system: &SystemParams,
    profile: &StiffnessProfile,
) -> Result<([f64; 16], Aux), CemgError> {
    let motor = &system.motor;
    let mech = &system.mech;

    // electrical subsystem: L·İ = V − R·I − ω_r·(dL/dθ_r)·I
    let (l, dl) = inductance_matrix(state.theta_r, motor);
    let currents = [state.i_as, state.i_bs, state.i_cs, state.i_ar, state.i_br, state.i_cr];
    let v = supply_voltage(motor, t);
    let mut rhs = [0.0; 6];
    for row in 0..6 {
        let supply = if row < 3 { v[row] } else { 0.0 };
        let resistance = if row < 3 { motor.r_s_ohm } else { motor.r_r_ohm };
        let mut speed_term = 0.0;
        for col in 0..6 {
            speed_term += dl[row][col] * currents[col];
        }
        rhs[row] = supply - resistance * currents[row] - state.omega_r * speed_term;
    }
    let di = solve6(&l, &rhs)
        .ok_or(CemgError::SingularInductance { theta_r: state.theta_r })?;

    // mesh force from the tabulated stiffness at the current pinion angle
    let (k_mesh, c_mesh) = profile.lookup(state.theta_p);
    let n = mesh_force(state, mech, k_mesh, c_mesh);
    let t_e = electromagnetic_torque(state, motor);

    let ddy_p = (-mech.k_yp_n_per_m * state.y_p - mech.c_yp_ns_per_m * state.dy_p - n) / mech.m_p_kg;
    let ddy_g = (-mech.k_yg_n_per_m * state.y_g - mech.c_yg_ns_per_m * state.dy_g + n) / mech.m_g_kg;
    let dd_theta_p = (mech.r_p_m * n
        - mech.k_t_nm_per_rad * (state.theta_p - state.theta_r)
        - mech.c_t_nms_per_rad * (state.omega_p - state.omega_r)
        + mech.friction_p_nm)
        / mech.i_p_kg_m2;
    let dd_theta_g = (-mech.r_g_m * n + mech.friction_g_nm
        - mech.t_l_nm
        - mech.b_v_nms_per_rad * state.omega_g)
        / mech.i_g_kg_m2;
    let dd_theta_r = (-mech.k_t_nm_per_rad * (state.theta_r - state.theta_p)
        - mech.c_t_nms_per_rad * (state.omega_r - state.omega_p)
        - mech.b_v_nms_per_rad * state.omega_r
        + t_e)
        / mech.i_m_kg_m2;

    let deriv = [
        di[0],
        di[1],
        di[2],
        di[3],
        di[4],
        di[5],
        state.dy_p,
        state.dy_g,
        ddy_p,
        ddy_g,
        state.omega_p,
        state.omega_g,
        state.omega_r,
        dd_theta_p,
        dd_theta_g,
        dd_theta_r,
    ];
    Ok((deriv, Aux { ddy_p, mesh_force_n: n, torque_nm: t_e }))
}

/// Time derivative of the full state under the given plant and stiffness
/// profile.
pub fn derivatives(
    state: &State,
    t: f64,
    system: &SystemParams,
    profile: &StiffnessProfile,
) -> Result<State, CemgError> {
    let (d, _) = eval_rhs(state, t, system, profile)?;
    Ok(State::from_array(d))
}

/// Metadata embedded in every simulation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMeta {
    pub params_sha256: String,
    pub crack_depth_fraction: f64,
    /// Noise seed associated with this record downstream (none at
    /// simulation time — the integrator itself is deterministic).
    pub seed: Option<u64>,
}

/// Uniformly sampled simulation output: time grid plus one array per
/// channel in `CHANNEL_NAMES` order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub sample_rate_hz: f64,
    pub t: Vec<f64>,
    pub channels: Vec<Vec<f64>>,
    pub meta: SimMeta,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    sample_rate_hz: f64,
    n_samples: usize,
    channel_names: Vec<String>,
    meta: SimMeta,
}

impl SimResult {
    pub fn n_samples(&self) -> usize {
        self.t.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.t.len() as f64 / self.sample_rate_hz
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        CHANNEL_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.channels[i].as_slice())
    }

    /// CSV with header `t,<channel names>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for name in CHANNEL_NAMES {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for i in 0..self.t.len() {
            out.push_str(&format!("{}", self.t[i]));
            for ch in &self.channels {
                out.push_str(&format!(",{}", ch[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Write `<base>.bin` (time column then each channel, little-endian
    /// f64) and `<base>.json` (shape and metadata).
    pub fn save(&self, base: &Path) -> Result<(), CemgError> {
        let sidecar = Sidecar {
            sample_rate_hz: self.sample_rate_hz,
            n_samples: self.t.len(),
            channel_names: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
            meta: self.meta.clone(),
        };
        let mut json_path = PathBuf::from(base);
        json_path.set_extension("json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;

        let mut bin_path = PathBuf::from(base);
        bin_path.set_extension("bin");
        let file = std::fs::File::create(&bin_path)?;
        let mut writer = std::io::BufWriter::new(file);
        for column in std::iter::once(&self.t).chain(self.channels.iter()) {
            for v in column {
                writer.write_all(&v.to_le_bytes())?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    pub fn load(base: &Path) -> Result<SimResult, CemgError> {
        let mut json_path = PathBuf::from(base);
        json_path.set_extension("json");
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(&json_path)?)?;
        if sidecar.channel_names != CHANNEL_NAMES {
            return Err(CemgError::CorruptFile(format!(
                "unexpected channel list in {}",
                json_path.display()
            )));
        }

        let mut bin_path = PathBuf::from(base);
        bin_path.set_extension("bin");
        let mut bytes = Vec::new();
        std::fs::File::open(&bin_path)?.read_to_end(&mut bytes)?;
        let n = sidecar.n_samples;
        let expected = 8 * n * (1 + CHANNEL_NAMES.len());
        if bytes.len() != expected {
            return Err(CemgError::CorruptFile(format!(
                "{}: expected {expected} bytes, found {}",
                bin_path.display(),
                bytes.len()
            )));
        }
        let mut columns = Vec::with_capacity(1 + CHANNEL_NAMES.len());
        for c in 0..=CHANNEL_NAMES.len() {
            let mut col = Vec::with_capacity(n);
            for i in 0..n {
                let off = 8 * (c * n + i);
                col.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            }
            columns.push(col);
        }
        let t = columns.remove(0);
        Ok(SimResult {
            sample_rate_hz: sidecar.sample_rate_hz,
            t,
            channels: columns,
            meta: sidecar.meta,
        })
    }
}

/// Integrate the plant with fixed-step RK4 at `sample_rate_hz`, recording
/// every step. Sample count is `round(duration_s × sample_rate_hz)`.
pub fn simulate(
    system: &SystemParams,
    crack: &CrackSpec,
    duration_s: f64,
    sample_rate_hz: f64,
    initial: State,
) -> Result<SimResult, CemgError> {
    system.validate()?;
    crack.validate().map_err(CemgError::Gear)?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(CemgError::BadDuration(duration_s));
    }
    let required = MIN_RATE_OVER_MESH * system.mesh_frequency_estimate_hz();
    if !(sample_rate_hz.is_finite() && sample_rate_hz >= required) {
        return Err(CemgError::SampleRateTooLow { got_hz: sample_rate_hz, required_hz: required });
    }
    let n = (duration_s * sample_rate_hz).round() as usize;
    if n == 0 {
        return Err(CemgError::BadDuration(duration_s));
    }

    let profile = tvms::build_profile(
        &system.geometry,
        crack,
        PROFILE_SAMPLES,
        system.mech.m_p_kg,
        system.mech.m_g_kg,
        system.mech.zeta,
    )?;

    let dt = 1.0 / sample_rate_hz;
    let mut t_grid = Vec::with_capacity(n);
    let mut channels: Vec<Vec<f64>> = (0..CHANNEL_NAMES.len())
        .map(|_| Vec::with_capacity(n))
        .collect();

    let mut y = initial.to_array();
    for step in 0..n {
        let t = step as f64 * dt;
        let state = State::from_array(y);
        let (k1, aux) = eval_rhs(&state, t, system, &profile)?;

        t_grid.push(t);
        for (ch, v) in channels.iter_mut().zip(y.iter()) {
            ch.push(*v);
        }
        channels[16].push(aux.ddy_p);
        channels[17].push(aux.mesh_force_n);
        channels[18].push(aux.torque_nm);

        let stage = |base: &[f64; 16], k: &[f64; 16], h: f64| {
            let mut out = *base;
            for i in 0..16 {
                out[i] += h * k[i];
            }
            out
        };
        let (k2, _) =
            eval_rhs(&State::from_array(stage(&y, &k1, 0.5 * dt)), t + 0.5 * dt, system, &profile)?;
        let (k3, _) =
            eval_rhs(&State::from_array(stage(&y, &k2, 0.5 * dt)), t + 0.5 * dt, system, &profile)?;
        let (k4, _) = eval_rhs(&State::from_array(stage(&y, &k3, dt)), t + dt, system, &profile)?;
        for i in 0..16 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        if let Some(channel) = State::from_array(y).first_non_finite() {
            return Err(CemgError::Diverged { step: step + 1, t: t + dt, channel });
        }
    }

    Ok(SimResult {
        sample_rate_hz,
        t: t_grid,
        channels,
        meta: SimMeta {
            params_sha256: system.sha256_hex(),
            crack_depth_fraction: crack.depth_fraction,
            seed: None,
        },
    })
}

/// Operating-point summary over the final half of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadySummary {
    pub mean_rotor_speed_rad_s: f64,
    pub mean_torque_nm: f64,
    /// Fractional speed deficit below synchronous.
    pub slip: f64,
    /// Linear speed trend over the window (rad/s per s).
    pub speed_trend_rad_s2: f64,
    /// Speed trend below 1%/s of the mean speed.
    pub converged: bool,
}

pub fn steady_state_summary(
    result: &SimResult,
    motor: &MotorParams,
) -> Result<SteadySummary, CemgError> {
    let duration = result.duration_s();
    if duration <= 1.0 {
        return Err(CemgError::TooShortForSummary { duration_s: duration });
    }
    let n = result.n_samples();
    let start = n / 2;
    let omega = &result.channel("omega_r").expect("channel")[start..];
    let torque = &result.channel("torque_nm").expect("channel")[start..];
    let t = &result.t[start..];

    let mean_speed = util::mean(omega);
    let mean_torque = util::mean(torque);
    let (trend, _, _) = util::linear_fit(t, omega);
    let sync = motor.synchronous_speed_rad_s();
    let slip = (sync - mean_speed) / sync;
    let converged = trend.abs() <= 0.01 * mean_speed.abs().max(f64::EPSILON);

    Ok(SteadySummary {
        mean_rotor_speed_rad_s: mean_speed,
        mean_torque_nm: mean_torque,
        slip,
        speed_trend_rad_s2: trend,
        converged,
    })
}
