//! Crack-dependent time-varying mesh stiffness for a spur-gear pair.
//!
//! Each engaged tooth pair is a chain of springs along the line of action:
//! per-tooth body compliance (bending + shear + axial compression of the
//! involute cantilever, integrated section by section from root to contact
//! point), fillet-foundation compliance (Sainsot/Velex polynomial), and a
//! Hertzian contact stiffness linearized at a nominal force. Total mesh
//! stiffness sums the engaged pairs; with a contact ratio in (1, 2) the mesh
//! cycle alternates between double- and single-tooth regions.
//!
//! A root crack is a straight path from the root surface at
//! `crack_angle_rad` off the tooth centerline. Sections between the root and
//! the crack tip keep only the material below the path (effective thickness
//! `h + h_limit` instead of `2h`), which lowers area and second moment and
//! hence the stiffness — more so the deeper the crack.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nominal transmitted force used to linearize the Hertzian contact term
/// and to evaluate per-tooth stiffness (the non-Hertzian chain is linear in
/// force, so the choice only affects the contact term).
pub const HERTZ_NOMINAL_FORCE_N: f64 = 500.0;

/// Fraction of the fillet-foundation deflection added as structural
/// coupling between the two loaded teeth, active only in double contact.
pub const COUPLING_FRACTION: f64 = 0.25;

/// Bore-to-fillet radius ratio assumed for the foundation polynomial
/// (hub bore at 40% of root radius, within the fitted validity range).
const FOUNDATION_BORE_RATIO: f64 = 0.4;

/// Simpson intervals per beam segment.
const QUAD_INTERVALS: usize = 128;

#[derive(Debug, Error)]
pub enum TvmsError {
    #[error("invalid gear geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid crack spec: {0}")]
    InvalidCrack(String),
    #[error("contact position {got} outside engagement window [0, {max})")]
    OutsideEngagement { got: f64, max: f64 },
    #[error("force must be finite and non-negative, got {0}")]
    BadForce(f64),
    #[error("singular geometry: {0}")]
    SingularGeometry(String),
    #[error("profile needs at least 64 samples per period, got {0}")]
    BadResolution(usize),
    #[error("invalid damping inputs: {0}")]
    BadDamping(String),
}

/// Spur-gear pair geometry and material. Lengths in meters except the
/// module, which follows gear-catalog convention in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearGeometry {
    pub teeth_pinion: u32,
    pub teeth_gear: u32,
    pub module_mm: f64,
    pub pressure_angle_rad: f64,
    pub face_width_m: f64,
    /// Pinion root-circle radius; the gear's differs by half the
    /// tooth-count difference times the module.
    pub root_radius_m: f64,
    pub youngs_modulus_pa: f64,
    pub poisson_ratio: f64,
}

/// Which member of the pair a per-tooth quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Member {
    Pinion,
    Gear,
}

impl GearGeometry {
    pub fn module_m(&self) -> f64 {
        self.module_mm * 1e-3
    }

    fn teeth(&self, member: Member) -> f64 {
        match member {
            Member::Pinion => self.teeth_pinion as f64,
            Member::Gear => self.teeth_gear as f64,
        }
    }

    fn pitch_radius_m(&self, member: Member) -> f64 {
        0.5 * self.module_m() * self.teeth(member)
    }

    fn base_radius_m(&self, member: Member) -> f64 {
        self.pitch_radius_m(member) * self.pressure_angle_rad.cos()
    }

    fn tip_radius_m(&self, member: Member) -> f64 {
        self.module_m() * (0.5 * self.teeth(member) + 1.0)
    }

    fn root_radius_member_m(&self, member: Member) -> f64 {
        match member {
            Member::Pinion => self.root_radius_m,
            Member::Gear => {
                self.root_radius_m
                    + 0.5 * self.module_m() * (self.teeth_gear as f64 - self.teeth_pinion as f64)
            }
        }
    }

    /// Half tooth angle at the base circle (half pitch at the pitch circle
    /// plus the involute spread back to the base circle).
    fn half_base_tooth_angle(&self, member: Member) -> f64 {
        let a = self.pressure_angle_rad;
        std::f64::consts::PI / (2.0 * self.teeth(member)) + (a.tan() - a)
    }

    pub fn base_radius_pinion_m(&self) -> f64 {
        self.base_radius_m(Member::Pinion)
    }

    pub fn base_radius_gear_m(&self) -> f64 {
        self.base_radius_m(Member::Gear)
    }

    pub fn center_distance_m(&self) -> f64 {
        self.pitch_radius_m(Member::Pinion) + self.pitch_radius_m(Member::Gear)
    }

    pub fn base_pitch_m(&self) -> f64 {
        std::f64::consts::PI * self.module_m() * self.pressure_angle_rad.cos()
    }

    /// Tip roll angle: where the involute meets the addendum circle.
    fn tip_roll_angle(&self, member: Member) -> f64 {
        let ratio = self.tip_radius_m(member) / self.base_radius_m(member);
        (ratio * ratio - 1.0).sqrt()
    }

    /// Pinion roll angle at which a tooth pair first touches (gear tip
    /// strikes the pinion flank).
    fn start_roll_angle(&self) -> f64 {
        let line = self.center_distance_m() * self.pressure_angle_rad.sin();
        let gear_tip_arc = self.base_radius_gear_m() * self.tip_roll_angle(Member::Gear);
        (line - gear_tip_arc) / self.base_radius_pinion_m()
    }

    pub fn contact_ratio(&self) -> f64 {
        let pin = self.base_radius_pinion_m() * self.tip_roll_angle(Member::Pinion);
        let gear = self.base_radius_gear_m() * self.tip_roll_angle(Member::Gear);
        let line = self.center_distance_m() * self.pressure_angle_rad.sin();
        (pin + gear - line) / self.base_pitch_m()
    }

    /// Pinion rotation per mesh cycle (one tooth pitch).
    pub fn mesh_period_rad(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.teeth_pinion as f64
    }

    pub fn shear_modulus_pa(&self) -> f64 {
        self.youngs_modulus_pa / (2.0 * (1.0 + self.poisson_ratio))
    }

    pub fn validate(&self) -> Result<(), TvmsError> {
        let bad = |msg: String| Err(TvmsError::InvalidGeometry(msg));
        if self.teeth_pinion < 12 || self.teeth_gear < 12 {
            return bad(format!(
                "tooth counts {}/{} below 12",
                self.teeth_pinion, self.teeth_gear
            ));
        }
        if !(self.module_mm > 0.0 && self.module_mm.is_finite()) {
            return bad(format!("module {} mm must be positive", self.module_mm));
        }
        if !(self.pressure_angle_rad > 0.0
            && self.pressure_angle_rad < std::f64::consts::FRAC_PI_4)
        {
            return bad(format!(
                "pressure angle {} rad outside (0, pi/4)",
                self.pressure_angle_rad
            ));
        }
        if !(self.face_width_m > 0.0 && self.face_width_m.is_finite()) {
            return bad(format!("face width {} m must be positive", self.face_width_m));
        }
        if !(self.youngs_modulus_pa > 0.0 && self.youngs_modulus_pa.is_finite()) {
            return bad("Young's modulus must be positive".into());
        }
        if !(self.poisson_ratio >= 0.0 && self.poisson_ratio < 0.5) {
            return bad(format!("Poisson ratio {} outside [0, 0.5)", self.poisson_ratio));
        }
        for member in [Member::Pinion, Member::Gear] {
            let rf = self.root_radius_member_m(member);
            if !(rf > 0.0 && rf < self.base_radius_m(member)) {
                return bad(format!(
                    "root radius {} m must lie inside the base circle ({} m)",
                    rf,
                    self.base_radius_m(member)
                ));
            }
        }
        let cr = self.contact_ratio();
        if !(cr > 1.0 && cr < 2.0) {
            return bad(format!("contact ratio {cr} outside (1, 2)"));
        }
        if self.start_roll_angle() <= 0.0 {
            return bad("contact would start before the base tangent point (undercut)".into());
        }
        Ok(())
    }
}

/// Root-crack description: depth as a fraction of the full through-tooth
/// chord at `crack_angle_rad` from the tooth centerline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrackSpec {
    pub depth_fraction: f64,
    pub crack_angle_rad: f64,
}

impl CrackSpec {
    pub fn healthy() -> Self {
        Self { depth_fraction: 0.0, crack_angle_rad: std::f64::consts::FRAC_PI_4 }
    }

    pub fn at_depth(depth_fraction: f64) -> Self {
        Self { depth_fraction, ..Self::healthy() }
    }

    pub fn validate(&self) -> Result<(), TvmsError> {
        if !(self.depth_fraction >= 0.0 && self.depth_fraction < 1.0) {
            return Err(TvmsError::InvalidCrack(format!(
                "depth fraction {} outside [0, 1)",
                self.depth_fraction
            )));
        }
        if !(self.crack_angle_rad > 0.0 && self.crack_angle_rad < std::f64::consts::FRAC_PI_2) {
            return Err(TvmsError::InvalidCrack(format!(
                "crack angle {} rad outside (0, pi/2)",
                self.crack_angle_rad
            )));
        }
        Ok(())
    }
}

/// Deflection components of one loaded tooth, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToothDeflection {
    /// Bending + shear + axial compression of the tooth beam.
    pub body_m: f64,
    /// Fillet-foundation (gear-blank) deflection.
    pub foundation_m: f64,
    /// Structural coupling share, nonzero only in double-tooth contact.
    pub coupling_m: f64,
}

impl ToothDeflection {
    pub fn total_m(&self) -> f64 {
        self.body_m + self.foundation_m + self.coupling_m
    }
}

/// Deflections of both teeth of one engaged pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDeflection {
    pub pinion: ToothDeflection,
    pub wheel: ToothDeflection,
    pub double_contact: bool,
}

/// Per-tooth stiffnesses of one engaged pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStiffness {
    pub pinion_n_per_m: f64,
    pub wheel_n_per_m: f64,
}

/// Engagement-region marker for profile samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Single,
    Double,
}

/// Sampled K(t) and C(t) over one mesh period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessProfile {
    pub mesh_angle_grid: Vec<f64>,
    pub k_total_n_per_m: Vec<f64>,
    pub c_total_ns_per_m: Vec<f64>,
    pub region_flags: Vec<Region>,
    pub mesh_period_rad: f64,
}

impl StiffnessProfile {
    /// Linear interpolation at an arbitrary pinion angle (wraps periodically).
    pub fn lookup(&self, pinion_angle_rad: f64) -> (f64, f64) {
        let n = self.mesh_angle_grid.len();
        let theta = pinion_angle_rad.rem_euclid(self.mesh_period_rad);
        let pos = theta / self.mesh_period_rad * (n - 1) as f64;
        let i = (pos.floor() as usize).min(n - 2);
        let w = pos - i as f64;
        let k = self.k_total_n_per_m[i] * (1.0 - w) + self.k_total_n_per_m[i + 1] * w;
        let c = self.c_total_ns_per_m[i] * (1.0 - w) + self.c_total_ns_per_m[i + 1] * w;
        (k, c)
    }

    /// CSV with header `mesh_angle_rad,k_total,c_total,region`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mesh_angle_rad,k_total,c_total,region\n");
        for i in 0..self.mesh_angle_grid.len() {
            let region = match self.region_flags[i] {
                Region::Single => "single",
                Region::Double => "double",
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.mesh_angle_grid[i],
                self.k_total_n_per_m[i],
                self.c_total_ns_per_m[i],
                region
            ));
        }
        out
    }
}

/// Composite Simpson rule with `QUAD_INTERVALS` intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = QUAD_INTERVALS;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Per-member tooth frame: everything needed to integrate one tooth beam.
struct ToothFrame {
    r_b: f64,
    r_f: f64,
    theta_b: f64,
    /// Axial station of the base-circle section (centerline coordinate).
    x_base: f64,
    /// Axial station of the root section.
    x_root: f64,
    /// Half tooth thickness at the root/base section.
    h_root: f64,
}

impl ToothFrame {
    fn new(geom: &GearGeometry, member: Member) -> Self {
        let r_b = geom.base_radius_m(member);
        let r_f = geom.root_radius_member_m(member);
        let theta_b = geom.half_base_tooth_angle(member);
        let x_base = r_b * theta_b.cos();
        let ext = (r_b - r_f).max(0.0);
        ToothFrame {
            r_b,
            r_f,
            theta_b,
            x_base,
            x_root: x_base - ext,
            h_root: r_b * theta_b.sin(),
        }
    }

    /// Flank angular offset from the tooth centerline at roll angle `u`.
    fn gamma(&self, u: f64) -> f64 {
        self.theta_b - (u - u.atan())
    }

    /// Axial station (along centerline) of the section at roll angle `u`.
    fn x_of(&self, u: f64) -> f64 {
        self.r_b * (1.0 + u * u).sqrt() * self.gamma(u).cos()
    }

    /// Half tooth thickness at roll angle `u`.
    fn h_of(&self, u: f64) -> f64 {
        self.r_b * (1.0 + u * u).sqrt() * self.gamma(u).sin()
    }

    fn dx_du(&self, u: f64) -> f64 {
        let s = (1.0 + u * u).sqrt();
        let g = self.gamma(u);
        self.r_b * (u / s) * (g.cos() + u * g.sin())
    }
}

/// Straight crack path through the root region of a tooth.
struct CrackPath {
    /// Axial extent of the crack measured from the root section.
    reach: f64,
    tan_angle: f64,
    h_mouth: f64,
}

impl CrackPath {
    fn new(frame: &ToothFrame, crack: &CrackSpec) -> Option<Self> {
        if crack.depth_fraction == 0.0 {
            return None;
        }
        // full chord runs from the root surface (+h_root) to the opposite
        // surface (-h_root) along the crack angle
        let full_chord = 2.0 * frame.h_root / crack.crack_angle_rad.sin();
        let q = crack.depth_fraction * full_chord;
        Some(CrackPath {
            reach: q * crack.crack_angle_rad.cos(),
            tan_angle: crack.crack_angle_rad.tan(),
            h_mouth: frame.h_root,
        })
    }

    /// Effective section thickness at axial offset `s` from the root, for a
    /// section of half thickness `h`.
    fn thickness(&self, s: f64, h: f64) -> f64 {
        if s > self.reach {
            return 2.0 * h;
        }
        let h_limit = self.h_mouth - s * self.tan_angle;
        h + h_limit.min(h)
    }
}

/// Bending + shear + axial compliance of one tooth loaded at roll angle
/// `u_c`, per unit force (m/N).
fn body_compliance(
    geom: &GearGeometry,
    frame: &ToothFrame,
    crack: Option<&CrackPath>,
    u_c: f64,
) -> Result<f64, TvmsError> {
    let e = geom.youngs_modulus_pa;
    let g = geom.shear_modulus_pa();
    let w = geom.face_width_m;

    let gamma_c = frame.gamma(u_c);
    let alpha1 = gamma_c + u_c.atan();
    let d_c = frame.x_of(u_c);
    let h_c = frame.h_of(u_c);
    let (cos1, sin1) = (alpha1.cos(), alpha1.sin());

    let thickness = |x: f64, h: f64| -> f64 {
        match crack {
            Some(path) => path.thickness(x - frame.x_root, h),
            None => 2.0 * h,
        }
    };

    // the remaining ligament must stay open over every quadrature section
    for i in 0..=QUAD_INTERVALS {
        let frac = i as f64 / QUAD_INTERVALS as f64;
        let xr = frame.x_root + (frame.x_base - frame.x_root) * frac;
        let u = u_c * frac;
        if thickness(xr, frame.h_root) <= 0.0
            || thickness(frame.x_of(u), frame.h_of(u)) <= 0.0
        {
            return Err(TvmsError::SingularGeometry(
                "crack consumes the full tooth section".into(),
            ));
        }
    }

    let integrand = |x: f64, h: f64| -> f64 {
        let t = thickness(x, h);
        let area = t * w;
        let inertia = t * t * t * w / 12.0;
        let moment = cos1 * (d_c - x) - sin1 * h_c;
        moment * moment / (e * inertia)
            + 1.2 * cos1 * cos1 / (g * area)
            + sin1 * sin1 / (e * area)
    };

    // constant-section segment between root and base circles, then the
    // involute beam up to the loaded section
    let root_part = simpson(|x| integrand(x, frame.h_root), frame.x_root, frame.x_base);
    let involute_part =
        simpson(|u| integrand(frame.x_of(u), frame.h_of(u)) * frame.dx_du(u), 0.0, u_c);
    Ok(root_part + involute_part)
}

/// Fillet-foundation compliance per unit force (m/N), polynomial fit in
/// the load station and root-section proportions.
fn foundation_compliance(
    geom: &GearGeometry,
    frame: &ToothFrame,
    u_c: f64,
) -> Result<f64, TvmsError> {
    #[rustfmt::skip]
    const COEFFS: [[f64; 6]; 4] = [
        // A            B            C            D            E        F
        [-5.574e-5,  -1.9986e-3,  -2.3015e-4,   4.7702e-3,  0.0271,  6.8045], // L*
        [60.111e-5,  28.100e-3,  -83.431e-4,  -9.9256e-3,  0.1624,  0.9086], // M*
        [-50.952e-5, 185.50e-3,    0.0538e-4,  53.300e-3,   0.2895,  0.9236], // P*
        [-6.2042e-5,  9.0889e-3,  -4.0964e-4,   7.8297e-3, -0.1472,  0.6904], // Q*
    ];

    let gamma_c = frame.gamma(u_c);
    let alpha1 = gamma_c + u_c.atan();
    let d_c = frame.x_of(u_c);
    let h_c = frame.h_of(u_c);

    // station of the load line where it crosses the tooth centerline,
    // measured from the root circle
    let u_f = d_c - h_c * alpha1.tan() - frame.r_f;
    if u_f <= 0.0 {
        return Err(TvmsError::SingularGeometry(
            "load line crosses the centerline inside the root circle".into(),
        ));
    }
    let theta_f = frame.theta_b;
    let s_f = 2.0 * frame.r_f * theta_f.sin();
    let h_fi = 1.0 / FOUNDATION_BORE_RATIO;

    let poly = |c: &[f64; 6]| {
        c[0] / (theta_f * theta_f)
            + c[1] * h_fi * h_fi
            + c[2] * h_fi / theta_f
            + c[3] / theta_f
            + c[4] * h_fi
            + c[5]
    };
    let (l, m, p, q) = (poly(&COEFFS[0]), poly(&COEFFS[1]), poly(&COEFFS[2]), poly(&COEFFS[3]));

    let ratio = u_f / s_f;
    let tan1 = alpha1.tan();
    let cos1 = alpha1.cos();
    let bracket = l * ratio * ratio + m * ratio + p * (1.0 + q * tan1 * tan1);
    Ok(cos1 * cos1 / (geom.face_width_m * geom.youngs_modulus_pa) * bracket)
}

/// Hertzian line-contact stiffness linearized at `force_n`.
pub fn hertzian_stiffness(geom: &GearGeometry, force_n: f64) -> f64 {
    geom.youngs_modulus_pa.powf(0.9) * geom.face_width_m.powf(0.8) * force_n.powf(0.1) / 1.275
}

/// Whether a pair at phase `phi` within its engagement shares the load with
/// a second pair.
fn in_double_contact(geom: &GearGeometry, phi: f64) -> bool {
    let period = geom.mesh_period_rad();
    let handover = (geom.contact_ratio() - 1.0) * period;
    phi < handover || phi >= period
}

fn engagement_span(geom: &GearGeometry) -> f64 {
    geom.contact_ratio() * geom.mesh_period_rad()
}

/// Fraction of the mesh period over which an entering (or leaving) tooth
/// pair picks up (or sheds) its load share. Corner contact is not an
/// instantaneous event on a real gear — elastic approach and tip relief
/// spread the transfer out — and the smooth transition also keeps the
/// synthesized K(θ) twice differentiable, which a fixed-step integrator
/// needs to hold its design order.
pub const HANDOVER_TAPER_FRACTION: f64 = 0.125;

/// C² smoothstep: 0 → 1 on [0, 1] with zero first and second derivatives at
/// both ends.
fn smootherstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

/// Load share carried by a pair at engagement phase `phi`: ramps 0 → 1 over
/// the taper window after root engagement, holds 1 through the interior,
/// and releases back to 0 approaching tip departure. Zero outside the span.
fn load_weight(geom: &GearGeometry, phi: f64) -> f64 {
    let span = engagement_span(geom);
    if !(0.0..=span).contains(&phi) {
        return 0.0;
    }
    let taper = HANDOVER_TAPER_FRACTION * geom.mesh_period_rad();
    smootherstep(phi / taper) * smootherstep((span - phi) / taper)
}

/// Wheel roll angle conjugate to pinion roll angle `u_p` (same point on the
/// line of action, split between the two base circles).
fn conjugate_roll_angle(geom: &GearGeometry, u_p: f64) -> f64 {
    let line = geom.center_distance_m() * geom.pressure_angle_rad.sin();
    (line - geom.base_radius_pinion_m() * u_p) / geom.base_radius_gear_m()
}

fn deflection_at_phase(
    geom: &GearGeometry,
    crack: &CrackSpec,
    phi: f64,
    force_n: f64,
    // load share of the companion pair: scales the foundation coupling term
    // (1 in full double contact, 0 alone, fractional during load transfer)
    coupling_weight: f64,
) -> Result<PairDeflection, TvmsError> {
    let pin = ToothFrame::new(geom, Member::Pinion);
    let gear = ToothFrame::new(geom, Member::Gear);
    let crack_path = CrackPath::new(&pin, crack);

    let u_p = geom.start_roll_angle() + phi;
    let u_w = conjugate_roll_angle(geom, u_p);

    let tooth = |frame: &ToothFrame,
                     path: Option<&CrackPath>,
                     u_c: f64|
     -> Result<ToothDeflection, TvmsError> {
        let body = body_compliance(geom, frame, path, u_c)? * force_n;
        let foundation = foundation_compliance(geom, frame, u_c)? * force_n;
        let coupling = coupling_weight * COUPLING_FRACTION * foundation;
        Ok(ToothDeflection { body_m: body, foundation_m: foundation, coupling_m: coupling })
    };

    Ok(PairDeflection {
        pinion: tooth(&pin, crack_path.as_ref(), u_p)?,
        wheel: tooth(&gear, None, u_w)?,
        double_contact: coupling_weight > 0.0,
    })
}

fn check_inputs(
    geom: &GearGeometry,
    crack: &CrackSpec,
    contact_position: f64,
    force_n: f64,
) -> Result<(), TvmsError> {
    geom.validate()?;
    crack.validate()?;
    let span = engagement_span(geom);
    if !(contact_position >= 0.0 && contact_position < span) {
        return Err(TvmsError::OutsideEngagement { got: contact_position, max: span });
    }
    if !(force_n.is_finite() && force_n >= 0.0) {
        return Err(TvmsError::BadForce(force_n));
    }
    Ok(())
}

/// Deflection components of the tooth pair whose engagement phase is
/// `contact_position` (pinion rotation since this pair entered contact,
/// in `[0, contact_ratio × mesh period)`).
pub fn tooth_deflection(
    geom: &GearGeometry,
    crack: &CrackSpec,
    contact_position: f64,
    force_n: f64,
) -> Result<PairDeflection, TvmsError> {
    check_inputs(geom, crack, contact_position, force_n)?;
    let coupling = if in_double_contact(geom, contact_position) { 1.0 } else { 0.0 };
    deflection_at_phase(geom, crack, contact_position, force_n, coupling)
}

/// Per-tooth stiffnesses K = F/δ for the pair at `contact_position`.
pub fn tooth_stiffness(
    geom: &GearGeometry,
    crack: &CrackSpec,
    contact_position: f64,
    force_n: f64,
) -> Result<PairStiffness, TvmsError> {
    check_inputs(geom, crack, contact_position, force_n)?;
    if force_n == 0.0 {
        return Err(TvmsError::BadForce(force_n));
    }
    let coupling = if in_double_contact(geom, contact_position) { 1.0 } else { 0.0 };
    let defl = deflection_at_phase(geom, crack, contact_position, force_n, coupling)?;
    let per_tooth = |d: &ToothDeflection| -> Result<f64, TvmsError> {
        let total = d.total_m();
        if total <= 0.0 || !total.is_finite() {
            return Err(TvmsError::SingularGeometry(format!(
                "zero or non-finite deflection {total}"
            )));
        }
        Ok(force_n / total)
    };
    Ok(PairStiffness {
        pinion_n_per_m: per_tooth(&defl.pinion)?,
        wheel_n_per_m: per_tooth(&defl.wheel)?,
    })
}

/// Total mesh stiffness at `mesh_angle` (pinion rotation, reduced modulo
/// the mesh period): engaged pairs in parallel, each pair a series chain of
/// two tooth springs and the Hertzian contact term, scaled by its gradual
/// load share near the engagement boundaries.
pub fn total_mesh_stiffness(
    geom: &GearGeometry,
    crack: &CrackSpec,
    mesh_angle: f64,
) -> Result<f64, TvmsError> {
    geom.validate()?;
    crack.validate()?;
    let period = geom.mesh_period_rad();
    let theta = mesh_angle.rem_euclid(period);

    // the pair that entered contact at this period start, plus its
    // predecessor one period further along; weights vanish outside the span
    let phases = [theta, theta + period];
    let weights = [load_weight(geom, phases[0]), load_weight(geom, phases[1])];

    let k_h = hertzian_stiffness(geom, HERTZ_NOMINAL_FORCE_N);
    let mut k_total = 0.0;
    for i in 0..2 {
        if weights[i] == 0.0 {
            continue;
        }
        let defl =
            deflection_at_phase(geom, crack, phases[i], HERTZ_NOMINAL_FORCE_N, weights[1 - i])?;
        let compliance = (defl.pinion.total_m() + defl.wheel.total_m()) / HERTZ_NOMINAL_FORCE_N
            + 1.0 / k_h;
        k_total += weights[i] / compliance;
    }
    Ok(k_total)
}

/// Mesh damping from the stiffness and the pair's effective mass:
/// `C = 2ζ√(K·m_p·m_g/(m_p+m_g))`.
pub fn mesh_damping(
    k_total: f64,
    m_p_kg: f64,
    m_g_kg: f64,
    zeta: f64,
) -> Result<f64, TvmsError> {
    if !(m_p_kg > 0.0 && m_g_kg > 0.0) {
        return Err(TvmsError::BadDamping(format!(
            "masses must be positive, got {m_p_kg} and {m_g_kg}"
        )));
    }
    if !(k_total > 0.0 && k_total.is_finite()) {
        return Err(TvmsError::BadDamping(format!("stiffness {k_total} must be positive")));
    }
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(TvmsError::BadDamping(format!("zeta {zeta} must be non-negative")));
    }
    Ok(2.0 * zeta * (k_total * m_p_kg * m_g_kg / (m_p_kg + m_g_kg)).sqrt())
}

/// Tabulate K(θ) and C(θ) over one mesh period on an inclusive-endpoint
/// grid (`samples_per_period` points, first and last at the same phase).
pub fn build_profile(
    geom: &GearGeometry,
    crack: &CrackSpec,
    samples_per_period: usize,
    m_p_kg: f64,
    m_g_kg: f64,
    zeta: f64,
) -> Result<StiffnessProfile, TvmsError> {
    if samples_per_period < 64 {
        return Err(TvmsError::BadResolution(samples_per_period));
    }
    geom.validate()?;
    crack.validate()?;
    let period = geom.mesh_period_rad();
    let handover = (geom.contact_ratio() - 1.0) * period;
    let n = samples_per_period;

    let mut grid = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for i in 0..n {
        let theta = period * i as f64 / (n - 1) as f64;
        let k_i = total_mesh_stiffness(geom, crack, theta)?;
        let c_i = mesh_damping(k_i, m_p_kg, m_g_kg, zeta)?;
        let reduced = theta.rem_euclid(period);
        grid.push(theta);
        k.push(k_i);
        c.push(c_i);
        flags.push(if reduced < handover { Region::Double } else { Region::Single });
    }
    Ok(StiffnessProfile {
        mesh_angle_grid: grid,
        k_total_n_per_m: k,
        c_total_ns_per_m: c,
        region_flags: flags,
        mesh_period_rad: period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Benchtop 16/16 pair used across the test suite.
    fn bench_geometry() -> GearGeometry {
        GearGeometry {
            teeth_pinion: 16,
            teeth_gear: 16,
            module_mm: 2.5,
            pressure_angle_rad: 20f64.to_radians(),
            face_width_m: 0.002,
            root_radius_m: 0.016875,
            youngs_modulus_pa: 2.068e11,
            poisson_ratio: 0.3,
        }
    }

    fn pitch_phase(geom: &GearGeometry) -> f64 {
        geom.pressure_angle_rad.tan() - geom.start_roll_angle()
    }

    #[test]
    fn geometry_validates_and_derives() {
        let g = bench_geometry();
        g.validate().unwrap();
        assert_relative_eq!(g.base_radius_pinion_m(), 0.020 * 20f64.to_radians().cos(), epsilon = 1e-12);
        assert_relative_eq!(g.contact_ratio(), 1.4987, epsilon = 1e-3);
        assert_relative_eq!(g.mesh_period_rad(), std::f64::consts::PI / 8.0, epsilon = 1e-15);

        let mut bad = g;
        bad.teeth_pinion = 11;
        assert!(bad.validate().is_err());
        let mut bad = g;
        bad.pressure_angle_rad = 0.9;
        assert!(bad.validate().is_err());
        let mut bad = g;
        bad.root_radius_m = 0.030;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn crack_spec_validates() {
        CrackSpec::healthy().validate().unwrap();
        CrackSpec::at_depth(0.6).validate().unwrap();
        assert!(CrackSpec::at_depth(1.0).validate().is_err());
        assert!(CrackSpec { depth_fraction: 0.2, crack_angle_rad: 0.0 }.validate().is_err());
    }

    #[test]
    fn zero_force_gives_zero_deflection() {
        let g = bench_geometry();
        let d = tooth_deflection(&g, &CrackSpec::healthy(), pitch_phase(&g), 0.0).unwrap();
        assert_eq!(d.pinion.total_m(), 0.0);
        assert_eq!(d.wheel.total_m(), 0.0);
    }

    #[test]
    fn deflection_is_linear_in_force() {
        let g = bench_geometry();
        let phi = pitch_phase(&g);
        let d1 = tooth_deflection(&g, &CrackSpec::healthy(), phi, 300.0).unwrap();
        let d2 = tooth_deflection(&g, &CrackSpec::healthy(), phi, 600.0).unwrap();
        assert_relative_eq!(d2.pinion.body_m, 2.0 * d1.pinion.body_m, max_relative = 1e-12);
        assert_relative_eq!(d2.pinion.foundation_m, 2.0 * d1.pinion.foundation_m, max_relative = 1e-12);
        assert_relative_eq!(d2.wheel.body_m, 2.0 * d1.wheel.body_m, max_relative = 1e-12);
    }

    #[test]
    fn components_positive_and_coupling_only_in_double_contact() {
        let g = bench_geometry();
        let period = g.mesh_period_rad();
        let handover = (g.contact_ratio() - 1.0) * period;

        let single = tooth_deflection(&g, &CrackSpec::healthy(), 0.5 * (handover + period), 500.0).unwrap();
        assert!(!single.double_contact);
        assert!(single.pinion.body_m > 0.0 && single.pinion.foundation_m > 0.0);
        assert_eq!(single.pinion.coupling_m, 0.0);
        assert_eq!(single.wheel.coupling_m, 0.0);

        let double = tooth_deflection(&g, &CrackSpec::healthy(), 0.5 * handover, 500.0).unwrap();
        assert!(double.double_contact);
        assert!(double.pinion.coupling_m > 0.0);
        assert_relative_eq!(
            double.pinion.coupling_m,
            COUPLING_FRACTION * double.pinion.foundation_m,
            max_relative = 1e-15
        );
    }

    #[test]
    fn cracked_tooth_deflects_more_and_is_softer() {
        let g = bench_geometry();
        let phi = pitch_phase(&g);
        let healthy = tooth_deflection(&g, &CrackSpec::healthy(), phi, 500.0).unwrap();
        let cracked = tooth_deflection(&g, &CrackSpec::at_depth(0.6), phi, 500.0).unwrap();
        assert!(cracked.pinion.total_m() > healthy.pinion.total_m());
        // the wheel tooth is uncracked and unaffected
        assert_relative_eq!(cracked.wheel.total_m(), healthy.wheel.total_m(), max_relative = 1e-15);

        let kh = tooth_stiffness(&g, &CrackSpec::healthy(), phi, 500.0).unwrap();
        let kc = tooth_stiffness(&g, &CrackSpec::at_depth(0.6), phi, 500.0).unwrap();
        assert!(kc.pinion_n_per_m < kh.pinion_n_per_m);
    }

    #[test]
    fn identical_wheels_match_at_pitch_point() {
        let g = bench_geometry();
        let k = tooth_stiffness(&g, &CrackSpec::healthy(), pitch_phase(&g), 500.0).unwrap();
        assert_relative_eq!(k.pinion_n_per_m, k.wheel_n_per_m, max_relative = 1e-9);
    }

    #[test]
    fn stiffness_is_force_over_deflection() {
        let g = bench_geometry();
        let phi = 0.8 * pitch_phase(&g);
        let f = 500.0;
        let d = tooth_deflection(&g, &CrackSpec::at_depth(0.2), phi, f).unwrap();
        let k = tooth_stiffness(&g, &CrackSpec::at_depth(0.2), phi, f).unwrap();
        assert_relative_eq!(k.pinion_n_per_m, f / d.pinion.total_m(), max_relative = 1e-12);
        assert_relative_eq!(k.wheel_n_per_m, f / d.wheel.total_m(), max_relative = 1e-12);
    }

    #[test]
    fn contact_position_window_is_enforced() {
        let g = bench_geometry();
        let span = g.contact_ratio() * g.mesh_period_rad();
        assert!(matches!(
            tooth_deflection(&g, &CrackSpec::healthy(), -0.01, 500.0),
            Err(TvmsError::OutsideEngagement { .. })
        ));
        assert!(matches!(
            tooth_deflection(&g, &CrackSpec::healthy(), span, 500.0),
            Err(TvmsError::OutsideEngagement { .. })
        ));
        assert!(matches!(
            tooth_deflection(&g, &CrackSpec::healthy(), 0.1, -1.0),
            Err(TvmsError::BadForce(_))
        ));
    }

    #[test]
    fn total_stiffness_regions_and_series_bound() {
        let g = bench_geometry();
        let crack = CrackSpec::healthy();
        let period = g.mesh_period_rad();
        let handover = (g.contact_ratio() - 1.0) * period;

        // double-contact plateau well exceeds the single-contact plateau
        // (plateau centers, clear of the load-transfer tapers)
        let k_double = total_mesh_stiffness(&g, &crack, 0.5 * handover).unwrap();
        let k_single = total_mesh_stiffness(&g, &crack, 0.5 * (handover + period)).unwrap();
        assert!(k_double > 1.2 * k_single, "double {k_double} <= 1.2x single {k_single}");

        // series bound in single contact: below every element of the chain
        let theta = 0.5 * (handover + period);
        let k_total = total_mesh_stiffness(&g, &crack, theta).unwrap();
        let pair = tooth_stiffness(&g, &crack, theta, HERTZ_NOMINAL_FORCE_N).unwrap();
        let k_h = hertzian_stiffness(&g, HERTZ_NOMINAL_FORCE_N);
        assert!(k_total < pair.pinion_n_per_m);
        assert!(k_total < pair.wheel_n_per_m);
        assert!(k_total < k_h);
        // and equals the explicit series assembly
        let series = 1.0 / (1.0 / pair.pinion_n_per_m + 1.0 / pair.wheel_n_per_m + 1.0 / k_h);
        assert_relative_eq!(k_total, series, max_relative = 1e-12);
    }

    #[test]
    fn total_stiffness_is_periodic() {
        let g = bench_geometry();
        let crack = CrackSpec::at_depth(0.4);
        let period = g.mesh_period_rad();
        for theta in [0.0, 0.1, 0.3] {
            let a = total_mesh_stiffness(&g, &crack, theta).unwrap();
            let b = total_mesh_stiffness(&g, &crack, theta + period).unwrap();
            let c = total_mesh_stiffness(&g, &crack, theta - 3.0 * period).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
            assert_relative_eq!(a, c, max_relative = 1e-12);
        }
    }

    #[test]
    fn profile_matches_direct_evaluation() {
        let g = bench_geometry();
        let crack = CrackSpec::at_depth(0.2);
        let profile = build_profile(&g, &crack, 128, 0.8, 0.8, 0.07).unwrap();
        assert_eq!(profile.mesh_angle_grid.len(), 128);
        for i in [0usize, 17, 63, 127] {
            let direct = total_mesh_stiffness(&g, &crack, profile.mesh_angle_grid[i]).unwrap();
            assert_relative_eq!(profile.k_total_n_per_m[i], direct, max_relative = 1e-12);
        }
        // periodic endpoints, positive everywhere
        let first = profile.k_total_n_per_m[0];
        let last = *profile.k_total_n_per_m.last().unwrap();
        assert_relative_eq!(first, last, max_relative = 1e-9);
        assert!(profile.k_total_n_per_m.iter().all(|&k| k > 0.0));
        assert_eq!(profile.region_flags[0], Region::Double);
        assert_eq!(profile.region_flags[100], Region::Single);
    }

    #[test]
    fn profile_lookup_interpolates_and_wraps() {
        let g = bench_geometry();
        let profile = build_profile(&g, &CrackSpec::healthy(), 256, 0.8, 0.8, 0.07).unwrap();
        let (k0, c0) = profile.lookup(0.0);
        assert_relative_eq!(k0, profile.k_total_n_per_m[0], max_relative = 1e-12);
        assert!(c0 > 0.0);
        let (kw, _) = profile.lookup(5.0 * profile.mesh_period_rad + 0.01);
        let (kr, _) = profile.lookup(0.01);
        assert_relative_eq!(kw, kr, max_relative = 1e-12);
        // interpolated value between neighbors
        let mid = 0.5 * (profile.mesh_angle_grid[3] + profile.mesh_angle_grid[4]);
        let (km, _) = profile.lookup(mid);
        let lo = profile.k_total_n_per_m[3].min(profile.k_total_n_per_m[4]);
        let hi = profile.k_total_n_per_m[3].max(profile.k_total_n_per_m[4]);
        assert!(km >= lo && km <= hi);
    }

    #[test]
    fn crack_depth_ordering_holds_pointwise() {
        let g = bench_geometry();
        let depths = [0.0, 0.2, 0.4, 0.6];
        let profiles: Vec<_> = depths
            .iter()
            .map(|&d| build_profile(&g, &CrackSpec::at_depth(d), 128, 0.8, 0.8, 0.07).unwrap())
            .collect();
        let mut strict = 0usize;
        for i in 0..128 {
            for w in profiles.windows(2) {
                assert!(
                    w[0].k_total_n_per_m[i] >= w[1].k_total_n_per_m[i],
                    "ordering violated at grid index {i}"
                );
            }
            if profiles[0].k_total_n_per_m[i] > profiles[3].k_total_n_per_m[i] {
                strict += 1;
            }
        }
        assert!(strict * 10 >= 128 * 9, "strict reduction on only {strict}/128 angles");
    }

    #[test]
    fn healthy_profile_is_identical_regardless_of_crack_angle() {
        let g = bench_geometry();
        let a = build_profile(
            &g,
            &CrackSpec { depth_fraction: 0.0, crack_angle_rad: 0.3 },
            64,
            0.8,
            0.8,
            0.07,
        )
        .unwrap();
        let b = build_profile(&g, &CrackSpec::healthy(), 64, 0.8, 0.8, 0.07).unwrap();
        assert_eq!(a.k_total_n_per_m, b.k_total_n_per_m);
        assert_eq!(a.c_total_ns_per_m, b.c_total_ns_per_m);
    }

    #[test]
    fn damping_follows_square_root_law() {
        assert_eq!(mesh_damping(1e8, 0.8, 0.8, 0.0).unwrap(), 0.0);
        let c1 = mesh_damping(1e8, 0.8, 0.6, 0.07).unwrap();
        let c4 = mesh_damping(4e8, 0.8, 0.6, 0.07).unwrap();
        assert_relative_eq!(c4, 2.0 * c1, max_relative = 1e-12);
        let m = 0.8;
        let c = mesh_damping(2e8, m, m, 0.05).unwrap();
        assert_relative_eq!(c, 2.0 * 0.05 * (2e8 * m / 2.0).sqrt(), max_relative = 1e-12);
        assert!(mesh_damping(1e8, 0.0, 0.8, 0.07).is_err());
        assert!(mesh_damping(-1.0, 0.8, 0.8, 0.07).is_err());
    }

    #[test]
    fn hertz_term_scales_with_face_width_and_force() {
        let g = bench_geometry();
        let mut wide = g;
        wide.face_width_m = 2.0 * g.face_width_m;
        let ratio = hertzian_stiffness(&wide, 500.0) / hertzian_stiffness(&g, 500.0);
        assert_relative_eq!(ratio, 2f64.powf(0.8), max_relative = 1e-12);
        let ratio_f = hertzian_stiffness(&g, 1000.0) / hertzian_stiffness(&g, 500.0);
        assert_relative_eq!(ratio_f, 2f64.powf(0.1), max_relative = 1e-12);
    }

    #[test]
    fn profile_csv_shape() {
        let g = bench_geometry();
        let profile = build_profile(&g, &CrackSpec::healthy(), 64, 0.8, 0.8, 0.07).unwrap();
        let csv = profile.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "mesh_angle_rad,k_total,c_total,region");
        assert_eq!(lines.len(), 65);
        assert!(lines[1].ends_with(",double"));
        assert!(lines[64].ends_with(",double"));
        assert!(build_profile(&g, &CrackSpec::healthy(), 32, 0.8, 0.8, 0.07).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn damping_scales_as_sqrt_k(
                k in 1e6f64..1e9,
                m1 in 0.1f64..5.0,
                m2 in 0.1f64..5.0,
                zeta in 0.0f64..0.2,
                scale in 1.0f64..16.0,
            ) {
                let c1 = mesh_damping(k, m1, m2, zeta).unwrap();
                let c2 = mesh_damping(scale * k, m1, m2, zeta).unwrap();
                prop_assert!((c2 - scale.sqrt() * c1).abs() <= 1e-9 * c2.abs().max(1.0));
            }

            #[test]
            fn deeper_crack_never_stiffer(
                d1 in 0.0f64..0.6,
                extra in 0.01f64..0.3,
                frac in 0.0f64..1.0,
            ) {
                let g = bench_geometry();
                let theta = frac * g.mesh_period_rad() * 0.999;
                let shallow = total_mesh_stiffness(&g, &CrackSpec::at_depth(d1), theta).unwrap();
                let deep = total_mesh_stiffness(&g, &CrackSpec::at_depth((d1 + extra).min(0.89)), theta).unwrap();
                prop_assert!(deep <= shallow * (1.0 + 1e-12));
            }
        }
    }
}
