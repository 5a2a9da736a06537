//! Step-halving convergence probe: integrate the same 0.1 s window at
//! 10/20/40 kHz and report the observed order from Richardson ratios.
//!
//! Run with: `cargo run --release -p gearvib-core --example rk4_order`

use gearvib_core::cemg::{self, State};
use gearvib_core::tvms::CrackSpec;
use gearvib_core::{GearGeometry, MechParams, MotorParams, SystemParams};

fn desk_system(t_l_nm: f64) -> SystemParams {
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
            t_l_nm,
            friction_p_nm: 0.0,
            friction_g_nm: 0.0,
            zeta: 0.07,
        },
        geometry,
    }
}

fn final_state(system: &SystemParams, fs: f64) -> Vec<f64> {
    let r = cemg::simulate(system, &CrackSpec::healthy(), 0.1, fs, State::zeros()).unwrap();
    // state recorded at t = (n-1)/fs; pick the sample at the shared instant
    // t = 0.0999 s which exists exactly on all three grids
    let idx = (0.0999 * fs).round() as usize;
    (0..16).map(|c| r.channels[c][idx]).collect()
}

fn main() {
    let system = desk_system(2.8247);
    let a = final_state(&system, 10_000.0);
    let b = final_state(&system, 20_000.0);
    let c = final_state(&system, 40_000.0);
    let diff = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    };
    let e1 = diff(&a, &b);
    let e2 = diff(&b, &c);
    println!("|x(h)-x(h/2)|  = {e1:.3e}");
    println!("|x(h/2)-x(h/4)| = {e2:.3e}");
    println!("observed order  = {:.3}", (e1 / e2).log2());
}
