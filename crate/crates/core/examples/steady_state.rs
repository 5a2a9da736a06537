//! Spin up the default desk-scale rig at two load levels and print the
//! steady operating point plus vibration levels for each crack depth.
//!
//! Run with: `cargo run --release -p gearvib-core --example steady_state`

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

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn main() {
    let fs = 10_000.0;
    let duration = 1.5;
    for t_l in [2.8247, 5.6494] {
        let system = desk_system(t_l);
        println!("== load {t_l} N·m ==");
        for depth in [0.0, 0.2, 0.4, 0.6] {
            let crack = CrackSpec::at_depth(depth);
            let r = cemg::simulate(&system, &crack, duration, fs, State::zeros()).unwrap();
            let s = cemg::steady_state_summary(&r, &system.motor).unwrap();
            let n = r.n_samples();
            let tail = n / 2..;
            let ddy = &r.channel("ddy_p").unwrap()[tail.clone()];
            let force = &r.channel("mesh_force_n").unwrap()[tail.clone()];
            let f_mean = force.iter().sum::<f64>() / force.len() as f64;
            println!(
                "crack {depth:.1}: slip {:+.4}  omega_r {:7.2} rad/s  Te {:5.2} N·m  \
                 N_mean {:8.1} N  ddy_p rms {:9.3} m/s^2  converged {}",
                s.slip,
                s.mean_rotor_speed_rad_s,
                s.mean_torque_nm,
                f_mean,
                rms(ddy),
                s.converged
            );
        }
    }
}
