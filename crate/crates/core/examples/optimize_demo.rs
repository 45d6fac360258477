//! Runs the robust design on a 16-unit perimeter deployment and prints the
//! optimized bound for a few fronthaul budgets.

use cranloc_core::{
    default_ru_layout, solve_robust, Circle, NoiseModel, Scenario, SolverOptions,
};
use std::time::Instant;

fn main() {
    let mut scenario = Scenario {
        area_side: 500.0,
        ru_positions: default_ru_layout(16, 500.0),
        circles: [[50.0, 50.0], [-50.0, 50.0], [-50.0, -50.0], [50.0, -50.0]]
            .iter()
            .map(|&c| Circle { center: c, radius: 50.0 * std::f64::consts::SQRT_2 })
            .collect(),
        path_loss_exponent: 3.0,
        fading_power: vec![1.0; 16],
        bandwidth: 1.0e6,
        signal_esd_dbm_per_hz: -60.0,
        noise_model: vec![NoiseModel { n0_dbm_per_hz: -174.0, ar_coeff: 0.9 }; 16],
        fronthaul_capacity: vec![5.0; 16],
        propagation_speed: 299_792_458.0,
        grid_points: 100,
        uncertainty_center: [0.0, 0.0],
        uncertainty_side: 200.0,
    };
    let opts = SolverOptions::default();
    for cap in [0.1, 0.5, 1.0, 2.0, 5.0] {
        scenario.fronthaul_capacity = vec![cap; 16];
        let start = Instant::now();
        match solve_robust(&scenario, &opts) {
            Ok(state) => println!(
                "C={cap:>4}: bound {:12.6} m^2  outer {:>2}  newton {:>4}  converged {}  ({:.2?})",
                state.t,
                state.iteration,
                state.newton_steps,
                state.converged,
                start.elapsed()
            ),
            Err(e) => println!("C={cap:>4}: failed: {e}"),
        }
    }
}
