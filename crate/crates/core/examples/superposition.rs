//! Conditional detector state after measuring the control, and its
//! interference visibility.

use std::f64::consts::PI;

use udw::kinematics::TrajectoryScenario;
use udw::response_closed::DetectorParams;
use udw::response_numeric::{QuadratureConfig, RegulatorSchedule};
use udw::superposition_state::{
    compute_wightman_integrals, conditional_density_matrix, phase_grid, visibility_scan,
    ControlState,
};

fn main() -> udw::Result<()> {
    let p = DetectorParams::new(5.6, 0.01, 0.05)?;
    let sc = TrajectoryScenario::parallel(1.0, 1.0);
    let ints = compute_wightman_integrals(
        &sc,
        &p,
        &RegulatorSchedule::default(),
        &QuadratureConfig::default(),
    )?;
    println!("hermiticity defect {:.1e}", ints.hermiticity_defect());
    for dphi in [0.0, PI / 2.0, PI] {
        let dm = conditional_density_matrix(&ints, &ControlState::two_branch(dphi)?, &p)?;
        println!(
            "delta_phi {dphi:.4}: ground {:.6e} excited {:.6e} norm {:.6e} conditional {:.6e}",
            dm.p_ground_unnormalized, dm.p_excited_unnormalized, dm.norm, dm.p_excited_conditional
        );
    }
    let v = visibility_scan(&ints, &p, &phase_grid(16))?;
    println!(
        "visibility amplitude {:.6e} about mean {:.6e}",
        v.amplitude, v.mean
    );

    Ok(())
}
