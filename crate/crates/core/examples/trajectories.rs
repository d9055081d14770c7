//! Worldlines, four-velocities and horizon crossings for each family.

use udw::kinematics::{four_velocity, horizon_crossing_times, worldline_event, TrajectoryScenario};

fn main() -> udw::Result<()> {
    let scenarios = [
        TrajectoryScenario::single(1.0),
        TrajectoryScenario::parallel(1.0, 0.2),
        TrajectoryScenario::antiparallel(1.0, 0.5),
        TrajectoryScenario::differing(1.0, 0.5),
        TrajectoryScenario::thermal_pair(1.0, 1.0),
    ];
    for sc in &scenarios {
        println!("{}", sc.family.name());
        for branch in 1..=sc.branch_count() {
            for tau in [-1.0, 0.0, 1.0] {
                let e = worldline_event(sc, branch, tau)?;
                let u = four_velocity(sc, branch, tau)?;
                println!(
                    "  branch {branch} tau {tau:>4}: t = {:>8.4} z = {:>8.4}  u.u = {:.15}",
                    e.t,
                    e.z,
                    u.minkowski_norm()
                );
            }
        }
        if sc.branch_count() == 2 {
            println!("  horizon crossings: {:?}", horizon_crossing_times(sc)?);
        }
    }
    Ok(())
}
