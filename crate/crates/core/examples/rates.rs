//! Long-time transition rates: Planck spectrum, separation dependence and KMS.

use udw::kinematics::TrajectoryScenario;
use udw::response_closed::DetectorParams;
use udw::response_numeric::{
    kms_check, planck_rate, transition_rate, QuadratureConfig, RegulatorSchedule,
};

fn main() -> udw::Result<()> {
    let sched = RegulatorSchedule::default();
    let quad = QuadratureConfig::default();
    let rate = |sc: &TrajectoryScenario, omega: f64, tau: f64| {
        transition_rate(
            sc,
            &DetectorParams::new(omega, 1.0, 1.0)?,
            tau,
            &sched,
            &quad,
        )
    };

    let single = TrajectoryScenario::single(1.0);
    for omega in [-1.0, 0.5, 1.0, 2.0] {
        let r = rate(&single, omega, 0.0)?;
        println!(
            "single omega = {omega:>4}: {:.6e} (Planck {:.6e})",
            r.value,
            planck_rate(1.0, omega)
        );
    }

    for l in [0.2, 0.5, 1e6] {
        let sc = TrajectoryScenario::parallel(1.0, l);
        for tau in [-1.0, 0.0, 1.0] {
            let r = rate(&sc, 1.0, tau)?;
            let kms = kms_check(|om| rate(&sc, om, tau), 1.0, 1.0, 0.01)?;
            println!(
                "parallel L = {l:<6} tau = {tau:>4}: rate {:.6e} +- {:.1e}, KMS deviation {:.2e}",
                r.value, r.error_estimate, kms.deviation
            );
        }
    }
    Ok(())
}
