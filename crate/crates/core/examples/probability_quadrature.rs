//! Numerical excitation probability compared with the saddle-point form.

use udw::kinematics::TrajectoryScenario;
use udw::response_closed::{p_parallel_formula, DetectorParams};
use udw::response_numeric::{
    excitation_probability_quadrature, QuadratureConfig, RegulatorSchedule,
};

fn main() -> udw::Result<()> {
    let sched = RegulatorSchedule::default();
    let quad = QuadratureConfig::default();
    for (sigma, beta) in [(0.05, 0.5), (0.05, 0.014), (0.2, 0.5)] {
        let p = DetectorParams::new(beta / (sigma * sigma), 1.0, sigma)?;
        for l in [0.0, 0.5, 2.0] {
            let q = excitation_probability_quadrature(
                &TrajectoryScenario::parallel(1.0, l),
                &p,
                &sched,
                &quad,
            )?;
            let c = p_parallel_formula(&p, 1.0, l);
            println!(
                "sigma {sigma} beta {beta:<5} L {l}: quadrature {:.6e} ({:?}), closed form {:.6e}, ratio {:.4}",
                q.value,
                q.contour,
                c,
                c / q.value
            );
        }
    }
    Ok(())
}
