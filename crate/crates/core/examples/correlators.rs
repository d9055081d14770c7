//! Vacuum Wightman function between branches, against the generic form.

use udw::correlators::{wightman, wightman_schlicht, Regulator};
use udw::kinematics::TrajectoryScenario;

fn main() -> udw::Result<()> {
    let reg = Regulator::new(1e-3)?;
    let sc = TrajectoryScenario::antiparallel(1.0, 0.4);
    println!(
        "{:>6} {:>6} {:>4} {:>28} {:>12}",
        "tau1", "tau2", "ij", "W", "vs generic"
    );
    for (t1, t2) in [(0.0, 0.0), (0.5, -0.5), (1.5, 1.0), (-2.0, 0.3)] {
        for (i, j) in [(1, 1), (1, 2), (2, 1)] {
            let w = wightman(&sc, i, j, t1, t2, reg)?;
            let g = wightman_schlicht(&sc, i, j, t1, t2, reg)?;
            println!(
                "{t1:>6} {t2:>6} {i}{j:<3} {:>13.6e} {:>+13.6e}i {:>12.2e}",
                w.re,
                w.im,
                (w - g).norm() / g.norm()
            );
        }
    }
    Ok(())
}
