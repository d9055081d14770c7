//! Saddle-point excitation probabilities with their validity checks.

use udw::response_closed::{p_antiparallel, p_differing, p_local, p_parallel, DetectorParams};
use udw::validity::{beta, check_antiparallel_pole};

fn main() -> udw::Result<()> {
    let p = DetectorParams::new(5.6, 0.01, 0.05)?;
    println!("beta = {}", beta(&p, 1.0));
    println!("single      {:e}", p_local(&p, 1.0)?.probability);
    for l in [0.0, 0.5, 1.0, 5.0] {
        println!(
            "parallel    L = {l:<4} {:e}",
            p_parallel(&p, 1.0, l)?.probability
        );
    }
    for l in [-1.0, 0.5, 1.0, 5.0] {
        println!(
            "antiparallel L = {l:<4} {:e}",
            p_antiparallel(&p, 1.0, l)?.probability
        );
    }
    match p_antiparallel(&p, 1.0, 2.0) {
        Ok(r) => println!("antiparallel L = 2    {:e}", r.probability),
        Err(e) => println!("antiparallel L = 2    refused: {e}"),
    }
    println!(
        "pole check at L = 2: {:?}",
        check_antiparallel_pole(&p, 1.0, 2.0).violated_constraints
    );
    for k2 in [0.25, 0.5, 1.0] {
        println!(
            "differing   k2 = {k2:<4} {:e}",
            p_differing(&p, 1.0, k2)?.probability
        );
    }
    Ok(())
}
