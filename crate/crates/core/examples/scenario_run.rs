//! Parse a scenario file and write its CSV outputs to a temporary directory.

use std::fs;
use std::path::Path;

use udw::cli::run_scenario;
use udw::config::validate_config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("configs/visibility.toml")
            .display()
            .to_string()
    });
    let raw = fs::read_to_string(&path)?;
    let cfg = validate_config(&raw).map_err(|issues| {
        issues
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    })?;
    let out = std::env::temp_dir().join("udw-example");
    fs::create_dir_all(&out)?;
    for file in run_scenario(&cfg, &raw, &out)? {
        println!("== {}", file.display());
        print!("{}", fs::read_to_string(file)?);
    }
    Ok(())
}
