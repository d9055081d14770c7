use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use udw::cli::{limits_report, run_scenario};
use udw::config::{validate_config, ScenarioConfig};
use udw::kinematics::Family;
use udw::response_closed::DetectorParams;
use udw::response_numeric::planck_rate;

#[derive(Parser)]
#[command(
    name = "udw",
    version,
    about = "Detector response along superposed accelerated trajectories"
)]
struct Cli {
    /// Worker threads for grid sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory that output paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Relative quadrature tolerance, overriding the config.
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
    /// Comma-separated regulator ladder, e.g. 1e-2,5e-3,2.5e-3.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_ladder: Option<Vec<f64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every output of a scenario file.
    Run { config: PathBuf },
    /// Parse and validate a scenario file without computing anything.
    Check { config: PathBuf },
    /// Reference values.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
    /// Closed-form limit checks for one family.
    Limits {
        family: String,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.01)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Thermal rate omega / (2 pi (exp(2 pi omega/kappa) - 1)).
    Planck {
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long)]
        kappa: f64,
    },
}

fn load(cli: &Cli, path: &PathBuf) -> Result<(ScenarioConfig, String), String> {
    let raw = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = validate_config(&raw).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| format!("  {e}")).collect();
        format!("{} is invalid:\n{}", path.display(), lines.join("\n"))
    })?;
    if let Some(tol) = cli.quad_tol {
        cfg.quadrature.rel_tol = tol;
        cfg.quadrature
            .validate()
            .map_err(|e| format!("--quad-tol: {e}"))?;
    }
    if let Some(eps) = &cli.eps_ladder {
        cfg.regulator.epsilons = eps.clone();
        cfg.regulator
            .validate()
            .map_err(|e| format!("--eps-ladder: {e}"))?;
    }
    Ok((cfg, raw))
}

fn run(cli: &Cli) -> Result<(), String> {
    match &cli.command {
        Command::Run { config } => {
            let (cfg, raw) = load(cli, config)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            let written = run_scenario(&cfg, &raw, &cli.out_dir).map_err(|e| e.to_string())?;
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Check { config } => {
            let (cfg, _) = load(cli, config)?;
            for w in &cfg.warnings {
                println!("warning: {w}");
            }
            println!("{cfg:#?}");
            println!("ok");
        }
        Command::Oracle {
            which: Oracle::Planck { omega, kappa },
        } => {
            if !(kappa.is_finite() && *kappa > 0.0 && omega.is_finite()) {
                return Err("--kappa must be > 0 and --omega finite".into());
            }
            println!("{:e}", planck_rate(*kappa, *omega));
        }
        Command::Limits {
            family,
            omega,
            sigma,
            lambda,
            kappa,
        } => {
            let f = Family::parse(family).ok_or_else(|| format!("unknown family {family:?}"))?;
            let p = DetectorParams::new(*omega, *lambda, *sigma).map_err(|e| e.to_string())?;
            for c in limits_report(f, &p, *kappa).map_err(|e| e.to_string())? {
                println!(
                    "{:<64} {:>24e} {:>24e} rel {:.3e}",
                    c.name,
                    c.value,
                    c.reference,
                    c.relative_difference()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: --workers: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
