//! Scenario runner behind the `udw` binary.
//!
//! Each `[[outputs]]` entry becomes one CSV (rate maps: one per series
//! value). Points are evaluated on the rayon pool and written in grid order,
//! so the body of a file depends only on the config. A point that cannot be
//! evaluated is written as NaN with `valid = 0`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{map_sigma, Backend, OutputKind, OutputSpec, ScenarioConfig};
use crate::error::{invalid, Error, Result};
use crate::kinematics::{Family, TrajectoryScenario};
use crate::response_closed::{
    p_antiparallel, p_differing, p_local, p_local_formula, p_parallel, zeta, DetectorParams,
};
use crate::response_numeric::{
    excitation_probability_quadrature, kms_check, planck_rate, transition_rate,
    transition_rate_finite_switching,
};
use crate::superposition_state::{
    compute_wightman_integrals, conditional_density_matrix, visibility_scan, ControlState,
};

/// A finished CSV, not yet on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<(Vec<f64>, bool)>,
}

impl CsvTable {
    /// Header lines, column line and rows. `timestamp` is the only
    /// run-dependent line.
    pub fn render(&self, timestamp: Option<u64>) -> String {
        let mut s = String::new();
        for (n, h) in self.header.iter().enumerate() {
            let _ = writeln!(s, "# {h}");
            if n == 1 {
                if let Some(t) = timestamp {
                    let _ = writeln!(s, "# generated_unix: {t}");
                }
            }
        }
        let _ = writeln!(s, "{},valid", self.columns.join(","));
        for (row, valid) in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_cell(*v)).collect();
            let _ = writeln!(s, "{},{}", cells.join(","), u8::from(*valid));
        }
        s
    }

    /// Everything after the header lines.
    pub fn body(&self) -> String {
        self.render(None)
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn format_cell(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn config_hash(raw: &str) -> String {
    Sha256::digest(raw.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn common_header(
    cfg: &ScenarioConfig,
    sc: &TrajectoryScenario,
    raw: &str,
    kind: OutputKind,
) -> Vec<String> {
    let p = &cfg.params;
    let q = &cfg.quadrature;
    let r = &cfg.regulator;
    vec![
        format!("udw {}", kind.name()),
        format!("config_sha256: {}", config_hash(raw)),
        format!("scenario: family={} kappa1={} kappa2={} L={}", sc.family.name(), sc.kappa1, sc.kappa2, sc.l),
        format!("params: omega={} lambda={} sigma={}", p.omega, p.lambda, p.sigma),
        format!("regulator: epsilons={:?} extrapolation={}", r.epsilons, r.extrapolation.name()),
        format!(
            "quadrature: abs_tol={:e} rel_tol={:e} max_subdivisions={} oscillation_resolution={} s_max={} contour={}",
            q.abs_tol,
            q.rel_tol,
            q.max_subdivisions,
            q.oscillation_resolution,
            q.s_max.map_or("auto".to_string(), |s| s.to_string()),
            q.contour.name()
        ),
        "units: kappa = kappa1; lengths and times in units of 1/kappa1 unless stated".to_string(),
    ]
}

fn has_l(family: Family) -> bool {
    matches!(
        family,
        Family::Parallel | Family::AntiParallel | Family::ThermalInertialPair
    )
}

fn probability_point(
    cfg: &ScenarioConfig,
    backend: Backend,
    l_over_sigma: f64,
    b: f64,
) -> Result<f64> {
    let sigma = map_sigma(&cfg.scenario, &cfg.params, b);
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!(
            "kappa_sigma2_omega = {b} gives sigma = {sigma}"
        )));
    }
    let omega = cfg.params.omega * cfg.params.sigma / sigma;
    let params = DetectorParams::new(omega, 1.0, sigma)?;
    let mut sc = cfg.scenario;
    if has_l(sc.family) {
        sc.l = l_over_sigma * sigma;
    }
    sc.validate()?;
    match backend {
        Backend::ClosedForm => {
            let k = sc.kappa1;
            let r = match sc.family {
                Family::SingleAccel => p_local(&params, k)?,
                Family::Parallel => p_parallel(&params, k, sc.l)?,
                Family::AntiParallel => p_antiparallel(&params, k, sc.l)?,
                Family::Differing => p_differing(&params, sc.kappa1, sc.kappa2)?,
                Family::ThermalInertialPair => {
                    return Err(invalid("no closed form for the thermal pair"))
                }
            };
            Ok(r.probability)
        }
        Backend::Quadrature => {
            let r =
                excitation_probability_quadrature(&sc, &params, &cfg.regulator, &cfg.quadrature)?;
            if r.value < 0.0 {
                return Err(invalid(format!(
                    "negative probability {:e} (error {:e})",
                    r.value, r.error_estimate
                )));
            }
            Ok(r.value)
        }
    }
}

fn probability_map(cfg: &ScenarioConfig, raw: &str, spec: &OutputSpec) -> Result<CsvTable> {
    let betas = cfg
        .grids
        .kappa_sigma2_omega
        .clone()
        .ok_or_else(|| invalid("grids.kappa_sigma2_omega missing"))?;
    let ls = if has_l(cfg.scenario.family) {
        cfg.grids
            .l_over_sigma
            .clone()
            .ok_or_else(|| invalid("grids.L_over_sigma missing"))?
    } else {
        vec![0.0]
    };
    let points: Vec<(f64, f64)> = ls
        .iter()
        .flat_map(|&l| betas.iter().map(move |&b| (l, b)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(l, b)| match probability_point(cfg, spec.backend, l, b) {
            Ok(v) => (vec![l, b, v], true),
            Err(_) => (vec![l, b, f64::NAN], false),
        })
        .collect();
    let mut header = common_header(cfg, &cfg.scenario, raw, OutputKind::ProbabilityMap);
    header.push(format!(
        "backend: {}; omega*sigma = {} held fixed, sigma = beta/(kappa1*omega*sigma), L = L_over_sigma*sigma",
        match spec.backend {
            Backend::Quadrature => "quadrature",
            Backend::ClosedForm => "closed_form",
        },
        cfg.params.omega * cfg.params.sigma
    ));
    if spec.backend == Backend::ClosedForm && cfg.scenario.family == Family::Differing {
        header.push("closed form omits the residue terms".to_string());
    }
    header.push(
        "P_over_lambda2 = excitation probability / lambda^2, with the 1/N^2 control normalisation"
            .to_string(),
    );
    Ok(CsvTable {
        header,
        columns: vec![
            "L_over_sigma".into(),
            "kappa_sigma2_omega".into(),
            "P_over_lambda2".into(),
        ],
        rows,
    })
}

/// Scenario for one member of a rate-map series.
fn series(cfg: &ScenarioConfig) -> Vec<(Option<(String, f64)>, TrajectoryScenario)> {
    let sc = cfg.scenario;
    let k = sc.kappa1;
    match sc.family {
        f if has_l(f) => match &cfg.grids.l_kappa {
            Some(v) => v
                .iter()
                .map(|&lk| {
                    (
                        Some(("L_kappa".to_string(), lk)),
                        TrajectoryScenario { l: lk / k, ..sc },
                    )
                })
                .collect(),
            None => vec![(None, sc)],
        },
        Family::Differing => match &cfg.grids.kappa2_over_kappa1 {
            Some(v) => v
                .iter()
                .map(|&r| {
                    (
                        Some(("kappa2_over_kappa1".to_string(), r)),
                        TrajectoryScenario {
                            kappa2: r * k,
                            ..sc
                        },
                    )
                })
                .collect(),
            None => vec![(None, sc)],
        },
        _ => vec![(None, sc)],
    }
}

fn series_path(path: &str, tag: &Option<(String, f64)>) -> String {
    let Some((name, v)) = tag else {
        return path.to_string();
    };
    let p = Path::new(path);
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = p
        .extension()
        .and_then(|s| s.to_str())
        .map_or(String::new(), |e| format!(".{e}"));
    let file = format!("{stem}_{name}_{v}{ext}");
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.join(file).to_string_lossy().into_owned(),
        _ => file,
    }
}

fn grid_pairs(cfg: &ScenarioConfig) -> Result<Vec<(f64, f64)>> {
    let taus = cfg
        .grids
        .kappa_tau
        .clone()
        .ok_or_else(|| invalid("grids.kappa_tau missing"))?;
    let oms = cfg
        .grids
        .omega_over_kappa
        .clone()
        .ok_or_else(|| invalid("grids.omega_over_kappa missing"))?;
    Ok(taus
        .iter()
        .flat_map(|&t| oms.iter().map(move |&o| (t, o)))
        .collect())
}

fn rate_map(cfg: &ScenarioConfig, raw: &str, spec: &OutputSpec) -> Result<Vec<(String, CsvTable)>> {
    let pts = grid_pairs(cfg)?;
    let mut out = Vec::new();
    for (tag, sc) in series(cfg) {
        let k = sc.kappa1;
        let rows = pts
            .par_iter()
            .map(|&(kt, ok)| {
                let r = DetectorParams::new(ok * k, 1.0, cfg.params.sigma).and_then(|p| {
                    if spec.finite_switching {
                        transition_rate_finite_switching(
                            &sc,
                            &p,
                            kt / k,
                            &cfg.regulator,
                            &cfg.quadrature,
                        )
                    } else {
                        transition_rate(&sc, &p, kt / k, &cfg.regulator, &cfg.quadrature)
                    }
                });
                match r {
                    Ok(r) => (vec![kt, ok, r.value / k, r.error_estimate / k], true),
                    Err(_) => (vec![kt, ok, f64::NAN, f64::NAN], false),
                }
            })
            .collect();
        let mut header = common_header(cfg, &sc, raw, OutputKind::RateMap);
        if let Some((name, v)) = &tag {
            header.push(format!("series: {name} = {v}"));
        }
        header.push(if spec.finite_switching {
            format!("switching: gaussian, sigma = {}", cfg.params.sigma)
        } else {
            "switching: long-interaction limit".to_string()
        });
        header.push("rate_over_lambda2 = transition rate / (lambda^2 kappa1), with the 1/N^2 control normalisation".to_string());
        out.push((
            series_path(&spec.path, &tag),
            CsvTable {
                header,
                columns: vec![
                    "kappa_tau".into(),
                    "omega_over_kappa".into(),
                    "rate_over_lambda2".into(),
                    "error_over_lambda2".into(),
                ],
                rows,
            },
        ));
    }
    Ok(out)
}

fn kms_report(
    cfg: &ScenarioConfig,
    raw: &str,
    spec: &OutputSpec,
) -> Result<Vec<(String, CsvTable)>> {
    let pts = grid_pairs(cfg)?;
    let mut out = Vec::new();
    for (tag, sc) in series(cfg) {
        let k = sc.kappa1;
        let rows = pts
            .par_iter()
            .map(|&(kt, ok)| {
                let rate_at = |om: f64| {
                    let p = DetectorParams::new(om, 1.0, cfg.params.sigma)?;
                    transition_rate(&sc, &p, kt / k, &cfg.regulator, &cfg.quadrature)
                };
                match kms_check(rate_at, ok * k, k, spec.tolerance) {
                    Ok(r) => (
                        vec![
                            kt,
                            ok,
                            r.ratio,
                            r.expected,
                            r.deviation,
                            f64::from(u8::from(r.satisfied)),
                        ],
                        true,
                    ),
                    Err(_) => (vec![kt, ok, f64::NAN, f64::NAN, f64::NAN, f64::NAN], false),
                }
            })
            .collect();
        let mut header = common_header(cfg, &sc, raw, OutputKind::KmsReport);
        if let Some((name, v)) = &tag {
            header.push(format!("series: {name} = {v}"));
        }
        header.push(format!(
            "ratio = rate(omega)/rate(-omega); expected = exp(-2 pi omega/kappa1); tolerance = {}",
            spec.tolerance
        ));
        out.push((
            series_path(&spec.path, &tag),
            CsvTable {
                header,
                columns: vec![
                    "kappa_tau".into(),
                    "omega_over_kappa".into(),
                    "ratio".into(),
                    "expected".into(),
                    "deviation".into(),
                    "satisfied".into(),
                ],
                rows,
            },
        ));
    }
    Ok(out)
}

fn visibility_output(cfg: &ScenarioConfig, raw: &str) -> Result<CsvTable> {
    let phases = cfg
        .grids
        .delta_phi
        .clone()
        .ok_or_else(|| invalid("grids.delta_phi missing"))?;
    let ints =
        compute_wightman_integrals(&cfg.scenario, &cfg.params, &cfg.regulator, &cfg.quadrature)?;
    let mut rows = Vec::with_capacity(phases.len());
    for &d in &phases {
        let dm = conditional_density_matrix(&ints, &ControlState::two_branch(d)?, &cfg.params)?;
        rows.push((
            vec![
                d,
                dm.p_ground_unnormalized,
                dm.p_excited_unnormalized,
                dm.norm,
                dm.p_excited_conditional,
            ],
            dm.norm > 0.0,
        ));
    }
    let vis = visibility_scan(&ints, &cfg.params, &phases)?;
    let mut header = common_header(cfg, &cfg.scenario, raw, OutputKind::VisibilityScan);
    header.push(format!(
        "visibility: mean_norm = {:e}, field_amplitude = {:e}",
        vis.mean, vis.amplitude
    ));
    header.push(
        "field_amplitude is the O(lambda^2) oscillation left after removing (1 + cos delta_phi)/2"
            .to_string(),
    );
    header.push("delta_phi = phi_1 - phi_2; Im of the time-ordered integrals is renormalised (branch-independent part removed)".to_string());
    Ok(CsvTable {
        header,
        columns: vec![
            "delta_phi".into(),
            "p_ground".into(),
            "p_excited".into(),
            "norm".into(),
            "p_excited_conditional".into(),
        ],
        rows,
    })
}

/// Every table an output entry produces, with its relative path.
pub fn build_output(
    cfg: &ScenarioConfig,
    raw: &str,
    spec: &OutputSpec,
) -> Result<Vec<(String, CsvTable)>> {
    match spec.kind {
        OutputKind::ProbabilityMap => {
            Ok(vec![(spec.path.clone(), probability_map(cfg, raw, spec)?)])
        }
        OutputKind::RateMap => rate_map(cfg, raw, spec),
        OutputKind::KmsReport => kms_report(cfg, raw, spec),
        OutputKind::VisibilityScan => Ok(vec![(spec.path.clone(), visibility_output(cfg, raw)?)]),
    }
}

/// Writes every output under `out_dir` and returns the paths written.
pub fn run_scenario(cfg: &ScenarioConfig, raw: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut written = Vec::new();
    for spec in &cfg.outputs {
        for (rel, table) in build_output(cfg, raw, spec)? {
            let path = out_dir.join(rel);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)
                    .map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
            }
            fs::write(&path, table.render(Some(stamp)))
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck {
    pub name: String,
    pub value: f64,
    pub reference: f64,
}

impl LimitCheck {
    fn new(name: &str, value: f64, reference: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            reference,
        }
    }

    pub fn relative_difference(&self) -> f64 {
        ((self.value - self.reference) / self.reference).abs()
    }
}

/// Closed-form limits of one family at the given parameters.
pub fn limits_report(
    family: Family,
    params: &DetectorParams,
    kappa: f64,
) -> Result<Vec<LimitCheck>> {
    let loc = p_local(params, kappa)?.probability;
    let b = kappa * params.sigma * params.sigma * params.omega;
    let far = 1e6 / kappa;
    let out = match family {
        Family::SingleAccel => {
            let k0 = 1e-6 * kappa;
            let inertial = params.lambda.powi(2) / (8.0 * PI)
                * (-(params.sigma * params.omega).powi(2)).exp()
                / (params.sigma * params.omega).powi(2);
            vec![
                LimitCheck::new(
                    "p_local(kappa -> 0) = inertial value",
                    p_local(params, k0)?.probability,
                    inertial,
                ),
                LimitCheck::new(
                    "planck_rate(kappa, 0) = kappa/(4 pi^2)",
                    planck_rate(kappa, 0.0),
                    kappa / (4.0 * PI * PI),
                ),
            ]
        }
        Family::Parallel => vec![
            LimitCheck::new(
                "p_parallel(L = 0) = p_local",
                p_parallel(params, kappa, 0.0)?.probability,
                loc,
            ),
            LimitCheck::new(
                "p_parallel(L -> inf) = p_local/2",
                p_parallel(params, kappa, far)?.probability,
                loc / 2.0,
            ),
        ],
        Family::AntiParallel => vec![
            LimitCheck::new(
                "p_antiparallel(L -> +inf) = p_local/2",
                p_antiparallel(params, kappa, far)?.probability,
                loc / 2.0,
            ),
            LimitCheck::new(
                "p_antiparallel(L -> -inf) = p_local/2",
                p_antiparallel(params, kappa, -far)?.probability,
                loc / 2.0,
            ),
            LimitCheck::new(
                "p_antiparallel(L = 0) = p_local/2 + zeta/(2(1 - cos beta))",
                p_antiparallel(params, kappa, 0.0)?.probability,
                loc / 2.0 + zeta(params, kappa) / (2.0 * (1.0 - b.cos())),
            ),
        ],
        Family::Differing => {
            let k2 = 0.7 * kappa;
            let inertial = (params.lambda / (2.0 * params.sigma * params.omega)).powi(2)
                * (-(params.sigma * params.omega).powi(2)).exp()
                / (8.0 * PI);
            vec![
                LimitCheck::new(
                    "p_differing(kappa1 = kappa2) = p_local",
                    p_differing(params, kappa, kappa)?.probability,
                    loc,
                ),
                LimitCheck::new(
                    "p_differing(kappa1 -> 0, kappa2) = p_local(kappa2)/4 + inertial term",
                    p_differing(params, 1e-6 * kappa, k2)?.probability,
                    p_local_formula(params, k2) / 4.0 + inertial,
                ),
            ]
        }
        Family::ThermalInertialPair => {
            return Err(invalid(
                "the thermal pair has no closed-form probability; see `udw oracle planck`",
            ));
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;

    #[test]
    fn series_paths() {
        assert_eq!(
            series_path("out/rate.csv", &Some(("L_kappa".into(), 0.2))),
            "out/rate_L_kappa_0.2.csv"
        );
        assert_eq!(series_path("rate.csv", &None), "rate.csv");
    }

    #[test]
    fn limits_hold_for_every_family() {
        let p = DetectorParams::new(1.0, 0.01, 0.1).unwrap();
        for f in [
            Family::SingleAccel,
            Family::Parallel,
            Family::AntiParallel,
            Family::Differing,
        ] {
            for c in limits_report(f, &p, 1.0).unwrap() {
                assert!(
                    c.relative_difference() < 1e-5,
                    "{}: {} vs {}",
                    c.name,
                    c.value,
                    c.reference
                );
            }
        }
        assert!(limits_report(Family::ThermalInertialPair, &p, 1.0).is_err());
    }

    #[test]
    fn closed_form_map_marks_invalid_points() {
        let raw = r#"
[scenario]
family = "parallel"
[params]
omega = 5.6
sigma = 0.05
[grids]
L_over_sigma = [0.0, 10.0]
kappa_sigma2_omega = [0.014, 4.0]
[[outputs]]
kind = "probability_map"
path = "p.csv"
backend = "closed_form"
"#;
        let cfg = validate_config(raw).unwrap();
        let t = &build_output(&cfg, raw, &cfg.outputs[0]).unwrap()[0].1;
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows[0].1 && t.rows[0].0[2] > 0.0);
        assert!(!t.rows[1].1 && t.rows[1].0[2].is_nan());
        let text = t.render(Some(0));
        assert!(text.lines().next().unwrap().starts_with('#'));
        assert!(text.contains("L_over_sigma,kappa_sigma2_omega,P_over_lambda2,valid"));
    }
}
