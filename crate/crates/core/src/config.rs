//! TOML scenario files.
//!
//! ```toml
//! [scenario]
//! family = "parallel"      # single | parallel | antiparallel | differing | thermal_pair
//! kappa1 = 1.0
//! kappa2 = 0.5             # differing only
//! L = 1.0
//!
//! [params]
//! omega = 5.6
//! lambda = 0.01
//! sigma = 0.05
//!
//! [grids]
//! omega_over_kappa = [-4.0, -2.0, 2.0, 4.0]
//! kappa_tau = [-3.0, 0.0, 3.0]
//! L_over_sigma = [0.0, 10.0, 20.0]
//! kappa_sigma2_omega = [0.01, 0.1]
//! delta_phi = [0.0, 3.14159]
//! L_kappa = [0.2, 0.5, 0.9]           # rate_map / kms_report series
//! kappa2_over_kappa1 = [0.5, 0.7]     # differing series
//!
//! [quadrature]
//! rel_tol = 1e-9
//! contour = "auto"
//!
//! [regulator]
//! epsilons = [1e-2, 5e-3, 2.5e-3]
//! extrapolation = "richardson_linear"
//!
//! [[outputs]]
//! kind = "probability_map"
//! path = "probability.csv"
//! backend = "quadrature"              # or "closed_form"
//! ```
//!
//! Problems are collected rather than reported one at a time; each carries
//! the dotted path of the offending field.

use std::fmt;

use toml::{Table, Value};

use crate::kinematics::{Family, TrajectoryScenario};
use crate::response_closed::DetectorParams;
use crate::response_numeric::{Contour, Extrapolation, QuadratureConfig, RegulatorSchedule};
use crate::validity::check_beta_bound;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    ProbabilityMap,
    RateMap,
    KmsReport,
    VisibilityScan,
}

impl OutputKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "probability_map" => Some(Self::ProbabilityMap),
            "rate_map" => Some(Self::RateMap),
            "kms_report" => Some(Self::KmsReport),
            "visibility_scan" => Some(Self::VisibilityScan),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ProbabilityMap => "probability_map",
            Self::RateMap => "rate_map",
            Self::KmsReport => "kms_report",
            Self::VisibilityScan => "visibility_scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub kind: OutputKind,
    pub path: String,
    pub backend: Backend,
    /// Rate maps only: Gaussian switching of width σ instead of the
    /// long-interaction limit.
    pub finite_switching: bool,
    /// KMS reports only.
    pub tolerance: f64,
}

/// Named grids. An absent grid is `None`; a present grid is never empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grids {
    pub omega_over_kappa: Option<Vec<f64>>,
    pub kappa_tau: Option<Vec<f64>>,
    pub l_over_sigma: Option<Vec<f64>>,
    pub kappa_sigma2_omega: Option<Vec<f64>>,
    pub delta_phi: Option<Vec<f64>>,
    pub l_kappa: Option<Vec<f64>>,
    pub kappa2_over_kappa1: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: TrajectoryScenario,
    pub params: DetectorParams,
    pub grids: Grids,
    pub quadrature: QuadratureConfig,
    pub regulator: RegulatorSchedule,
    pub outputs: Vec<OutputSpec>,
    pub warnings: Vec<String>,
}

struct Reader {
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, path: impl Into<String>, reason: impl Into<String>) {
        self.issues.push(ConfigIssue {
            path: path.into(),
            reason: reason.into(),
        });
    }

    fn table<'a>(&mut self, root: &'a Table, key: &str, required: bool) -> Option<&'a Table> {
        match root.get(key) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.issue(key, "expected a table");
                None
            }
            None if required => {
                self.issue(key, "missing section");
                None
            }
            None => None,
        }
    }

    fn unknown_keys(&mut self, prefix: &str, t: &Table, known: &[&str]) {
        for k in t.keys() {
            if !known.contains(&k.as_str()) {
                self.issue(format!("{prefix}.{k}"), "unknown key");
            }
        }
    }

    fn number(&mut self, prefix: &str, t: &Table, key: &str) -> Option<f64> {
        let path = format!("{prefix}.{key}");
        match t.get(key) {
            None => None,
            Some(Value::Float(x)) if x.is_finite() => Some(*x),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(Value::Float(_)) => {
                self.issue(path, "not finite");
                None
            }
            Some(_) => {
                self.issue(path, "expected a number");
                None
            }
        }
    }

    fn string<'a>(&mut self, prefix: &str, t: &'a Table, key: &str) -> Option<&'a str> {
        match t.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.issue(format!("{prefix}.{key}"), "expected a string");
                None
            }
        }
    }

    fn list(&mut self, prefix: &str, t: &Table, key: &str) -> Option<Vec<f64>> {
        let path = format!("{prefix}.{key}");
        let arr = match t.get(key) {
            None => return None,
            Some(Value::Array(a)) => a,
            Some(_) => {
                self.issue(path, "expected an array of numbers");
                return None;
            }
        };
        if arr.is_empty() {
            self.issue(path, "empty");
            return None;
        }
        let mut out = Vec::with_capacity(arr.len());
        for (n, v) in arr.iter().enumerate() {
            match v {
                Value::Float(x) if x.is_finite() => out.push(*x),
                Value::Integer(i) => out.push(*i as f64),
                Value::Float(_) => self.issue(format!("{path}[{n}]"), "not finite"),
                _ => self.issue(format!("{path}[{n}]"), "expected a number"),
            }
        }
        (out.len() == arr.len()).then_some(out)
    }
}

/// Parses and checks a scenario file, returning every problem found.
pub fn validate_config(raw: &str) -> std::result::Result<ScenarioConfig, Vec<ConfigIssue>> {
    let root: Table = match raw.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![ConfigIssue {
                path: "<toml>".into(),
                reason: e.message().to_string(),
            }])
        }
    };
    let mut r = Reader { issues: Vec::new() };
    r.unknown_keys(
        "",
        &root,
        &[
            "scenario",
            "params",
            "grids",
            "quadrature",
            "regulator",
            "outputs",
        ],
    );
    for issue in &mut r.issues {
        issue.path = issue.path.trim_start_matches('.').to_string();
    }

    let scenario = read_scenario(&mut r, &root);
    let params = read_params(&mut r, &root);
    let grids = read_grids(&mut r, &root);
    let quadrature = read_quadrature(&mut r, &root);
    let regulator = read_regulator(&mut r, &root);
    let outputs = read_outputs(&mut r, &root);

    let mut warnings = Vec::new();
    if let (Some(sc), Some(p)) = (scenario, params) {
        warnings.extend(p.warnings());
        check_outputs(&mut r, &mut warnings, &sc, &p, &grids, &outputs);
    }
    match (scenario, params, quadrature, regulator) {
        (Some(scenario), Some(params), Some(quadrature), Some(regulator))
            if r.issues.is_empty() =>
        {
            Ok(ScenarioConfig {
                scenario,
                params,
                grids,
                quadrature,
                regulator,
                outputs,
                warnings,
            })
        }
        _ => Err(r.issues),
    }
}

fn read_scenario(r: &mut Reader, root: &Table) -> Option<TrajectoryScenario> {
    let t = r.table(root, "scenario", true)?;
    r.unknown_keys("scenario", t, &["family", "kappa1", "kappa", "kappa2", "L"]);
    let family = match r.string("scenario", t, "family") {
        Some(s) => match Family::parse(s) {
            Some(f) => Some(f),
            None => {
                r.issue("scenario.family", format!("unknown family {s:?}"));
                None
            }
        },
        None => {
            r.issue("scenario.family", "missing");
            None
        }
    };
    let kappa1 = r
        .number("scenario", t, "kappa1")
        .or_else(|| r.number("scenario", t, "kappa"))
        .unwrap_or(1.0);
    let kappa2 = r.number("scenario", t, "kappa2");
    let l = r.number("scenario", t, "L").unwrap_or(0.0);
    let family = family?;
    if family == Family::Differing && kappa2.is_none() {
        r.issue("scenario.kappa2", "required for the differing family");
    }
    let sc = TrajectoryScenario {
        family,
        kappa1,
        kappa2: kappa2.unwrap_or(kappa1),
        l,
    };
    if let Err(e) = sc.validate() {
        r.issue("scenario", e.to_string());
        return None;
    }
    Some(sc)
}

fn read_params(r: &mut Reader, root: &Table) -> Option<DetectorParams> {
    let t = r.table(root, "params", true)?;
    r.unknown_keys("params", t, &["omega", "lambda", "sigma"]);
    let omega = r.number("params", t, "omega").unwrap_or(1.0);
    let lambda = r.number("params", t, "lambda").unwrap_or(0.01);
    let sigma = r.number("params", t, "sigma").unwrap_or(1.0);
    match DetectorParams::new(omega, lambda, sigma) {
        Ok(p) => Some(p),
        Err(e) => {
            r.issue("params", e.to_string());
            None
        }
    }
}

fn read_grids(r: &mut Reader, root: &Table) -> Grids {
    let Some(t) = r.table(root, "grids", false) else {
        return Grids::default();
    };
    r.unknown_keys(
        "grids",
        t,
        &[
            "omega_over_kappa",
            "kappa_tau",
            "L_over_sigma",
            "kappa_sigma2_omega",
            "delta_phi",
            "L_kappa",
            "kappa2_over_kappa1",
        ],
    );
    Grids {
        omega_over_kappa: r.list("grids", t, "omega_over_kappa"),
        kappa_tau: r.list("grids", t, "kappa_tau"),
        l_over_sigma: r.list("grids", t, "L_over_sigma"),
        kappa_sigma2_omega: r.list("grids", t, "kappa_sigma2_omega"),
        delta_phi: r.list("grids", t, "delta_phi"),
        l_kappa: r.list("grids", t, "L_kappa"),
        kappa2_over_kappa1: r.list("grids", t, "kappa2_over_kappa1"),
    }
}

fn read_quadrature(r: &mut Reader, root: &Table) -> Option<QuadratureConfig> {
    let mut q = QuadratureConfig::default();
    let Some(t) = r.table(root, "quadrature", false) else {
        return Some(q);
    };
    r.unknown_keys(
        "quadrature",
        t,
        &[
            "s_max",
            "abs_tol",
            "rel_tol",
            "max_subdivisions",
            "oscillation_resolution",
            "contour",
        ],
    );
    q.s_max = r.number("quadrature", t, "s_max").or(q.s_max);
    q.abs_tol = r.number("quadrature", t, "abs_tol").unwrap_or(q.abs_tol);
    q.rel_tol = r.number("quadrature", t, "rel_tol").unwrap_or(q.rel_tol);
    q.oscillation_resolution = r
        .number("quadrature", t, "oscillation_resolution")
        .unwrap_or(q.oscillation_resolution);
    if let Some(m) = r.number("quadrature", t, "max_subdivisions") {
        if m >= 1.0 && m.fract() == 0.0 {
            q.max_subdivisions = m as usize;
        } else {
            r.issue("quadrature.max_subdivisions", "expected a positive integer");
        }
    }
    if let Some(c) = r.string("quadrature", t, "contour") {
        match Contour::parse(c) {
            Some(c) => q.contour = c,
            None => r.issue(
                "quadrature.contour",
                format!("unknown contour {c:?} (auto, real_axis, shifted)"),
            ),
        }
    }
    match q.validate() {
        Ok(()) => Some(q),
        Err(e) => {
            r.issue("quadrature", e.to_string());
            None
        }
    }
}

fn read_regulator(r: &mut Reader, root: &Table) -> Option<RegulatorSchedule> {
    let mut s = RegulatorSchedule::default();
    let Some(t) = r.table(root, "regulator", false) else {
        return Some(s);
    };
    r.unknown_keys("regulator", t, &["epsilons", "extrapolation"]);
    if let Some(e) = r.list("regulator", t, "epsilons") {
        s.epsilons = e;
    } else if t.contains_key("epsilons") {
        return None;
    }
    if let Some(x) = r.string("regulator", t, "extrapolation") {
        match Extrapolation::parse(x) {
            Some(x) => s.extrapolation = x,
            None => r.issue("regulator.extrapolation", format!("unknown mode {x:?}")),
        }
    }
    match s.validate() {
        Ok(()) => Some(s),
        Err(e) => {
            r.issue("regulator", e.to_string());
            None
        }
    }
}

fn read_outputs(r: &mut Reader, root: &Table) -> Vec<OutputSpec> {
    let arr = match root.get("outputs") {
        None => {
            r.issue("outputs", "missing; add at least one [[outputs]] entry");
            return Vec::new();
        }
        Some(Value::Array(a)) => a,
        Some(_) => {
            r.issue("outputs", "expected an array of tables ([[outputs]])");
            return Vec::new();
        }
    };
    if arr.is_empty() {
        r.issue("outputs", "empty");
    }
    let mut out = Vec::new();
    for (n, v) in arr.iter().enumerate() {
        let prefix = format!("outputs[{n}]");
        let Value::Table(t) = v else {
            r.issue(prefix, "expected a table");
            continue;
        };
        r.unknown_keys(
            &prefix,
            t,
            &["kind", "path", "backend", "finite_switching", "tolerance"],
        );
        let kind = match r.string(&prefix, t, "kind") {
            Some(k) => OutputKind::parse(k).or_else(|| {
                r.issue(format!("{prefix}.kind"), format!("unknown kind {k:?}"));
                None
            }),
            None => {
                r.issue(format!("{prefix}.kind"), "missing");
                None
            }
        };
        let path = r.string(&prefix, t, "path").map(str::to_string);
        if path.as_deref().is_none_or(str::is_empty) {
            r.issue(format!("{prefix}.path"), "missing");
        }
        let backend = match r.string(&prefix, t, "backend").unwrap_or("quadrature") {
            "quadrature" => Backend::Quadrature,
            "closed_form" => Backend::ClosedForm,
            b => {
                r.issue(
                    format!("{prefix}.backend"),
                    format!("unknown backend {b:?}"),
                );
                Backend::Quadrature
            }
        };
        let finite_switching = match t.get("finite_switching") {
            None => false,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                r.issue(format!("{prefix}.finite_switching"), "expected a boolean");
                false
            }
        };
        let tolerance = r.number(&prefix, t, "tolerance").unwrap_or(0.01);
        if !(tolerance > 0.0) {
            r.issue(format!("{prefix}.tolerance"), "must be > 0");
        }
        if let (Some(kind), Some(path)) = (kind, path) {
            out.push(OutputSpec {
                kind,
                path,
                backend,
                finite_switching,
                tolerance,
            });
        }
    }
    out
}

/// σ at which κ₁σ²Ω equals `b` with Ωσ held at its configured value.
pub fn map_sigma(sc: &TrajectoryScenario, p: &DetectorParams, b: f64) -> f64 {
    b / (sc.kappa1 * p.omega * p.sigma)
}

fn require(r: &mut Reader, grid: &Option<Vec<f64>>, name: &str, output: &str) {
    if grid.is_none() {
        r.issue(format!("grids.{name}"), format!("required by {output}"));
    }
}

fn check_outputs(
    r: &mut Reader,
    warnings: &mut Vec<String>,
    sc: &TrajectoryScenario,
    p: &DetectorParams,
    g: &Grids,
    outputs: &[OutputSpec],
) {
    let has_l = matches!(
        sc.family,
        Family::Parallel | Family::AntiParallel | Family::ThermalInertialPair
    );
    for (n, o) in outputs.iter().enumerate() {
        let label = format!("outputs[{n}] ({})", o.kind.name());
        if o.backend == Backend::ClosedForm && o.kind != OutputKind::ProbabilityMap {
            r.issue(
                format!("outputs[{n}].backend"),
                "closed_form is only available for probability_map",
            );
        }
        match o.kind {
            OutputKind::ProbabilityMap => {
                require(r, &g.kappa_sigma2_omega, "kappa_sigma2_omega", &label);
                if has_l {
                    require(r, &g.l_over_sigma, "L_over_sigma", &label);
                }
                if !(p.omega > 0.0) && o.backend == Backend::ClosedForm {
                    r.issue("params.omega", "closed forms need omega > 0");
                }
                if o.backend == Backend::ClosedForm {
                    if sc.family == Family::ThermalInertialPair {
                        r.issue(
                            format!("outputs[{n}].backend"),
                            "no closed form for the thermal pair",
                        );
                    }
                    if let Some(b) = &g.kappa_sigma2_omega {
                        for &b in b {
                            let sigma = map_sigma(sc, p, b);
                            let probe = DetectorParams {
                                omega: p.omega * p.sigma / sigma,
                                sigma,
                                ..*p
                            };
                            let rep = check_beta_bound(&probe, sc.kappa1);
                            if !rep.ok {
                                warnings.push(format!(
                                    "{label}: beta = {b} violates the closed-form bound ({rep}); those points will be NaN, use backend = \"quadrature\""
                                ));
                            }
                        }
                    }
                }
                if p.omega == 0.0 {
                    r.issue(
                        "params.omega",
                        "probability_map holds omega*sigma fixed and needs omega != 0",
                    );
                }
            }
            OutputKind::RateMap | OutputKind::KmsReport => {
                require(r, &g.kappa_tau, "kappa_tau", &label);
                require(r, &g.omega_over_kappa, "omega_over_kappa", &label);
                if o.kind == OutputKind::KmsReport {
                    if let Some(om) = &g.omega_over_kappa {
                        if om.contains(&0.0) {
                            r.issue("grids.omega_over_kappa", "kms_report needs nonzero gaps");
                        }
                    }
                }
            }
            OutputKind::VisibilityScan => {
                require(r, &g.delta_phi, "delta_phi", &label);
                if sc.branch_count() != 2 {
                    r.issue(
                        "scenario.family",
                        format!("{label} needs a two-branch family"),
                    );
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[scenario]
family = "parallel"
L = 1.0

[params]
omega = 5.6
sigma = 0.05

[grids]
kappa_sigma2_omega = [0.014]
L_over_sigma = [0.0, 20.0]

[[outputs]]
kind = "probability_map"
path = "p.csv"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = validate_config(MINIMAL).unwrap();
        assert_eq!(c.scenario.kappa1, 1.0);
        assert_eq!(c.params.lambda, 0.01);
        assert_eq!(c.regulator, RegulatorSchedule::default());
        assert_eq!(c.quadrature, QuadratureConfig::default());
        assert_eq!(c.outputs[0].backend, Backend::Quadrature);
    }

    #[test]
    fn empty_grid_is_reported_with_path() {
        let raw = MINIMAL.replace("[grids]", "[grids]\nomega_over_kappa = []");
        let errs = validate_config(&raw).unwrap_err();
        assert!(
            errs.iter()
                .any(|e| e.to_string() == "grids.omega_over_kappa: empty"),
            "{errs:?}"
        );
    }

    #[test]
    fn errors_are_aggregated() {
        let raw = MINIMAL
            .replace("family = \"parallel\"", "family = \"sideways\"")
            .replace("sigma = 0.05", "sigma = -1.0\nbogus = 1");
        let errs = validate_config(&raw).unwrap_err();
        let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
        assert!(paths.contains(&"scenario.family"), "{paths:?}");
        assert!(paths.contains(&"params.bogus"), "{paths:?}");
        assert!(paths.contains(&"params"), "{paths:?}");
    }

    #[test]
    fn closed_form_beyond_bound_warns() {
        let raw = MINIMAL.replace("[0.014]", "[4.0]").replace(
            "path = \"p.csv\"",
            "path = \"p.csv\"\nbackend = \"closed_form\"",
        );
        let c = validate_config(&raw).unwrap();
        assert!(
            c.warnings.iter().any(|w| w.contains("quadrature")),
            "{:?}",
            c.warnings
        );
    }
}
