//! Numerical excitation probabilities and transition rates.
//!
//! Rates are semi-infinite oscillatory integrals on the real axis, computed
//! at each ε of a [`RegulatorSchedule`] and extrapolated to ε → 0.
//!
//! Probabilities use one of two routes. On the real axis they follow the
//! same ε ladder. For Ω > 0 the s-contour can instead be moved down by
//! δ = 2σ²Ω: every correlator is analytic for −2π/κ_max < Im s < 0 at real
//! p, so nothing is crossed while β_max < π and the integrand is smooth at
//! ε = 0. That route is exact, needs no extrapolation, and turns the
//! e^{−σ²Ω²} cancellation of the oscillatory form into an explicit factor.
//!
//! Normalisation: rates carry λ²/N² and probabilities the same prefactor;
//! N is the branch count of the scenario.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::correlators::{local_c, pair_c, pair_interval};
use crate::error::{invalid, Error, Result};
use crate::kinematics::{bisect, Family, TrajectoryScenario};
use crate::quadrature::{integrate, AdaptiveOptions, Estimate};
use crate::response_closed::DetectorParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Gaussian windows are cut at this many σ (e^{−36} for e^{−x²/4σ²}).
pub const WINDOW_SIGMAS: f64 = 12.0;

/// Fraction of the analytic strip 2π/κ used when the full shift 2σ²Ω does
/// not fit.
const STRIP_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    RichardsonLinear,
    RichardsonQuadratic,
    None,
}

impl Extrapolation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "richardson_linear" | "linear" => Some(Self::RichardsonLinear),
            "richardson_quadratic" | "quadratic" => Some(Self::RichardsonQuadratic),
            "none" => Some(Self::None),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RichardsonLinear => "richardson_linear",
            Self::RichardsonQuadratic => "richardson_quadratic",
            Self::None => "none",
        }
    }
}

/// ε ladder, in units of the regulator scale of each operation.
///
/// Rates use 1/κ_max as the scale; probabilities use min(σ, 1/κ_max).
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorSchedule {
    pub epsilons: Vec<f64>,
    pub extrapolation: Extrapolation,
}

impl Default for RegulatorSchedule {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2, 5e-3, 2.5e-3],
            extrapolation: Extrapolation::RichardsonLinear,
        }
    }
}

impl RegulatorSchedule {
    pub fn new(epsilons: Vec<f64>, extrapolation: Extrapolation) -> Result<Self> {
        let s = Self {
            epsilons,
            extrapolation,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(invalid("regulator schedule is empty"));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(invalid("regulator epsilons must be finite and > 0"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("regulator epsilons must be strictly decreasing"));
        }
        let need = match self.extrapolation {
            Extrapolation::None => 1,
            Extrapolation::RichardsonLinear => 2,
            Extrapolation::RichardsonQuadratic => 3,
        };
        if self.epsilons.len() < need {
            return Err(invalid(format!(
                "{} needs at least {need} epsilons",
                self.extrapolation.name()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contour {
    /// Shifted for Ω > 0, real axis otherwise.
    Auto,
    RealAxis,
    Shifted,
}

impl Contour {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Self::Auto),
            "real_axis" | "real" => Some(Self::RealAxis),
            "shifted" => Some(Self::Shifted),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::RealAxis => "real_axis",
            Self::Shifted => "shifted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Truncation of semi-infinite integrals; `None` means 40/κ_min.
    pub s_max: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Minimum panels per period 2π/|Ω|.
    pub oscillation_resolution: f64,
    pub contour: Contour,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            s_max: None,
            abs_tol: 1e-13,
            rel_tol: 1e-9,
            max_subdivisions: 20_000,
            oscillation_resolution: 8.0,
            contour: Contour::Auto,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.s_max {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid("s_max must be finite and > 0"));
            }
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(invalid("tolerances must be > 0"));
        }
        if !(self.oscillation_resolution >= 8.0) {
            return Err(invalid("oscillation_resolution must be >= 8"));
        }
        if self.max_subdivisions == 0 {
            return Err(invalid("max_subdivisions must be > 0"));
        }
        Ok(())
    }

    fn options(&self, omega: f64) -> AdaptiveOptions {
        let width = if omega != 0.0 {
            2.0 * PI / omega.abs() / self.oscillation_resolution
        } else {
            f64::INFINITY
        };
        AdaptiveOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            max_panel_width: width,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub value: f64,
    pub epsilon_estimates: Vec<(f64, f64)>,
    pub error_estimate: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub limit: f64,
    pub error_estimate: f64,
    pub non_monotone: bool,
}

fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = points.iter().map(|x| x.1).collect();
    let n = p.len();
    for m in 1..n {
        for k in 0..n - m {
            let (xk, xkm) = (points[k].0, points[k + m].0);
            p[k] = (xk * p[k + 1] - xkm * p[k]) / (xk - xkm);
        }
    }
    p[0]
}

/// Polynomial extrapolation of `(ε, value)` pairs to ε = 0.
///
/// The error estimate is the gap between the extrapolant of the last points
/// and that of the window one step earlier (or one order lower when there is
/// no earlier window).
pub fn epsilon_extrapolate(estimates: &[(f64, f64)], mode: Extrapolation) -> Result<Extrapolated> {
    let min_points = if mode == Extrapolation::None { 1 } else { 2 };
    if estimates.len() < min_points {
        return Err(invalid("extrapolation needs at least 2 points"));
    }
    if estimates.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(invalid("epsilons must be strictly decreasing"));
    }
    let n = estimates.len();
    let non_monotone = n >= 3 && {
        let d1 = estimates[n - 2].1 - estimates[n - 3].1;
        let d2 = estimates[n - 1].1 - estimates[n - 2].1;
        d1 * d2 < 0.0
    };
    let order = match mode {
        Extrapolation::None => 0,
        Extrapolation::RichardsonLinear => 1,
        Extrapolation::RichardsonQuadratic => 2.min(n - 1),
    };
    let limit = neville_at_zero(&estimates[n - 1 - order..]);
    let error_estimate = if n == 1 {
        0.0
    } else if n > order + 1 {
        (limit - neville_at_zero(&estimates[n - 2 - order..n - 1])).abs()
    } else {
        (limit - neville_at_zero(&estimates[n - order..])).abs()
    };
    Ok(Extrapolated {
        limit,
        error_estimate,
        non_monotone,
    })
}

/// Single-detector thermal rate Ω / (2π (e^{2πΩ/κ} − 1)).
pub fn planck_rate(kappa: f64, omega: f64) -> f64 {
    let x = 2.0 * PI * omega / kappa;
    if x.abs() < 2.0 * PI * 1e-6 {
        kappa / (4.0 * PI * PI) * (1.0 - 0.5 * x + x * x / 12.0)
    } else {
        omega / (2.0 * PI * x.exp_m1())
    }
}

fn prefactor(sc: &TrajectoryScenario, params: &DetectorParams) -> f64 {
    let n = sc.branch_count() as f64;
    params.lambda * params.lambda / (n * n)
}

fn pairs(sc: &TrajectoryScenario) -> Vec<(usize, usize)> {
    let n = sc.branch_count();
    (1..=n).flat_map(|i| (1..=n).map(move |j| (i, j))).collect()
}

/// Sign changes of `f` on `[a, b]`, refined by bisection.
fn scan_roots(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    if !(b > a) {
        return out;
    }
    let h = (b - a) / n as f64;
    let mut x0 = a;
    let mut f0 = f(a);
    for k in 1..=n {
        let x1 = a + h * k as f64;
        let f1 = f(x1);
        if f0.is_finite() && f1.is_finite() && f0 != 0.0 && f0.signum() != f1.signum() {
            out.push(bisect(&f, x0, x1, 1e-13 * (1.0 + x1.abs())));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Geometric breakpoints around `x` at ε·2^k, clipped to `[a, b]`.
fn cluster(x: f64, eps: f64, a: f64, b: f64, out: &mut Vec<f64>) {
    out.push(x);
    let mut d = 0.5 * eps;
    for _ in 0..14 {
        for y in [x - d, x + d] {
            if y > a && y < b {
                out.push(y);
            }
        }
        d *= 2.0;
    }
}

fn rate_smax(sc: &TrajectoryScenario, quad: &QuadratureConfig, i: usize, j: usize) -> f64 {
    let base = quad.s_max.unwrap_or(40.0 / sc.kappa_min());
    if i == j {
        return quad.s_max.unwrap_or(40.0 / sc.kappa(i));
    }
    // Cross terms decay at the slower rate; cap the exponent well below
    // overflow.
    base.min(600.0 / sc.kappa_max())
}

/// Switching window of the finite-time rate.
#[derive(Clone, Copy)]
struct Window {
    sigma: f64,
}

impl Window {
    fn eta(&self, t: f64) -> f64 {
        (-t * t / (2.0 * self.sigma * self.sigma)).exp()
    }
}

fn rate_core(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    tau: f64,
    sched: &RegulatorSchedule,
    quad: &QuadratureConfig,
    window: Option<Window>,
) -> Result<RateResult> {
    sc.validate()?;
    params.validate()?;
    sched.validate()?;
    quad.validate()?;
    if !tau.is_finite() {
        return Err(invalid("tau must be finite"));
    }
    let pref = prefactor(sc, params);
    let outer = window.map_or(1.0, |w| w.eta(tau));
    if pref == 0.0 || outer == 0.0 {
        return Ok(RateResult {
            value: 0.0,
            epsilon_estimates: sched.epsilons.iter().map(|e| (*e, 0.0)).collect(),
            error_estimate: 0.0,
            warnings: Vec::new(),
        });
    }
    let scale = 1.0 / sc.kappa_max();
    let omega = params.omega;
    let opts = quad.options(omega);
    let mut estimates = Vec::with_capacity(sched.epsilons.len());
    let mut quad_err: f64 = 0.0;
    for &eps_unit in &sched.epsilons {
        let eps = eps_unit * scale;
        let mut total = 0.0;
        for (i, j) in pairs(sc) {
            let mut lo = 0.0;
            let mut hi = rate_smax(sc, quad, i, j);
            if let Some(w) = window {
                lo = (tau - WINDOW_SIGMAS * w.sigma).max(0.0);
                hi = hi.min(tau + WINDOW_SIGMAS * w.sigma);
            }
            if hi <= lo {
                continue;
            }
            let mut points = Vec::new();
            if lo == 0.0 {
                cluster(0.0, eps, lo, hi, &mut points);
            }
            if i != j {
                let roots = scan_roots(|s| pair_interval(sc, i, j, tau, tau - s), lo, hi, 4000);
                for r in roots {
                    cluster(r, eps, lo, hi, &mut points);
                }
            }
            let f = |s: f64| -> f64 {
                let w = pair_c(
                    sc,
                    i,
                    j,
                    Complex64::new(tau, 0.0),
                    Complex64::new(tau - s, 0.0),
                    eps,
                );
                let v = (Complex64::new(0.0, -omega * s).exp() * w).re;
                match window {
                    Some(win) => v * win.eta(tau - s),
                    None => v,
                }
            };
            let est = integrate(f, lo, hi, &points, &opts)?;
            total += est.value;
            quad_err += est.error;
        }
        estimates.push((eps, 2.0 * outer * pref * total));
    }
    let ex = epsilon_extrapolate(&estimates, sched.extrapolation)?;
    let mut warnings = Vec::new();
    if ex.non_monotone {
        warnings.push("non-monotone convergence across the last three epsilons".to_string());
    }
    let error_estimate =
        ex.error_estimate + 2.0 * outer * pref * quad_err / sched.epsilons.len() as f64;
    Ok(RateResult {
        value: ex.limit,
        epsilon_estimates: estimates,
        error_estimate,
        warnings,
    })
}

/// Instantaneous transition rate in the long-interaction limit,
/// `(λ²/N²) · 2 Re Σᵢⱼ ∫₀^{s_max} e^{−iΩs} W^{ij}(τ, τ − s) ds`.
///
/// For [`Family::Differing`], `tau` is the shared proper time of both
/// branches; there is no global time in which the rate could be defined.
pub fn transition_rate(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    tau: f64,
    sched: &RegulatorSchedule,
    quad: &QuadratureConfig,
) -> Result<RateResult> {
    rate_core(sc, params, tau, sched, quad, None)
}

/// Rate for Gaussian switching η(τ) = e^{−τ²/2σ²}:
/// `(λ²/N²) · 2η(τ) Re Σᵢⱼ ∫₀ e^{−iΩs} η(τ − s) W^{ij}(τ, τ − s) ds`.
pub fn transition_rate_finite_switching(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    tau: f64,
    sched: &RegulatorSchedule,
    quad: &QuadratureConfig,
) -> Result<RateResult> {
    rate_core(
        sc,
        params,
        tau,
        sched,
        quad,
        Some(Window {
            sigma: params.sigma,
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmsReport {
    pub ratio: f64,
    pub expected: f64,
    pub deviation: f64,
    pub satisfied: bool,
}

/// Detailed balance test `Ṗ(Ω)/Ṗ(−Ω) = e^{−2πΩ/κ}` at relative tolerance `tol`.
pub fn kms_check(
    rate_at: impl Fn(f64) -> Result<RateResult>,
    omega: f64,
    kappa: f64,
    tol: f64,
) -> Result<KmsReport> {
    let up = rate_at(omega)?;
    let down = rate_at(-omega)?;
    if down.value.abs() <= down.error_estimate || down.value == 0.0 {
        return Err(Error::IndeterminateRatio(format!(
            "rate at -omega = {:e} is not resolved (error {:e})",
            down.value, down.error_estimate
        )));
    }
    let ratio = up.value / down.value;
    let expected = (-2.0 * PI * omega / kappa).exp();
    let deviation = (ratio / expected - 1.0).abs();
    Ok(KmsReport {
        ratio,
        expected,
        deviation,
        satisfied: deviation <= tol,
    })
}

/// How a probability integral was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourUsed {
    RealAxis,
    /// Contour `s = u − iδ` at ε = 0.
    Shifted {
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityResult {
    pub value: f64,
    pub error_estimate: f64,
    pub contour: ContourUsed,
    /// Per-ε values; empty on the shifted contour.
    pub epsilon_estimates: Vec<(f64, f64)>,
}

pub(crate) fn resolve_contour(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    quad: &QuadratureConfig,
) -> Result<ContourUsed> {
    let strip = 2.0 * PI / sc.kappa_max();
    let full = 2.0 * params.sigma * params.sigma * params.omega;
    let shifted = || ContourUsed::Shifted {
        delta: full.min(STRIP_FRACTION * strip),
    };
    match quad.contour {
        Contour::RealAxis => Ok(ContourUsed::RealAxis),
        Contour::Auto if params.omega > 0.0 => Ok(shifted()),
        Contour::Auto => Ok(ContourUsed::RealAxis),
        Contour::Shifted if params.omega > 0.0 => Ok(shifted()),
        Contour::Shifted => Err(invalid("the shifted contour needs omega > 0")),
    }
}

/// Weight `e^{−s²/4σ²} e^{−iΩs}` at `s = u − iδ` with `e^{δ²/4σ² − Ωδ}` removed.
fn shifted_weight(u: f64, sigma: f64, omega: f64, delta: f64) -> Complex64 {
    let s2 = sigma * sigma;
    let phase = u * (delta / (2.0 * s2) - omega);
    (-u * u / (4.0 * s2)).exp() * Complex64::new(0.0, phase).exp()
}

fn shifted_factor(sigma: f64, omega: f64, delta: f64) -> f64 {
    (delta * delta / (4.0 * sigma * sigma) - omega * delta).exp()
}

fn real_weight(s: f64, sigma: f64, omega: f64) -> Complex64 {
    (-s * s / (4.0 * sigma * sigma)).exp() * Complex64::new(0.0, -omega * s).exp()
}

fn cross_depends_on_p(sc: &TrajectoryScenario) -> bool {
    sc.family != Family::ThermalInertialPair
}

/// Breakpoints for the s-integral at fixed p on the real axis.
fn s_points(
    sc: &TrajectoryScenario,
    i: usize,
    j: usize,
    p: f64,
    half: f64,
    eps: Option<f64>,
) -> Vec<f64> {
    let mut pts = Vec::new();
    let e = eps.unwrap_or(0.0);
    if i == j || sc.family == Family::ThermalInertialPair {
        let centres: Vec<f64> = if i == j {
            vec![0.0]
        } else {
            vec![-sc.l.abs(), sc.l.abs()]
        };
        for c in centres {
            if e > 0.0 {
                cluster(c, e, -half, half, &mut pts);
            } else if c > -half && c < half {
                pts.push(c);
            }
        }
        return pts;
    }
    let roots = scan_roots(
        |s| pair_interval(sc, i, j, 0.5 * (p + s), 0.5 * (p - s)),
        -half,
        half,
        400,
    );
    for r in roots {
        if e > 0.0 {
            cluster(r, e, -half, half, &mut pts);
        } else {
            pts.push(r);
        }
    }
    pts
}

/// `(1/2) ∬ dp ds e^{−(p²+s²)/4σ²} e^{−iΩs} W^{ij}(p, s)` summed over the
/// given ordered pairs, with `e^{−σ²Ω²}`-type factors already applied.
///
/// On the shifted contour the result is exact; on the real axis it is the
/// value at regulator `eps`.
fn double_integral(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    terms: &[(usize, usize)],
    contour: ContourUsed,
    eps: f64,
    quad: &QuadratureConfig,
) -> Result<Estimate<Complex64>> {
    let sigma = params.sigma;
    let omega = params.omega;
    let half = WINDOW_SIGMAS * sigma;
    let (delta, factor) = match contour {
        ContourUsed::Shifted { delta } => (delta, shifted_factor(sigma, omega, delta)),
        ContourUsed::RealAxis => (0.0, 1.0),
    };
    let e = if delta > 0.0 { 0.0 } else { eps };
    let opts = AdaptiveOptions {
        abs_tol: quad.abs_tol,
        rel_tol: quad.rel_tol,
        max_subdivisions: quad.max_subdivisions,
        max_panel_width: if delta > 0.0 || omega == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI / omega.abs() / quad.oscillation_resolution
        },
    };
    let inner_opts = AdaptiveOptions {
        abs_tol: 0.1 * quad.abs_tol,
        rel_tol: 0.1 * quad.rel_tol,
        ..opts
    };
    let weight = |u: f64| {
        if delta > 0.0 {
            shifted_weight(u, sigma, omega, delta)
        } else {
            real_weight(u, sigma, omega)
        }
    };
    let gauss_p = 2.0 * sigma * PI.sqrt();

    let mut value = Complex64::default();
    let mut error = 0.0;
    let mut evaluations = 0;
    for &(i, j) in terms {
        let p_free = i == j || !cross_depends_on_p(sc);
        let inner = |p: f64| -> Result<Estimate<Complex64>> {
            let pts = s_points(sc, i, j, p, half, (e > 0.0).then_some(e));
            let f = |u: f64| {
                let s = Complex64::new(u, -delta);
                let t1 = 0.5 * (p + s);
                let t2 = 0.5 * (p - s);
                weight(u) * pair_c(sc, i, j, t1, t2, e)
            };
            integrate(f, -half, half, &pts, &inner_opts)
        };
        if p_free {
            let est = inner(0.0)?;
            value += est.value * (0.5 * gauss_p);
            error += est.error * 0.5 * gauss_p;
            evaluations += est.evaluations;
        } else {
            let mut failure: Option<Error> = None;
            let mut inner_err = 0.0;
            let outer = integrate(
                |p: f64| -> Complex64 {
                    if failure.is_some() {
                        return Complex64::default();
                    }
                    match inner(p) {
                        Ok(est) => {
                            inner_err += est.error * (-p * p / (4.0 * sigma * sigma)).exp();
                            evaluations += est.evaluations;
                            est.value * (-p * p / (4.0 * sigma * sigma)).exp()
                        }
                        Err(err) => {
                            failure = Some(err);
                            Complex64::default()
                        }
                    }
                },
                -half,
                half,
                &[0.0],
                &AdaptiveOptions {
                    max_panel_width: f64::INFINITY,
                    ..opts
                },
            )?;
            if let Some(err) = failure {
                return Err(err);
            }
            value += outer.value * 0.5;
            error += 0.5 * outer.error
                + 0.5 * inner_err * (2.0 * half) / outer.evaluations.max(1) as f64;
        }
    }
    Ok(Estimate {
        value: value * factor,
        error: error * factor,
        evaluations,
    })
}

/// Regulator scale of the probability integrals.
fn probability_scale(sc: &TrajectoryScenario, params: &DetectorParams) -> f64 {
    params.sigma.min(1.0 / sc.kappa_max())
}

/// Excitation probability `(λ²/N²) Σᵢⱼ ∬ χ(τ')χ̄(τ'') W^{ij}(τ', τ'')` for
/// Gaussian switching of width σ centred at τ = 0.
///
/// All ordered branch pairs are integrated together as one real integrand.
pub fn excitation_probability_quadrature(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    sched: &RegulatorSchedule,
    quad: &QuadratureConfig,
) -> Result<ProbabilityResult> {
    sc.validate()?;
    params.validate()?;
    sched.validate()?;
    quad.validate()?;
    let contour = resolve_contour(sc, params, quad)?;
    let pref = prefactor(sc, params);
    let all = pairs(sc);
    // Local terms share one integral per distinct κ; the cross terms go in
    // together so that the integrand is real.
    let (local, cross): (Vec<_>, Vec<_>) = all.into_iter().partition(|(i, j)| i == j);
    let eval = |eps: f64| -> Result<(f64, f64)> {
        let mut v = 0.0;
        let mut err = 0.0;
        for t in [&local, &cross] {
            if t.is_empty() {
                continue;
            }
            let est = double_integral(sc, params, t, contour, eps, quad)?;
            v += est.value.re;
            err += est.error;
        }
        Ok((v, err))
    };
    match contour {
        ContourUsed::Shifted { .. } => {
            let (v, err) = eval(0.0)?;
            Ok(ProbabilityResult {
                value: pref * v,
                error_estimate: pref * err,
                contour,
                epsilon_estimates: Vec::new(),
            })
        }
        ContourUsed::RealAxis => {
            let scale = probability_scale(sc, params);
            let mut est = Vec::new();
            let mut qerr: f64 = 0.0;
            for &e in &sched.epsilons {
                let (v, err) = eval(e * scale)?;
                est.push((e * scale, pref * v));
                qerr = qerr.max(pref * err);
            }
            let ex = epsilon_extrapolate(&est, sched.extrapolation)?;
            Ok(ProbabilityResult {
                value: ex.limit,
                error_estimate: ex.error_estimate + qerr,
                contour,
                epsilon_estimates: est,
            })
        }
    }
}

/// `∬ χ(τ')χ̄(τ'') W^{ij}(τ', τ'')` over the full plane, without λ.
pub(crate) fn full_integral(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    i: usize,
    j: usize,
    sched: &RegulatorSchedule,
    quad: &QuadratureConfig,
) -> Result<(Complex64, f64)> {
    let contour = resolve_contour(sc, params, quad)?;
    match contour {
        ContourUsed::Shifted { .. } => {
            let est = double_integral(sc, params, &[(i, j)], contour, 0.0, quad)?;
            Ok((est.value, est.error))
        }
        ContourUsed::RealAxis => {
            let scale = probability_scale(sc, params);
            let mut re = Vec::new();
            let mut im = Vec::new();
            let mut qerr: f64 = 0.0;
            for &e in &sched.epsilons {
                let est = double_integral(sc, params, &[(i, j)], contour, e * scale, quad)?;
                re.push((e * scale, est.value.re));
                im.push((e * scale, est.value.im));
                qerr = qerr.max(est.error);
            }
            let a = epsilon_extrapolate(&re, sched.extrapolation)?;
            let b = epsilon_extrapolate(&im, sched.extrapolation)?;
            Ok((
                Complex64::new(a.limit, b.limit),
                qerr + a.error_estimate + b.error_estimate,
            ))
        }
    }
}

/// `κ²(1/sinh²x − 1/x²)` with x = κs/2, via its series near 0.
fn sinh_inv_sq_minus_flat(kappa: f64, s: f64) -> f64 {
    let x = 0.5 * kappa * s;
    let v = if x.abs() < 1e-3 {
        let x2 = x * x;
        -1.0 / 3.0 + x2 / 15.0 - 2.0 * x2 * x2 / 189.0
    } else {
        1.0 / x.sinh().powi(2) - 1.0 / (x * x)
    };
    kappa * kappa * v
}

/// Imaginary part of the time-ordered integral of branch `i`, renormalised.
///
/// The ε → 0 divergence of `Im ∬_T W^{ii}` comes from the flat-space part of
/// the correlator and is the same for every κ. What is returned is the
/// ε → 0 limit after removing that common part, which cancels from every
/// population.
pub(crate) fn time_ordered_imag_renormalised(
    kappa: f64,
    params: &DetectorParams,
    quad: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let sigma = params.sigma;
    let omega = params.omega;
    let half = WINDOW_SIGMAS * sigma;
    let opts = quad.options(omega);
    let f = |s: f64| -> f64 {
        let w = -sinh_inv_sq_minus_flat(kappa, s) / (16.0 * PI * PI);
        (-s * s / (4.0 * sigma * sigma)).exp() * (Complex64::new(0.0, -omega * s).exp() * w).im
    };
    let est = integrate(f, 0.0, half, &[], &opts)?;
    let pref = sigma * PI.sqrt();
    Ok((pref * est.value, pref * est.error))
}

/// Local term of a rate, `2 Re ∫₀^{s_max} e^{−iΩs} W_loc(s) ds`, at one ε.
pub fn local_rate_integral(
    kappa: f64,
    omega: f64,
    eps: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let hi = quad.s_max.unwrap_or(40.0 / kappa);
    let mut pts = Vec::new();
    cluster(0.0, eps, 0.0, hi, &mut pts);
    let f = |s: f64| {
        (Complex64::new(0.0, -omega * s).exp() * local_c(kappa, Complex64::new(s, 0.0), eps)).re
    };
    Ok(2.0 * integrate(f, 0.0, hi, &pts, &quad.options(omega))?.value)
}

/// Used by tests to confirm the imaginary unit convention of the contour.
#[doc(hidden)]
pub fn shifted_weight_check(u: f64, sigma: f64, omega: f64) -> (Complex64, Complex64) {
    let delta = 2.0 * sigma * sigma * omega;
    let s = Complex64::new(u, -delta);
    let direct = (-(s * s) / (4.0 * sigma * sigma) - I * omega * s).exp();
    (
        direct,
        shifted_weight(u, sigma, omega, delta) * shifted_factor(sigma, omega, delta),
    )
}
