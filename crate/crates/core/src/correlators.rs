//! Regularised vacuum Wightman functions of a massless scalar field in 3+1
//! Minkowski space, evaluated along pairs of branch worldlines.
//!
//! Index convention: `W^{ij}(τ', τ'')` puts branch `i` at `τ'` and branch `j`
//! at `τ''`, so `W^{ij}(τ', τ'') = ⟨0|Φ(x_i(τ')) Φ(x_j(τ''))|0⟩`.
//!
//! The specialised forms are evaluated in factorised light-cone form, which
//! avoids the cancellation between `cosh²` terms at large rapidity. The
//! `*_c` functions accept complex arguments and ε = 0; they back the shifted
//! contour used in [`crate::response_numeric`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::kinematics::{four_velocity, worldline_event, Family, TrajectoryScenario, MAX_RAPIDITY};

pub type ComplexValue = Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const INV_4PI2: f64 = 1.0 / (4.0 * PI * PI);

/// Smearing scale ε of the Schlicht regulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regulator {
    epsilon: f64,
}

impl Regulator {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid(format!(
                "regulator epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    D12,
    D21,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::D12 => 1.0,
            Direction::D21 => -1.0,
        }
    }
}

fn guard(kappa: f64, x: f64) -> Result<()> {
    if (kappa * x).abs() > 2.0 * MAX_RAPIDITY {
        return Err(Error::OutOfRange(format!(
            "|kappa*arg| = {} too large",
            (kappa * x).abs()
        )));
    }
    Ok(())
}

/// Generic form: `(1/4π²) / (Δx − iε(u' + u''))²` from events and velocities.
pub fn wightman_schlicht(
    sc: &TrajectoryScenario,
    i: usize,
    j: usize,
    tau1: f64,
    tau2: f64,
    reg: Regulator,
) -> Result<ComplexValue> {
    let (e1, e2) = (worldline_event(sc, i, tau1)?, worldline_event(sc, j, tau2)?);
    let (u1, u2) = (four_velocity(sc, i, tau1)?.0, four_velocity(sc, j, tau2)?.0);
    let eps = reg.epsilon();
    let d = [e1.t - e2.t, e1.x - e2.x, e1.y - e2.y, e1.z - e2.z];
    let x: Vec<Complex64> = (0..4).map(|k| d[k] - I * eps * (u1[k] + u2[k])).collect();
    let sq = -x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    Ok(INV_4PI2 / sq)
}

/// `κ⁻¹ sinh(κs/2) − iε cosh(κs/2)`.
fn g_c(kappa: f64, s: Complex64, eps: f64) -> Complex64 {
    let h = 0.5 * kappa * s;
    h.sinh() / kappa - I * eps * h.cosh()
}

pub(crate) fn local_c(kappa: f64, s: Complex64, eps: f64) -> Complex64 {
    let g = g_c(kappa, s, eps);
    -1.0 / (16.0 * PI * PI * g * g)
}

/// Single-hyperbola correlator `−(1/16π²) / (κ⁻¹ sinh(κs/2) − iε cosh(κs/2))²`.
pub fn wightman_local(kappa: f64, s: f64, reg: Regulator) -> Result<ComplexValue> {
    guard(kappa, s)?;
    Ok(local_c(kappa, Complex64::new(s, 0.0), reg.epsilon()))
}

pub(crate) fn parallel_cross_c(
    kappa: f64,
    l: f64,
    p: f64,
    s: Complex64,
    eps: f64,
    dir: Direction,
) -> Complex64 {
    // Written in a = e^{κτ'}, b = e^{κτ''} so that κL can be folded into the
    // larger exponential before the subtraction.
    let a = (0.5 * kappa * (p + s)).exp();
    let b = (0.5 * kappa * (p - s)).exp();
    let kdl = kappa * dir.sign() * l;
    let lo = ((b.inv() - kdl) - a.inv()) / kappa - I * eps * (a.inv() + b.inv());
    let hi = ((a + kdl) - b) / kappa - I * eps * (a + b);
    -INV_4PI2 / (lo * hi)
}

/// Parallel cross term in (p, s) = (τ' + τ'', τ' − τ'').
///
/// Equal to `−1/(4π²(ψ_p² − (φ_p ± L)²))` with + for [`Direction::D12`].
pub fn wightman_parallel_cross(
    kappa: f64,
    l: f64,
    p: f64,
    s: f64,
    reg: Regulator,
    dir: Direction,
) -> Result<ComplexValue> {
    guard(kappa, p.abs() + s.abs())?;
    Ok(parallel_cross_c(
        kappa,
        l,
        p,
        Complex64::new(s, 0.0),
        reg.epsilon(),
        dir,
    ))
}

pub(crate) fn antiparallel_cross_c(
    kappa: f64,
    l: f64,
    p: f64,
    s: Complex64,
    eps: f64,
) -> Complex64 {
    // Same grouping as the parallel form, in e^{±κτ'} and e^{±κτ''}.
    let t1 = 0.5 * kappa * (p + s);
    let t2 = 0.5 * kappa * (p - s);
    let c = 2.0 - kappa * l;
    let x = t2.exp() + (-t1).exp();
    let y = t1.exp() + (-t2).exp();
    let lo = ((c - (-t1).exp()) - t2.exp()) - I * (kappa * eps) * x;
    let hi = ((t1.exp() - c) + (-t2).exp()) - I * (kappa * eps) * y;
    -INV_4PI2 * kappa * kappa / (lo * hi)
}

/// Anti-parallel cross term, identical for both directions.
pub fn wightman_antiparallel_cross(
    kappa: f64,
    l: f64,
    p: f64,
    s: f64,
    reg: Regulator,
) -> Result<ComplexValue> {
    guard(kappa, p.abs() + s.abs())?;
    Ok(antiparallel_cross_c(
        kappa,
        l,
        p,
        Complex64::new(s, 0.0),
        reg.epsilon(),
    ))
}

/// Cross term between hyperbolae of accelerations `ki` (at `t1`) and `kj`
/// (at `t2`) sharing the horizon through the origin.
pub(crate) fn differing_cross_c(
    ki: f64,
    kj: f64,
    t1: Complex64,
    t2: Complex64,
    eps: f64,
) -> Complex64 {
    let (x1, x2) = (ki * t1, kj * t2);
    let am = 0.5 * (x1 - x2);
    let ap = 0.5 * (x1 + x2);
    let reg = 2.0 * I * eps * am.cosh();
    let a = -(-x1).exp() / ki + (-x2).exp() / kj - reg * (-ap).exp();
    let b = x1.exp() / ki - x2.exp() / kj - reg * ap.exp();
    -INV_4PI2 / (a * b)
}

pub fn wightman_differing_cross(
    kappa1: f64,
    kappa2: f64,
    tau1: f64,
    tau2: f64,
    reg: Regulator,
    dir: Direction,
) -> Result<ComplexValue> {
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        return Err(invalid("differing accelerations must both be > 0"));
    }
    let (ki, kj) = match dir {
        Direction::D12 => (kappa1, kappa2),
        Direction::D21 => (kappa2, kappa1),
    };
    guard(ki, tau1)?;
    guard(kj, tau2)?;
    Ok(differing_cross_c(
        ki,
        kj,
        Complex64::new(tau1, 0.0),
        Complex64::new(tau2, 0.0),
        reg.epsilon(),
    ))
}

/// `coth z`, stable for large |Re z|.
fn coth_c(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        let e = (-2.0 * z).exp();
        (1.0 + e) / (1.0 - e)
    } else {
        let e = (2.0 * z).exp();
        -(1.0 + e) / (1.0 - e)
    }
}

/// `s` here is the bare difference; the regulator enters as `s − iε`.
pub(crate) fn thermal_cross_c(kappa: f64, l: f64, s: Complex64, eps: f64) -> Complex64 {
    let sp = s - I * eps;
    let h = 0.5 * kappa;
    kappa * (coth_c(h * (l - sp)) + coth_c(h * (l + sp))) / (16.0 * PI * PI * l)
}

/// Cross correlator of two static detectors a distance `L` apart in a
/// thermal bath at temperature κ/2π.
pub fn wightman_thermal_cross(kappa: f64, l: f64, s: f64, reg: Regulator) -> Result<ComplexValue> {
    if l == 0.0 || !l.is_finite() {
        return Err(invalid("thermal cross correlator needs finite L != 0"));
    }
    Ok(thermal_cross_c(
        kappa,
        l,
        Complex64::new(s, 0.0),
        reg.epsilon(),
    ))
}

/// Scenario dispatcher at complex proper times and ε ≥ 0.
///
/// Branch `i` sits at `t1` and branch `j` at `t2`. The parallel and
/// anti-parallel forms require `t1 + t2` to be real.
pub(crate) fn pair_c(
    sc: &TrajectoryScenario,
    i: usize,
    j: usize,
    t1: Complex64,
    t2: Complex64,
    eps: f64,
) -> Complex64 {
    let s = t1 - t2;
    if i == j {
        return local_c(sc.kappa(i), s, eps);
    }
    let dir = if i == 1 {
        Direction::D12
    } else {
        Direction::D21
    };
    let p = (t1 + t2).re;
    match sc.family {
        Family::Parallel => parallel_cross_c(sc.kappa1, sc.l, p, s, eps, dir),
        Family::AntiParallel => antiparallel_cross_c(sc.kappa1, sc.l, p, s, eps),
        Family::Differing => differing_cross_c(sc.kappa(i), sc.kappa(j), t1, t2, eps),
        Family::ThermalInertialPair => thermal_cross_c(sc.kappa1, sc.l, s, eps),
        Family::SingleAccel => unreachable!("single family has one branch"),
    }
}

/// Squared interval between `x_i(τ')` and `x_j(τ'')` in factorised form.
///
/// Agrees with [`crate::kinematics::minkowski_interval`] but keeps its sign
/// reliable when both events sit at large rapidity.
pub fn pair_interval(sc: &TrajectoryScenario, i: usize, j: usize, tau1: f64, tau2: f64) -> f64 {
    let s = tau1 - tau2;
    if sc.family == Family::ThermalInertialPair {
        let dz = if i == j { 0.0 } else { sc.l };
        return dz * dz - s * s;
    }
    if i == j {
        let g = 2.0 * (0.5 * sc.kappa(i) * s).sinh() / sc.kappa(i);
        return -g * g;
    }
    let den = match sc.family {
        Family::Parallel => {
            let k = sc.kappa1;
            let kdl = if i == 1 { k * sc.l } else { -k * sc.l };
            let lo = ((-k * tau2).exp() - kdl) - (-k * tau1).exp();
            let hi = ((k * tau1).exp() + kdl) - (k * tau2).exp();
            lo * hi / (k * k)
        }
        Family::AntiParallel => {
            let k = sc.kappa1;
            let c = 2.0 - k * sc.l;
            let lo = (c - (-k * tau1).exp()) - (k * tau2).exp();
            let hi = ((k * tau1).exp() - c) + (-k * tau2).exp();
            lo * hi / (k * k)
        }
        Family::Differing => {
            let (ki, kj) = (sc.kappa(i), sc.kappa(j));
            let a = -(-ki * tau1).exp() / ki + (-kj * tau2).exp() / kj;
            let b = (ki * tau1).exp() / ki - (kj * tau2).exp() / kj;
            a * b
        }
        Family::SingleAccel | Family::ThermalInertialPair => unreachable!("handled above"),
    };
    -den
}

/// `W^{ij}(τ', τ'')` through the specialised closed form of the scenario.
pub fn wightman(
    sc: &TrajectoryScenario,
    i: usize,
    j: usize,
    tau1: f64,
    tau2: f64,
    reg: Regulator,
) -> Result<ComplexValue> {
    sc.validate()?;
    sc.check_branch(i)?;
    sc.check_branch(j)?;
    guard(sc.kappa(i), tau1)?;
    guard(sc.kappa(j), tau2)?;
    let (t1, t2) = (Complex64::new(tau1, 0.0), Complex64::new(tau2, 0.0));
    Ok(pair_c(sc, i, j, t1, t2, reg.epsilon()))
}
