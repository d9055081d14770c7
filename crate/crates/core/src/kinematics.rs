//! Classical worldlines of the superposed branches.
//!
//! Units are natural (c = 1) and the metric signature is (-,+,+,+). Motion is
//! along z; x and y stay zero.

use crate::error::{invalid, Error, Result};

/// Largest |κτ| accepted before hyperbolic functions get close to overflow.
pub const MAX_RAPIDITY: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    SingleAccel,
    Parallel,
    AntiParallel,
    Differing,
    ThermalInertialPair,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::SingleAccel => "single",
            Family::Parallel => "parallel",
            Family::AntiParallel => "antiparallel",
            Family::Differing => "differing",
            Family::ThermalInertialPair => "thermal_pair",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "single" | "singleaccel" | "local" => Some(Family::SingleAccel),
            "parallel" | "par" => Some(Family::Parallel),
            "antiparallel" | "anti" => Some(Family::AntiParallel),
            "differing" | "diff" => Some(Family::Differing),
            "thermalpair" | "thermalinertialpair" | "thermal" => Some(Family::ThermalInertialPair),
            _ => None,
        }
    }

    pub const ALL: [Family; 5] = [
        Family::SingleAccel,
        Family::Parallel,
        Family::AntiParallel,
        Family::Differing,
        Family::ThermalInertialPair,
    ];
}

/// Which superposition is in play, with its geometry.
///
/// `kappa2` is read only by [`Family::Differing`]; `l` only by the parallel,
/// anti-parallel and thermal families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryScenario {
    pub family: Family,
    pub kappa1: f64,
    pub kappa2: f64,
    pub l: f64,
}

impl TrajectoryScenario {
    pub fn single(kappa: f64) -> Self {
        Self {
            family: Family::SingleAccel,
            kappa1: kappa,
            kappa2: kappa,
            l: 0.0,
        }
    }

    pub fn parallel(kappa: f64, l: f64) -> Self {
        Self {
            family: Family::Parallel,
            kappa1: kappa,
            kappa2: kappa,
            l,
        }
    }

    pub fn antiparallel(kappa: f64, l: f64) -> Self {
        Self {
            family: Family::AntiParallel,
            kappa1: kappa,
            kappa2: kappa,
            l,
        }
    }

    pub fn differing(kappa1: f64, kappa2: f64) -> Self {
        Self {
            family: Family::Differing,
            kappa1,
            kappa2,
            l: 0.0,
        }
    }

    pub fn thermal_pair(kappa: f64, l: f64) -> Self {
        Self {
            family: Family::ThermalInertialPair,
            kappa1: kappa,
            kappa2: kappa,
            l,
        }
    }

    pub fn branch_count(&self) -> usize {
        match self.family {
            Family::SingleAccel => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa1.is_finite() && self.kappa1 > 0.0) {
            return Err(invalid(format!(
                "kappa1 must be finite and > 0, got {}",
                self.kappa1
            )));
        }
        if self.family == Family::Differing && !(self.kappa2.is_finite() && self.kappa2 > 0.0) {
            return Err(invalid(format!(
                "kappa2 must be finite and > 0, got {}",
                self.kappa2
            )));
        }
        if !self.l.is_finite() {
            return Err(invalid("L must be finite"));
        }
        match self.family {
            Family::Parallel if self.l < 0.0 => Err(invalid(
                "parallel family requires L >= 0 (configuration is symmetric in L)",
            )),
            Family::ThermalInertialPair if self.l == 0.0 => {
                Err(invalid("thermal pair requires L != 0"))
            }
            _ => Ok(()),
        }
    }

    /// Proper acceleration of a branch (1-based).
    pub fn kappa(&self, branch: usize) -> f64 {
        if self.family == Family::Differing && branch == 2 {
            self.kappa2
        } else {
            self.kappa1
        }
    }

    pub fn kappa_min(&self) -> f64 {
        match self.family {
            Family::Differing => self.kappa1.min(self.kappa2),
            _ => self.kappa1,
        }
    }

    pub fn kappa_max(&self) -> f64 {
        match self.family {
            Family::Differing => self.kappa1.max(self.kappa2),
            _ => self.kappa1,
        }
    }

    pub(crate) fn check_branch(&self, branch: usize) -> Result<()> {
        if branch == 0 || branch > self.branch_count() {
            return Err(invalid(format!(
                "branch {branch} out of range 1..={} for {:?}",
                self.branch_count(),
                self.family
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Event {
    pub fn tz(t: f64, z: f64) -> Self {
        Self {
            t,
            x: 0.0,
            y: 0.0,
            z,
        }
    }
}

/// Components (dt/dτ, dx/dτ, dy/dτ, dz/dτ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn minkowski_norm(&self) -> f64 {
        let [t, x, y, z] = self.0;
        -t * t + x * x + y * y + z * z
    }
}

fn check_rapidity(kappa: f64, tau: f64) -> Result<()> {
    if !tau.is_finite() {
        return Err(invalid("tau must be finite"));
    }
    if (kappa * tau).abs() > MAX_RAPIDITY {
        return Err(Error::OutOfRange(format!(
            "|kappa*tau| = {} exceeds {MAX_RAPIDITY}",
            (kappa * tau).abs()
        )));
    }
    Ok(())
}

pub fn worldline_event(sc: &TrajectoryScenario, branch: usize, tau: f64) -> Result<Event> {
    sc.check_branch(branch)?;
    let k = sc.kappa(branch);
    check_rapidity(k, tau)?;
    let half = 0.5 * sc.l;
    let (ch, sh) = ((k * tau).cosh(), (k * tau).sinh());
    let ev = match (sc.family, branch) {
        (Family::SingleAccel | Family::Differing, _) => Event::tz(sh / k, ch / k),
        (Family::Parallel | Family::AntiParallel, 1) => Event::tz(sh / k, (ch - 1.0) / k + half),
        (Family::Parallel, _) => Event::tz(sh / k, (ch - 1.0) / k - half),
        (Family::AntiParallel, _) => Event::tz(sh / k, -(ch - 1.0) / k - half),
        (Family::ThermalInertialPair, 1) => Event::tz(tau, half),
        (Family::ThermalInertialPair, _) => Event::tz(tau, -half),
    };
    Ok(ev)
}

pub fn four_velocity(sc: &TrajectoryScenario, branch: usize, tau: f64) -> Result<FourVector> {
    sc.check_branch(branch)?;
    let k = sc.kappa(branch);
    check_rapidity(k, tau)?;
    let (ch, sh) = ((k * tau).cosh(), (k * tau).sinh());
    let u = match (sc.family, branch) {
        (Family::ThermalInertialPair, _) => [1.0, 0.0, 0.0, 0.0],
        (Family::AntiParallel, 2) => [ch, 0.0, 0.0, -sh],
        _ => [ch, 0.0, 0.0, sh],
    };
    Ok(FourVector(u))
}

pub fn minkowski_interval(e1: &Event, e2: &Event) -> f64 {
    let (dt, dx, dy, dz) = (e1.t - e2.t, e1.x - e2.x, e1.y - e2.y, e1.z - e2.z);
    -dt * dt + dx * dx + dy * dy + dz * dz
}

/// Asymptotic Rindler horizons of a branch as (apex z, orientation).
///
/// Orientation +1 means the wedge opens towards +z.
fn rindler_apex(sc: &TrajectoryScenario, branch: usize) -> (f64, f64) {
    let k = sc.kappa(branch);
    let half = 0.5 * sc.l;
    match (sc.family, branch) {
        (Family::AntiParallel, 2) => (1.0 / k - half, -1.0),
        (_, 1) => (half - 1.0 / k, 1.0),
        _ => (-half - 1.0 / k, 1.0),
    }
}

const HORIZON_TOL: f64 = 1e-10;
const HORIZON_SPAN: f64 = 60.0;
const HORIZON_SCAN: usize = 4000;

/// Proper times at which one branch crosses a Rindler horizon of the other.
///
/// Both past and future horizons are searched; the result is sorted and
/// duplicate times (both branches crossing at once) are merged.
pub fn horizon_crossing_times(sc: &TrajectoryScenario) -> Result<Vec<f64>> {
    if !matches!(sc.family, Family::Parallel | Family::AntiParallel) {
        return Err(invalid(format!(
            "horizon crossings are defined for parallel and anti-parallel families, not {:?}",
            sc.family
        )));
    }
    sc.validate()?;
    let k = sc.kappa1;
    let span = HORIZON_SPAN / k;
    let mut roots: Vec<f64> = Vec::new();
    for (mover, owner) in [(1usize, 2usize), (2, 1)] {
        let (apex, orient) = rindler_apex(sc, owner);
        for horizon in [1.0f64, -1.0] {
            // Null condition t = ±orient (z - apex), i.e. the event sits on the
            // future (+) or past (-) horizon of `owner`.
            let f = |tau: f64| -> f64 {
                let e = worldline_event(sc, mover, tau).expect("tau within span");
                e.t - horizon * orient * (e.z - apex)
            };
            // Far out the worldline runs parallel to the horizon and f is pure
            // rounding noise; ignore sign changes below that level.
            let noise = |tau: f64| -> f64 {
                let e = worldline_event(sc, mover, tau).expect("tau within span");
                1e-9 * (e.t.abs() + e.z.abs() + apex.abs())
            };
            let mut prev_tau = -span;
            let mut prev = f(prev_tau);
            for n in 1..=HORIZON_SCAN {
                let tau = -span + 2.0 * span * n as f64 / HORIZON_SCAN as f64;
                let cur = f(tau);
                let resolved = prev.abs() > noise(prev_tau) && cur.abs() > noise(tau);
                if resolved && prev.signum() != cur.signum() {
                    roots.push(bisect(&f, prev_tau, tau, HORIZON_TOL));
                }
                prev_tau = tau;
                prev = cur;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * HORIZON_TOL);
    Ok(roots)
}

pub(crate) fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa.signum() == fm.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
