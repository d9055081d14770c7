//! Guards for the saddle-point closed forms.
//!
//! The closed forms shift the s-contour down by 2σ²Ω. That is safe while the
//! shift stays inside the strip where every correlator is analytic, which
//! gives β = κσ²Ω < π. The anti-parallel family carries an extra pole
//! condition near κL = 2.
//!
//! The real-part pole equations at s_r = 0 reduce to
//! `sin²(κ s_i/2) + (κL/2)² = 0` (parallel) and
//! `sin²(κ s_i/2) + (κL/2 + 1)² = 0` (anti-parallel). Neither has a solution
//! with κL ≠ 0 resp. κL ≠ −2, so they are not checked at runtime; see
//! [`real_part_constraint_parallel`] and its tests.

use std::f64::consts::PI;
use std::fmt;

use crate::response_closed::DetectorParams;

/// Half-width of the κL window around 2 that is always flagged.
pub const ANTIPARALLEL_POLE_WINDOW: f64 = 0.05;

/// β above which closed forms are accepted with a warning.
pub const BETA_WARN: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub name: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub ok: bool,
    pub violated_constraints: Vec<Violation>,
    pub beta: f64,
    pub warnings: Vec<String>,
}

impl ValidityReport {
    fn new(beta: f64) -> Self {
        Self {
            ok: true,
            violated_constraints: Vec::new(),
            beta,
            warnings: Vec::new(),
        }
    }

    fn violate(&mut self, name: &str, detail: String) {
        self.ok = false;
        self.violated_constraints.push(Violation {
            name: name.to_string(),
            detail,
        });
    }

    /// Fold another report into this one, keeping the larger β.
    pub fn merge(mut self, other: ValidityReport) -> Self {
        self.ok &= other.ok;
        self.violated_constraints.extend(other.violated_constraints);
        self.warnings.extend(other.warnings);
        self.beta = self.beta.max(other.beta);
        self
    }

    pub fn has(&self, name: &str) -> bool {
        self.violated_constraints.iter().any(|v| v.name == name)
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok (beta = {})", self.beta);
        }
        let parts: Vec<String> = self
            .violated_constraints
            .iter()
            .map(|v| format!("{}: {}", v.name, v.detail))
            .collect();
        write!(f, "beta = {}; {}", self.beta, parts.join("; "))
    }
}

pub fn beta(params: &DetectorParams, kappa: f64) -> f64 {
    kappa * params.sigma * params.sigma * params.omega
}

pub fn check_beta_bound(params: &DetectorParams, kappa: f64) -> ValidityReport {
    let b = beta(params, kappa);
    let mut r = ValidityReport::new(b);
    if !b.is_finite() {
        r.violate("beta_bound", format!("beta is not finite ({b})"));
    } else if b <= 0.0 {
        r.violate(
            "negative_gap_closed_form",
            format!("beta = {b} <= 0; closed forms assume absorption (omega > 0)"),
        );
    } else if b >= PI {
        r.violate(
            "beta_bound",
            format!("beta = {b} >= pi; the shifted contour crosses poles"),
        );
    } else if b > BETA_WARN {
        r.warnings
            .push(format!("beta = {b} close to pi; 1/sin^2(beta) blows up"));
    }
    r
}

/// Left side of the anti-parallel pole equation at s_r = 0.
pub fn antiparallel_pole_lhs(kappa: f64, l: f64) -> f64 {
    let x = 0.5 * kappa * l;
    (kappa * kappa / 16.0) / ((x - 1.0) * (x + 1.0) * (x + 1.0))
}

pub fn check_antiparallel_pole(params: &DetectorParams, kappa: f64, l: f64) -> ValidityReport {
    let b = beta(params, kappa);
    let mut r = ValidityReport::new(b);
    let kl = kappa * l;
    if (kl - 2.0).abs() < ANTIPARALLEL_POLE_WINDOW {
        r.violate(
            "antiparallel_pole_window",
            format!("kappa*L = {kl} within {ANTIPARALLEL_POLE_WINDOW} of 2; closed form suspect, use quadrature"),
        );
        return r;
    }
    let lhs = antiparallel_pole_lhs(kappa, l);
    if !(lhs > 0.0) || b <= 0.0 {
        return r;
    }
    // 1/(1 - cos x) decreases on (0, π]; its minimum over x ∈ (0, 2β] sits at
    // min(2β, π).
    let x_max = (2.0 * b).min(PI);
    let rhs_min = 1.0 / (1.0 - x_max.cos());
    if lhs >= rhs_min {
        r.violate(
            "antiparallel_pole",
            format!("pole equation solvable: lhs = {lhs:.6} >= min rhs = {rhs_min:.6} on s_i in (0, 2 sigma^2 omega]"),
        );
    }
    r
}

/// Real part of the parallel pole equation at s_r = 0; zero would mean a pole.
pub fn real_part_constraint_parallel(kappa: f64, l: f64, s_i: f64) -> f64 {
    (0.5 * kappa * s_i).sin().powi(2) + (0.5 * kappa * l).powi(2)
}

/// Real part of the anti-parallel pole equation at s_r = 0.
pub fn real_part_constraint_antiparallel(kappa: f64, l: f64, s_i: f64) -> f64 {
    (0.5 * kappa * s_i).sin().powi(2) + (0.5 * kappa * l + 1.0).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(omega: f64, sigma: f64) -> DetectorParams {
        DetectorParams::new(omega, 0.01, sigma).unwrap()
    }

    #[test]
    fn beta_bound_examples() {
        let r = check_beta_bound(&params(1.0, 0.1), 1.0);
        assert!(r.ok && (r.beta - 0.01).abs() < 1e-15);
        let r = check_beta_bound(&params(4.0, 1.0), 1.0);
        assert!(!r.ok && r.has("beta_bound") && r.beta == 4.0);
        let r = check_beta_bound(&params(-1.0, 0.1), 1.0);
        assert!(r.has("negative_gap_closed_form"));
        let r = check_beta_bound(&params(3.05, 1.0), 1.0);
        assert!(r.ok && !r.warnings.is_empty());
    }

    #[test]
    fn antiparallel_pole_examples() {
        assert!(check_antiparallel_pole(&params(1.0, 0.1), 1.0, 0.2).ok);
        let near_half_pi = params(std::f64::consts::FRAC_PI_2, 1.0);
        let r = check_antiparallel_pole(&near_half_pi, 1.0, 2.06);
        assert!(r.has("antiparallel_pole"), "{r}");
        assert!(check_antiparallel_pole(&near_half_pi, 1.0, 2.02).has("antiparallel_pole_window"));
        for l in [-5.0, -1.0, 0.0, 1.0, 2.1, 3.0, 10.0] {
            assert!(
                check_antiparallel_pole(&params(1e-6, 0.1), 1.0, l).ok,
                "L = {l}"
            );
        }
    }

    #[test]
    fn real_part_constraints_never_vanish() {
        for n in 0..=200 {
            let s_i = n as f64 * 0.05;
            for l in [-3.0, -1.0, -0.1, 0.1, 0.5, 2.0, 4.0] {
                assert!(real_part_constraint_parallel(1.0, l, s_i) > 0.0);
                assert!(real_part_constraint_antiparallel(1.0, l, s_i) > 0.0);
            }
        }
    }

    #[test]
    fn typical_parameters_are_valid() {
        for omega_sigma in [0.28, 0.5] {
            for kappa_sigma in [0.01, 0.05, 0.1, 0.2] {
                let sigma = kappa_sigma;
                let p = params(omega_sigma / sigma, sigma);
                assert!(check_beta_bound(&p, 1.0).ok);
                for kl in [1.0, -1.0, 0.1, 0.2, 0.5, 0.9] {
                    assert!(check_antiparallel_pole(&p, 1.0, kl).ok, "kL = {kl}");
                }
            }
        }
    }
}
