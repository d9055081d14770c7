//! Saddle-point excitation probabilities for Gaussian switching.
//!
//! Valid for σ ≪ 1/κ and β = κσ²Ω < π. Every function goes through
//! [`crate::validity`] first and refuses to return a value when a constraint
//! fails. The `*_formula` helpers evaluate the bare expressions without any
//! guard.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::validity::{beta, check_antiparallel_pole, check_beta_bound, ValidityReport};

/// Coupling above which the perturbative result is flagged.
pub const LAMBDA_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub omega: f64,
    pub lambda: f64,
    pub sigma: f64,
}

impl DetectorParams {
    /// `lambda = 0` is accepted so that the free evolution can be checked.
    pub fn new(omega: f64, lambda: f64, sigma: f64) -> Result<Self> {
        let p = Self {
            omega,
            lambda,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(invalid("omega must be finite"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(invalid(format!(
                "sigma must be finite and > 0, got {}",
                self.sigma
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.lambda > LAMBDA_WARN {
            vec![format!(
                "lambda = {} > {LAMBDA_WARN}; second-order perturbation theory may be unreliable",
                self.lambda
            )]
        } else {
            Vec::new()
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormResult {
    pub probability: f64,
    pub residues_omitted: bool,
    pub beta_values: Vec<f64>,
}

/// ξ = (λ²/8) e^{−σ²Ω²}.
pub fn xi(params: &DetectorParams) -> f64 {
    params.lambda.powi(2) / 8.0 * (-(params.sigma * params.omega).powi(2)).exp()
}

/// ζ = (κσλ)² e^{−σ²Ω²} / 16π.
pub fn zeta(params: &DetectorParams, kappa: f64) -> f64 {
    (kappa * params.sigma * params.lambda).powi(2) * (-(params.sigma * params.omega).powi(2)).exp()
        / (16.0 * PI)
}

/// κ²/sin²(κσ²Ω), finite as κ → 0 where it tends to 1/(σ²Ω)².
pub fn kappa2_over_sin2(kappa: f64, sigma: f64, omega: f64) -> f64 {
    let b = kappa * sigma * sigma * omega;
    let ratio = if b.abs() < 1e-4 {
        1.0 + b * b / 3.0
    } else {
        (b / b.sin()).powi(2)
    };
    ratio / (sigma * sigma * omega).powi(2)
}

pub fn p_local_formula(params: &DetectorParams, kappa: f64) -> f64 {
    let s = params.sigma;
    (s * params.lambda / 2.0).powi(2) * (-(s * params.omega).powi(2)).exp() / (2.0 * PI)
        * kappa2_over_sin2(kappa, s, params.omega)
}

pub fn p_parallel_formula(params: &DetectorParams, kappa: f64, l: f64) -> f64 {
    let b = beta(params, kappa);
    p_local_formula(params, kappa) / 2.0
        + zeta(params, kappa) / ((0.5 * kappa * l).powi(2) + b.sin().powi(2))
}

pub fn p_antiparallel_formula(params: &DetectorParams, kappa: f64, l: f64) -> f64 {
    let b = beta(params, kappa);
    let den = b.sin().powi(2) + (b.cos() + (0.5 * kappa * l - 1.0)).powi(2);
    p_local_formula(params, kappa) / 2.0 + zeta(params, kappa) / den
}

/// Non-residue part of the differing-acceleration probability.
pub fn p_differing_formula(params: &DetectorParams, kappa1: f64, kappa2: f64) -> f64 {
    let (s, om) = (params.sigma, params.omega);
    let (b1, b2) = (kappa1 * s * s * om, kappa2 * s * s * om);
    let cross = 8.0 * (kappa1 * kappa2).powi(2)
        / (kappa1 * kappa1 + kappa2 * kappa2 - 2.0 * kappa1 * kappa2 * (b1 + b2).cos());
    let bracket = kappa2_over_sin2(kappa1, s, om) + kappa2_over_sin2(kappa2, s, om) + cross;
    (s * params.lambda / 2.0).powi(2) * (-(s * om).powi(2)).exp() / (8.0 * PI) * bracket
}

fn guard(params: &DetectorParams, kappa: f64) -> Result<ValidityReport> {
    params.validate()?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(invalid(format!(
            "kappa must be finite and > 0, got {kappa}"
        )));
    }
    let r = check_beta_bound(params, kappa);
    if !r.ok {
        return Err(Error::Validity(r));
    }
    if beta(params, kappa).sin() == 0.0 {
        return Err(Error::Singular(format!(
            "sin(beta) = 0 at beta = {}",
            r.beta
        )));
    }
    Ok(r)
}

pub fn p_local(params: &DetectorParams, kappa: f64) -> Result<ClosedFormResult> {
    let r = guard(params, kappa)?;
    Ok(ClosedFormResult {
        probability: p_local_formula(params, kappa),
        residues_omitted: false,
        beta_values: vec![r.beta],
    })
}

pub fn p_parallel(params: &DetectorParams, kappa: f64, l: f64) -> Result<ClosedFormResult> {
    let r = guard(params, kappa)?;
    if !l.is_finite() {
        return Err(invalid("L must be finite"));
    }
    Ok(ClosedFormResult {
        probability: p_parallel_formula(params, kappa, l),
        residues_omitted: false,
        beta_values: vec![r.beta],
    })
}

pub fn p_antiparallel(params: &DetectorParams, kappa: f64, l: f64) -> Result<ClosedFormResult> {
    let r = guard(params, kappa)?;
    if !l.is_finite() {
        return Err(invalid("L must be finite"));
    }
    let pole = check_antiparallel_pole(params, kappa, l);
    if !pole.ok {
        return Err(Error::Validity(pole));
    }
    Ok(ClosedFormResult {
        probability: p_antiparallel_formula(params, kappa, l),
        residues_omitted: false,
        beta_values: vec![r.beta],
    })
}

/// The residue terms are not included; use the quadrature for true values.
pub fn p_differing(params: &DetectorParams, kappa1: f64, kappa2: f64) -> Result<ClosedFormResult> {
    let r1 = guard(params, kappa1)?;
    let r2 = guard(params, kappa2)?;
    Ok(ClosedFormResult {
        probability: p_differing_formula(params, kappa1, kappa2),
        residues_omitted: true,
        beta_values: vec![r1.beta, r2.beta],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> DetectorParams {
        DetectorParams::new(1.0, 0.01, 0.1).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn local_value() {
        let r = p_local(&base(), 1.0).unwrap();
        assert!(rel(r.probability, 3.939_414_435_775_919_5e-4) < 1e-13);
        assert!(!r.residues_omitted);
        assert_eq!(r.beta_values.len(), 1);
    }

    #[test]
    fn local_small_beta_limit() {
        let p = DetectorParams::new(1.0, 0.01, 0.1).unwrap();
        for kappa in [1e-3, 1e-5] {
            let got = p_local(&p, kappa).unwrap().probability;
            let lim = p.lambda.powi(2) / (8.0 * PI) * (-0.01f64).exp() / 0.01;
            assert!(rel(got, lim) < 1e-5, "{kappa}");
        }
    }

    #[test]
    fn lambda_scaling() {
        let a = p_local(&base(), 1.0).unwrap().probability;
        let b = p_local(&base().with_lambda(0.02), 1.0).unwrap().probability;
        assert!(rel(b, 4.0 * a) < 1e-14);
    }

    #[test]
    fn parallel_value_and_limits() {
        let r = p_parallel(&base(), 1.0, 1.0).unwrap();
        assert!(
            rel(r.probability, 1.970_494_759_506_555e-4) < 1e-12,
            "{}",
            r.probability
        );
        let loc = p_local(&base(), 1.0).unwrap().probability;
        assert!(rel(p_parallel(&base(), 1.0, 0.0).unwrap().probability, loc) < 1e-12);
        assert!(
            rel(
                p_parallel(&base(), 1.0, 1e6).unwrap().probability,
                loc / 2.0
            ) < 1e-10
        );
    }

    #[test]
    fn antiparallel_limits() {
        let loc = p_local(&base(), 1.0).unwrap().probability;
        for l in [1e6, -1e6] {
            assert!(
                rel(
                    p_antiparallel(&base(), 1.0, l).unwrap().probability,
                    loc / 2.0
                ) < 1e-10
            );
        }
        let b = 0.01f64;
        let want = loc / 2.0 + zeta(&base(), 1.0) / (2.0 * (1.0 - b.cos()));
        assert!(rel(p_antiparallel(&base(), 1.0, 0.0).unwrap().probability, want) < 1e-10);
    }

    #[test]
    fn antiparallel_approaches_parallel() {
        let p = DetectorParams::new(1e-3 / 0.01, 0.01, 0.1).unwrap();
        let a = p_antiparallel(&p, 1.0, 1.0).unwrap().probability;
        let q = p_parallel(&p, 1.0, 1.0).unwrap().probability;
        assert!(rel(a, q) < 1e-3);
    }

    #[test]
    fn differing_limits() {
        let loc = p_local(&base(), 1.0).unwrap().probability;
        let r = p_differing(&base(), 1.0, 1.0).unwrap();
        assert!(r.residues_omitted && rel(r.probability, loc) < 1e-12);
        let p = base();
        let k2 = 0.7;
        let got = p_differing(&p, 1e-6, k2).unwrap().probability;
        let want = p_local(&p, k2).unwrap().probability / 4.0
            + (p.lambda / (2.0 * p.sigma * p.omega)).powi(2) * (-(p.sigma * p.omega).powi(2)).exp()
                / (8.0 * PI);
        assert!(rel(got, want) < 1e-10);
        let ab = p_differing(&p, 0.3, 1.7).unwrap().probability;
        let ba = p_differing(&p, 1.7, 0.3).unwrap().probability;
        assert!(rel(ab, ba) < 1e-14);
    }

    #[test]
    fn refuses_invalid_parameters() {
        let bad = DetectorParams::new(4.0, 0.01, 1.0).unwrap();
        assert!(matches!(p_local(&bad, 1.0), Err(Error::Validity(_))));
        assert!(matches!(
            p_parallel(&bad, 1.0, 1.0),
            Err(Error::Validity(_))
        ));
        assert!(matches!(
            p_differing(&bad, 0.1, 1.0),
            Err(Error::Validity(_))
        ));
        let neg = DetectorParams::new(-1.0, 0.01, 0.1).unwrap();
        assert!(matches!(p_local(&neg, 1.0), Err(Error::Validity(_))));
        let half_pi = DetectorParams::new(std::f64::consts::FRAC_PI_2, 0.01, 1.0).unwrap();
        assert!(matches!(
            p_antiparallel(&half_pi, 1.0, 2.06),
            Err(Error::Validity(_))
        ));
        assert!(DetectorParams::new(1.0, 0.01, 0.0).is_err());
    }

    #[test]
    fn antiparallel_is_asymmetric() {
        let p = DetectorParams::new(0.5 / 0.01, 0.01, 0.1).unwrap();
        let a = p_antiparallel(&p, 1.0, 1.0).unwrap().probability;
        let b = p_antiparallel(&p, 1.0, -1.0).unwrap().probability;
        assert!(a != b && rel(a, b) > 1e-3);
    }
}
