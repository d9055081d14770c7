//! Conditional detector state after measuring the control in
//! `|c⟩_F = N^{−1/2} Σᵢ e^{−iφᵢ}|cᵢ⟩`.
//!
//! To second order in λ the detector state is diagonal:
//!
//! ```text
//! p_excited = (λ²/N²) Σ_ab e^{i(φ_b − φ_a)} F_ab
//! p_ground  = (1/N²) [ N + 2 Σ_{a<b} cos(φ_a − φ_b)
//!                      − λ² Re Σ_ab e^{i(φ_b − φ_a)} (T_b + conj T_a) ]
//! ```
//!
//! with `F_ab = ∬ χ(τ')χ̄(τ'') W^{ab}(τ', τ'')` over the whole plane and
//! `T_a` the same integral of `W^{aa}` restricted to τ'' ≤ τ'. The cross
//! terms of the ground population carry `sin(φ_a − φ_b) Im(T_a − T_b)`
//! alongside the cosine terms.
//!
//! `Im T_a` diverges as ε → 0, but the divergence is the same for every
//! branch and drops out of every population, so a renormalised value is
//! stored.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::kinematics::TrajectoryScenario;
use crate::response_closed::DetectorParams;
use crate::response_numeric::{
    full_integral, time_ordered_imag_renormalised, QuadratureConfig, RegulatorSchedule,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ControlState {
    phases: Vec<f64>,
}

impl ControlState {
    /// Phases are shifted so that φ₁ = 0.
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(invalid("control state needs at least one branch"));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(invalid("control phases must be finite"));
        }
        let p0 = phases[0];
        Ok(Self {
            phases: phases.into_iter().map(|p| p - p0).collect(),
        })
    }

    /// Equal-weight state measured back in itself.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// Two branches with Δφ = φ₁ − φ₂.
    pub fn two_branch(delta_phi: f64) -> Result<Self> {
        Self::new(vec![0.0, -delta_phi])
    }

    pub fn branch_count(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// Field integrals of one scenario, without the coupling λ.
#[derive(Debug, Clone, PartialEq)]
pub struct WightmanIntegrals {
    /// `full_grid[a][b]` is `F_{a+1, b+1}`.
    pub full_grid: Vec<Vec<Complex64>>,
    /// `time_ordered[a]` is `T_{a+1}` with renormalised imaginary part.
    pub time_ordered: Vec<Complex64>,
    pub error_estimate: f64,
}

impl WightmanIntegrals {
    pub fn branch_count(&self) -> usize {
        self.time_ordered.len()
    }

    pub fn full(&self, a: usize, b: usize) -> Complex64 {
        self.full_grid[a - 1][b - 1]
    }

    /// Largest `|F_ab − conj F_ba|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.branch_count();
        let mut d: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                d = d.max((self.full_grid[a][b] - self.full_grid[b][a].conj()).norm());
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorDensityMatrix {
    pub p_ground_unnormalized: f64,
    pub p_excited_unnormalized: f64,
    pub norm: f64,
    /// NaN when `norm <= 0`.
    pub p_excited_conditional: f64,
}

impl DetectorDensityMatrix {
    /// Always zero at second order; kept so callers can assemble the full matrix.
    pub fn off_diagonal(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// Evaluates every `F_ab` and `T_a`; the pairs run in parallel.
pub fn compute_wightman_integrals(
    sc: &TrajectoryScenario,
    params: &DetectorParams,
    sched: &RegulatorSchedule,
    quad: &QuadratureConfig,
) -> Result<WightmanIntegrals> {
    sc.validate()?;
    params.validate()?;
    sched.validate()?;
    quad.validate()?;
    let n = sc.branch_count();
    let index: Vec<(usize, usize)> = (1..=n).flat_map(|a| (1..=n).map(move |b| (a, b))).collect();
    let entries: Vec<(Complex64, f64)> = index
        .par_iter()
        .map(|&(a, b)| full_integral(sc, params, a, b, sched, quad))
        .collect::<Result<_>>()?;
    let imag: Vec<(f64, f64)> = (1..=n)
        .into_par_iter()
        .map(|a| time_ordered_imag_renormalised(sc.kappa(a), params, quad))
        .collect::<Result<_>>()?;
    let mut full_grid = vec![vec![Complex64::default(); n]; n];
    let mut error_estimate: f64 = 0.0;
    for (&(a, b), &(v, e)) in index.iter().zip(&entries) {
        full_grid[a - 1][b - 1] = v;
        error_estimate = error_estimate.max(e);
    }
    let time_ordered = (0..n)
        .map(|a| {
            error_estimate = error_estimate.max(imag[a].1);
            Complex64::new(0.5 * full_grid[a][a].re, imag[a].0)
        })
        .collect();
    Ok(WightmanIntegrals {
        full_grid,
        time_ordered,
        error_estimate,
    })
}

pub fn conditional_density_matrix(
    integrals: &WightmanIntegrals,
    control: &ControlState,
    params: &DetectorParams,
) -> Result<DetectorDensityMatrix> {
    let n = integrals.branch_count();
    if control.branch_count() != n || integrals.full_grid.len() != n {
        return Err(invalid(format!(
            "control has {} branches, integrals have {n}",
            control.branch_count()
        )));
    }
    let l2 = params.lambda * params.lambda;
    let phi = control.phases();
    let mut zeroth = n as f64;
    let mut excited = Complex64::default();
    let mut ground_field = Complex64::default();
    for a in 0..n {
        for b in 0..n {
            let phase = Complex64::from_polar(1.0, phi[b] - phi[a]);
            if a < b {
                zeroth += 2.0 * (phi[a] - phi[b]).cos();
            }
            excited += phase * integrals.full_grid[a][b];
            ground_field += phase * (integrals.time_ordered[b] + integrals.time_ordered[a].conj());
        }
    }
    let n2 = (n * n) as f64;
    let p_excited_unnormalized = l2 * excited.re / n2;
    let p_ground_unnormalized = (zeroth - l2 * ground_field.re) / n2;
    let norm = p_ground_unnormalized + p_excited_unnormalized;
    let p_excited_conditional = if norm > 0.0 {
        p_excited_unnormalized / norm
    } else {
        f64::NAN
    };
    Ok(DetectorDensityMatrix {
        p_ground_unnormalized,
        p_excited_unnormalized,
        norm,
        p_excited_conditional,
    })
}

/// Probability of finding the control in the measured state.
pub fn conditional_norm(dm: &DetectorDensityMatrix) -> f64 {
    dm.norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityResult {
    /// Mean of the norm over the phase grid.
    pub mean: f64,
    /// Amplitude of the O(λ²) oscillation once `(1 + cos Δφ)/2` is removed.
    pub amplitude: f64,
    /// `(Δφ, norm)` for each grid point.
    pub norms: Vec<(f64, f64)>,
}

/// Scans Δφ for two branches and fits the O(λ²) part of the norm to
/// `A cos Δφ + B sin Δφ + C`.
pub fn visibility_scan(
    integrals: &WightmanIntegrals,
    params: &DetectorParams,
    phase_grid: &[f64],
) -> Result<VisibilityResult> {
    if integrals.branch_count() != 2 {
        return Err(invalid("visibility_scan needs two branches"));
    }
    if phase_grid.is_empty() || phase_grid.iter().any(|p| !p.is_finite()) {
        return Err(invalid("phase grid must be non-empty and finite"));
    }
    let mut norms = Vec::with_capacity(phase_grid.len());
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for &dphi in phase_grid {
        let dm = conditional_density_matrix(integrals, &ControlState::two_branch(dphi)?, params)?;
        let norm = conditional_norm(&dm);
        norms.push((dphi, norm));
        let row = Vector3::new(dphi.cos(), dphi.sin(), 1.0);
        ata += row * row.transpose();
        aty += row * (norm - 0.5 * (1.0 + dphi.cos()));
    }
    let mean = norms.iter().map(|x| x.1).sum::<f64>() / norms.len() as f64;
    // Too few distinct phases leave the fit singular; take the least-squares
    // solution from the SVD in that case.
    let coef = match ata.lu().solve(&aty) {
        Some(c) if c.iter().all(|v| v.is_finite()) => c,
        _ => ata
            .svd(true, true)
            .solve(&aty, 1e-14)
            .map_err(|e| invalid(e.to_string()))?,
    };
    let amplitude = coef[0].hypot(coef[1]);
    Ok(VisibilityResult {
        mean,
        amplitude,
        norms,
    })
}

/// Uniform grid of `n` phases on [0, 2π).
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::needless_range_loop)]
    fn toy(n: usize) -> WightmanIntegrals {
        let mut full_grid = vec![vec![Complex64::default(); n]; n];
        for a in 0..n {
            for b in 0..n {
                full_grid[a][b] = if a == b {
                    Complex64::new(0.3 + 0.1 * a as f64, 0.0)
                } else if a < b {
                    Complex64::new(0.05 * (a + b) as f64, 0.02 * b as f64)
                } else {
                    Complex64::new(0.05 * (a + b) as f64, -0.02 * a as f64)
                };
            }
        }
        let time_ordered = (0..n)
            .map(|a| Complex64::new(0.5 * full_grid[a][a].re, 0.01 * a as f64))
            .collect();
        WightmanIntegrals {
            full_grid,
            time_ordered,
            error_estimate: 0.0,
        }
    }

    fn params(lambda: f64) -> DetectorParams {
        DetectorParams::new(1.0, lambda, 0.1).unwrap()
    }

    #[test]
    fn canonical_phases() {
        let c = ControlState::new(vec![0.5, 1.0, -0.2]).unwrap();
        assert_eq!(c.phases()[0], 0.0);
        assert!((c.phases()[1] - 0.5).abs() < 1e-15);
        assert!(ControlState::new(vec![]).is_err());
        assert!(ControlState::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn free_evolution_norms() {
        let ints = toy(2);
        let dm = conditional_density_matrix(
            &ints,
            &ControlState::two_branch(0.0).unwrap(),
            &params(0.0),
        )
        .unwrap();
        assert_eq!(conditional_norm(&dm), 1.0);
        let dm =
            conditional_density_matrix(&ints, &ControlState::two_branch(PI).unwrap(), &params(0.0))
                .unwrap();
        assert!(conditional_norm(&dm).abs() < 1e-15);
    }

    #[test]
    fn single_branch_is_conserved() {
        let ints = toy(1);
        let dm =
            conditional_density_matrix(&ints, &ControlState::uniform(1).unwrap(), &params(0.1))
                .unwrap();
        assert!((dm.p_excited_unnormalized - 0.01 * 0.3).abs() < 1e-15);
        assert!((dm.norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pi_phase_kills_zeroth_order_ground() {
        let ints = toy(2);
        let dm =
            conditional_density_matrix(&ints, &ControlState::two_branch(PI).unwrap(), &params(0.1))
                .unwrap();
        // Only the sin Δφ Im(T₁ − T₂) term could survive, and sin π ≈ 1e-16.
        assert!(dm.p_ground_unnormalized.abs() < 1e-15);
    }

    #[test]
    fn mismatched_branches() {
        assert!(conditional_density_matrix(
            &toy(3),
            &ControlState::uniform(2).unwrap(),
            &params(0.1)
        )
        .is_err());
        assert!(visibility_scan(&toy(3), &params(0.1), &phase_grid(8)).is_err());
    }

    #[test]
    fn visibility_scales_as_lambda_squared() {
        let ints = toy(2);
        let a = visibility_scan(&ints, &params(0.01), &phase_grid(16)).unwrap();
        let b = visibility_scan(&ints, &params(0.02), &phase_grid(16)).unwrap();
        assert!(a.amplitude > 0.0);
        assert!((b.amplitude / a.amplitude - 4.0).abs() < 1e-9);
        assert_eq!(
            visibility_scan(&ints, &params(0.0), &phase_grid(16))
                .unwrap()
                .amplitude,
            0.0
        );
    }
}
