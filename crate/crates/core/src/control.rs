//! Minimal-norm (HUM) interior controls driving the Galerkin state to rest at time `T`.
//!
//! With `i u' = H u + 1_Omega f`, the control `f(s) = 1_Omega U(s) phi` gives
//! `u(T) = U(T) (u0 - i G phi)`, so `phi` solves `G phi = -i u0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{composite_gauss, conjugate_gradient, CVector, I};
use crate::observability::{build_gramian, Gramian};
use crate::spectral2d::Hamiltonian2D;
use crate::torus::{analyze, restrict_to_region, FourierField, GridFunction, ObservationRegion};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ControlOptions {
    pub cg_tol: f64,
    pub max_iter: usize,
    /// Number of uniform time samples of the control, endpoints included.
    pub samples: usize,
    /// Grid size; defaults to `4N + 1`.
    pub grid: Option<usize>,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self { cg_tol: 1e-13, max_iter: 0, samples: 33, grid: None }
    }
}

#[derive(Debug, Clone)]
pub struct ControlSample {
    pub time: f64,
    pub control: GridFunction,
}

#[derive(Debug, Clone)]
pub struct ControlSolution {
    pub phi: FourierField,
    /// `||f||^2_{L^2([0,T] x Omega)} = <G phi, phi>`.
    pub cost: f64,
    /// `||u0 - i G phi||`, the norm of the terminal state.
    pub terminal_norm: f64,
    pub cg_iterations: usize,
    pub observability_constant: f64,
    pub time: f64,
    pub grid: usize,
    pub samples: Vec<ControlSample>,
    pub gramian: Gramian,
}

pub fn synthesize_control(
    h: &Hamiltonian2D,
    region: &ObservationRegion,
    t: f64,
    u0: &FourierField,
    opts: &ControlOptions,
) -> Result<ControlSolution> {
    let m = opts.grid.unwrap_or(4 * h.cutoff + 1);
    let gram = build_gramian(h, region, t, m)?;
    if gram.report.degenerate {
        return invalid("Gramian is singular: region does not observe the box in time T");
    }
    let u = h.eigen.to_eigen(&h.to_vector(u0)?);
    let rhs = &u * (-I);
    let max_iter = if opts.max_iter == 0 { 20 * h.dim() } else { opts.max_iter };
    let cg = conjugate_gradient(|x| &gram.matrix * x, &rhs, opts.cg_tol, max_iter)?;
    let g_phi = &gram.matrix * &cg.solution;
    let cost = cg.solution.dotc(&g_phi).re;
    let terminal_norm = (&u - g_phi * I).norm();
    let phi_vec = h.eigen.from_eigen(&cg.solution);
    let phi = h.to_field(&phi_vec);

    let n = opts.samples.max(2);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let s = t * i as f64 / (n - 1) as f64;
        let (grid, _) = restrict_to_region(&h.to_field(&h.eigen.propagate(&phi_vec, s)), region, m)?;
        samples.push(ControlSample { time: s, control: grid });
    }
    Ok(ControlSolution {
        phi,
        cost,
        terminal_norm,
        cg_iterations: cg.iterations,
        observability_constant: gram.report.constant,
        time: t,
        grid: m,
        samples,
        gramian: gram,
    })
}

/// Re-integrates the controlled equation with composite 8-point Gauss-Legendre on
/// `panels` panels, projecting `1_Omega U(s) phi` back to the box by grid multiplication,
/// and returns `||u(T)||`.
pub fn verify_terminal(
    h: &Hamiltonian2D,
    region: &ObservationRegion,
    solution: &ControlSolution,
    u0: &FourierField,
    panels: usize,
) -> Result<f64> {
    if panels == 0 {
        return invalid("need at least one quadrature panel");
    }
    let t = solution.time;
    let phi = h.to_vector(&solution.phi)?;
    let mut acc = CVector::zeros(h.dim());
    for (s, w) in composite_gauss(0.0, t, panels, 8) {
        let (grid, _) = restrict_to_region(&h.to_field(&h.eigen.propagate(&phi, s)), region, solution.grid)?;
        let f = h.to_vector(&analyze(&grid, h.cutoff)?)?;
        // U(T - s) f = U(T) U(-s) f
        acc += h.eigen.propagate(&f, -s) * Complex64::new(w, 0.0);
    }
    let inner = h.to_vector(u0)? - acc * I;
    Ok(h.eigen.propagate(&inner, t).norm())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostCheck {
    pub cost: f64,
    /// `|<G phi, phi> - Re <-i u0, phi>|`.
    pub identity_error: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Checks `cost = <G phi, phi> = Re <-i u0, phi>` and `cost <= K ||u0||^2`.
pub fn control_cost_bound_check(h: &Hamiltonian2D, solution: &ControlSolution, u0: &FourierField) -> Result<CostCheck> {
    let u = h.to_vector(u0)?;
    let phi = h.to_vector(&solution.phi)?;
    let pairing = phi.dotc(&(&u * (-I))).re;
    let bound = solution.observability_constant * u.norm_squared();
    Ok(CostCheck {
        cost: solution.cost,
        identity_error: (solution.cost - pairing).abs(),
        bound,
        within_bound: solution.cost <= bound * (1.0 + 1e-10) + 1e-14,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral2d::build_hamiltonian;
    use crate::torus::TorusGeometry;

    #[test]
    fn full_torus_closed_form() {
        // G = T I, so phi = -i u0 / T and cost = ||u0||^2 / T
        let g = TorusGeometry::square();
        let h = build_hamiltonian(g, &FourierField::zeros(g, 0), 2).unwrap();
        let u0 = FourierField::from_modes(g, 2, [((1, -1), Complex64::new(0.3, 0.4)), ((0, 2), Complex64::new(1.0, 0.0))])
            .unwrap();
        let t = 1.3;
        let sol = synthesize_control(&h, &ObservationRegion::full(g), t, &u0, &ControlOptions::default()).unwrap();
        let want = u0.scaled(-I / t);
        assert!(sol.phi.sub(&want).l2_norm() < 1e-12);
        assert!((sol.cost - u0.l2_norm().powi(2) / t).abs() < 1e-12);
        assert!(sol.terminal_norm < 1e-12);
    }
}
