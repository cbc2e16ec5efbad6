//! Galerkin Schroedinger operators `-Laplacian + V` on a Fourier box of the torus.

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{composite_gauss, hermitian_eigen, CMatrix, CVector, EigenSystem, I, ZERO};
use crate::torus::{analyze, fft2, lp_norm, synthesize_grid, FourierField, LpExponent, ModeBox, TorusGeometry};

#[derive(Debug, Clone)]
pub struct Hamiltonian2D {
    pub geometry: TorusGeometry,
    pub cutoff: usize,
    /// Potential as seen by the box, i.e. truncated to cutoff `2N`.
    pub potential: FourierField,
    pub matrix: CMatrix,
    pub eigen: EigenSystem,
}

/// `H_{nm} = delta_{nm} |w_n|^2 + V^(n - m)` where `V = sum V^(k) exp(i w_k . z)`.
pub fn build_hamiltonian(geometry: TorusGeometry, potential: &FourierField, cutoff: usize) -> Result<Hamiltonian2D> {
    if potential.geometry != geometry {
        return invalid("potential lives on a different torus");
    }
    let scale = potential.l2_norm().max(1.0);
    if !potential.is_real(1e-12 * scale) {
        return invalid("potential is not real: V_{-n} != conj(V_n)");
    }
    let v = potential.with_cutoff(2 * cutoff);
    let b = ModeBox::new(cutoff);
    let s = 1.0 / geometry.area().sqrt();
    let matrix = CMatrix::from_fn(b.len(), b.len(), |r, c| {
        let (n, m) = (b.mode(r), b.mode(c));
        let kin = if r == c { geometry.weighted_norm_sq(n) } else { 0.0 };
        v.get((n.0 - m.0, n.1 - m.1)) * s + kin
    });
    let eigen = hermitian_eigen(&matrix)?;
    Ok(Hamiltonian2D { geometry, cutoff, potential: v, matrix, eigen })
}

impl Hamiltonian2D {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn mode_box(&self) -> ModeBox {
        ModeBox::new(self.cutoff)
    }

    /// Coefficient vector of a field on this box; fields on larger boxes are rejected.
    pub fn to_vector(&self, u: &FourierField) -> Result<CVector> {
        if u.geometry != self.geometry {
            return invalid("field lives on a different torus");
        }
        if u.cutoff > self.cutoff {
            return invalid(format!("field cutoff {} exceeds operator cutoff {}", u.cutoff, self.cutoff));
        }
        Ok(CVector::from_vec(u.with_cutoff(self.cutoff).into_coeffs()))
    }

    pub fn to_field(&self, v: &CVector) -> FourierField {
        FourierField::from_coeffs(self.geometry, self.cutoff, v.iter().copied().collect()).expect("box length")
    }

    pub fn free_phase(&self, t: f64) -> CVector {
        let b = self.mode_box();
        CVector::from_iterator(b.len(), b.modes().map(|n| Complex64::from_polar(1.0, -t * self.geometry.weighted_norm_sq(n))))
    }
}

/// `exp(-itH) u0` through the eigendecomposition.
pub fn propagate(h: &Hamiltonian2D, u0: &FourierField, t: f64) -> Result<FourierField> {
    Ok(h.to_field(&h.eigen.propagate(&h.to_vector(u0)?, t)))
}

fn grid_frequency(j: usize, m: usize) -> i64 {
    if j <= m / 2 { j as i64 } else { j as i64 - m as i64 }
}

/// Strang splitting on an odd `m x m` collocation grid: half free flight in coefficients,
/// full potential phase `exp(-i dt V)` on the grid, half free flight. The result lives on
/// the box of cutoff `(m - 1) / 2`.
pub fn split_step(
    geometry: TorusGeometry,
    potential: &FourierField,
    u0: &FourierField,
    t: f64,
    steps: usize,
    m: usize,
) -> Result<FourierField> {
    if steps == 0 {
        return invalid("split_step needs at least one step");
    }
    if m % 2 == 0 {
        return invalid("split_step grid size must be odd");
    }
    let need = 2 * u0.cutoff.max(potential.support_cutoff()) + 1;
    if m < need {
        return Err(Error::Aliasing { needed: need, got: m });
    }
    if !potential.is_real(1e-12 * potential.l2_norm().max(1.0)) {
        return invalid("potential is not real");
    }
    let dt = t / steps as f64;
    let vgrid = synthesize_grid(&potential.with_cutoff((m - 1) / 2), m)?;
    let vphase: Vec<Complex64> = vgrid.samples.iter().map(|v| Complex64::from_polar(1.0, -dt * v.re)).collect();
    let mut half = vec![ZERO; m * m];
    for j in 0..m {
        for k in 0..m {
            let w = geometry.weighted_norm_sq((grid_frequency(j, m), grid_frequency(k, m)));
            half[j * m + k] = Complex64::from_polar(1.0, -0.5 * dt * w);
        }
    }
    let mut state = vec![ZERO; m * m];
    let mi = m as i64;
    for (i, n) in u0.mode_box().modes().enumerate() {
        state[n.0.rem_euclid(mi) as usize * m + n.1.rem_euclid(mi) as usize] = u0.coeffs()[i];
    }
    let inv = 1.0 / (m * m) as f64;
    for _ in 0..steps {
        state.iter_mut().zip(&half).for_each(|(s, p)| *s *= p);
        fft2(&mut state, m, FftDirection::Inverse);
        state.iter_mut().zip(&vphase).for_each(|(s, p)| *s *= p * inv);
        fft2(&mut state, m, FftDirection::Forward);
        state.iter_mut().zip(&half).for_each(|(s, p)| *s *= p);
    }
    let cutoff = (m - 1) / 2;
    let mut out = FourierField::zeros(geometry, cutoff);
    let b = out.mode_box();
    for (i, n) in b.modes().enumerate() {
        out.coeffs_mut()[i] = state[n.0.rem_euclid(mi) as usize * m + n.1.rem_euclid(mi) as usize];
    }
    Ok(out)
}

/// Cutoff profiles `chi` with `chi(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bump {
    /// C^2 piecewise polynomial: 1 on `[-1/2, 1/2]`, 0 outside `(-1, 1)`.
    Smooth,
    /// Indicator of `(-1, 1)`.
    Sharp,
    /// Indicator of `[-1, 1]`.
    SharpClosed,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            Bump::Sharp => {
                if a < 1.0 - 1e-9 { 1.0 } else { 0.0 }
            }
            Bump::SharpClosed => {
                if a <= 1.0 + 1e-9 { 1.0 } else { 0.0 }
            }
            Bump::Smooth => {
                if a <= 0.5 {
                    1.0
                } else if a >= 1.0 {
                    0.0
                } else {
                    let s = 2.0 * a - 1.0;
                    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSpec {
    pub h: f64,
    pub rho: f64,
    pub profile: Bump,
}

impl ProjectorSpec {
    pub fn weight(&self, lambda: f64) -> f64 {
        self.profile.eval((self.h * self.h * lambda - 1.0) / self.rho)
    }

    fn check(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 1.0 && self.rho > 0.0 && self.rho <= 1.0) {
            return invalid(format!("projector needs 0 < h <= 1 and 0 < rho <= 1, got h={} rho={}", self.h, self.rho));
        }
        Ok(())
    }
}

/// `chi((h^2 H - 1) / rho) u`.
pub fn spectral_projector(h: &Hamiltonian2D, spec: &ProjectorSpec, u: &FourierField) -> Result<FourierField> {
    spec.check()?;
    let v = h.eigen.apply_fn(&h.to_vector(u)?, |l| Complex64::new(spec.weight(l), 0.0));
    Ok(h.to_field(&v))
}

/// Indices of eigenvalues kept by a sharp projector.
pub fn projector_indices(h: &Hamiltonian2D, spec: &ProjectorSpec) -> Result<Vec<usize>> {
    spec.check()?;
    Ok(h.eigen.values.iter().enumerate().filter(|(_, &l)| spec.weight(l) == 1.0).map(|(i, _)| i).collect())
}

/// `P_N (V u)` by grid multiplication on a grid large enough to avoid aliasing into the box.
pub fn apply_potential(v: &FourierField, u: &FourierField, cutoff: usize) -> Result<FourierField> {
    let m = v.support_cutoff() + u.cutoff + cutoff + 1;
    let m = m.max(2 * u.cutoff.max(v.cutoff) + 1);
    let vg = synthesize_grid(v, m)?;
    let mut ug = synthesize_grid(u, m)?;
    ug.samples.iter_mut().zip(&vg.samples).for_each(|(a, b)| *a *= b.re);
    analyze(&ug, cutoff)
}

/// Relative residual of the Duhamel formula
/// `u(t) = exp(it Lap) u0 - i int_0^t exp(i(t-s) Lap) V u(s) ds`
/// with the integral by composite two-point Gauss-Legendre on `panels` panels.
pub fn duhamel_residual(h: &Hamiltonian2D, u0: &FourierField, t: f64, panels: usize) -> Result<f64> {
    if panels == 0 {
        return invalid("need at least one quadrature panel");
    }
    let v0 = h.to_vector(u0)?;
    let norm = v0.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let ut = h.eigen.propagate(&v0, t);
    let mut rhs = v0.component_mul(&h.free_phase(t));
    for (s, w) in composite_gauss(0.0, t, panels, 2) {
        let us = h.to_field(&h.eigen.propagate(&v0, s));
        let vu = CVector::from_vec(apply_potential(&h.potential, &us, h.cutoff)?.into_coeffs());
        rhs -= vu.component_mul(&h.free_phase(t - s)) * (I * w);
    }
    Ok((ut - rhs).norm() / norm)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpTruncation {
    pub field: FourierField,
    pub sup_norm: f64,
    pub l2_diff: f64,
}

/// `V_j = chi(2^{-2j} |w|^2) V`.
pub fn littlewood_paley_truncate(v: &FourierField, j: u32, profile: Bump) -> Result<LpTruncation> {
    let mut out = v.clone();
    let scale = 4f64.powi(-(j as i32));
    let b = out.mode_box();
    for (i, n) in b.modes().enumerate() {
        out.coeffs_mut()[i] *= profile.eval(scale * v.geometry.weighted_norm_sq(n));
    }
    let sup_norm = lp_norm(&out, LpExponent::Infinity, 4)?;
    let l2_diff = v.sub(&out).l2_norm();
    Ok(LpTruncation { field: out, sup_norm, l2_diff })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub max_diff: f64,
    pub potential_diff: f64,
    pub ratio: f64,
    pub argmax_time: f64,
}

/// `max_t ||(exp(-itH_V) - exp(-itH_W)) u0|| / (||V - W||_2 ||u0||)` over `samples` uniform times in `(0, T]`.
pub fn propagator_lipschitz(
    hv: &Hamiltonian2D,
    hw: &Hamiltonian2D,
    u0: &FourierField,
    t: f64,
    samples: usize,
) -> Result<LipschitzReport> {
    if hv.cutoff != hw.cutoff || hv.geometry != hw.geometry {
        return invalid("operators live on different boxes");
    }
    let v0 = hv.to_vector(u0)?;
    let potential_diff = hv.potential.sub(&hw.potential).l2_norm();
    let mut max_diff: f64 = 0.0;
    let mut argmax_time = 0.0;
    for i in 1..=samples.max(1) {
        let s = t * i as f64 / samples.max(1) as f64;
        let d = (hv.eigen.propagate(&v0, s) - hw.eigen.propagate(&v0, s)).norm();
        if d > max_diff {
            max_diff = d;
            argmax_time = s;
        }
    }
    let denom = potential_diff * v0.norm();
    let ratio = if denom > 0.0 { max_diff / denom } else { f64::NAN };
    Ok(LipschitzReport { max_diff, potential_diff, ratio, argmax_time })
}
