//! Observability Gramians on the Galerkin box and rational-direction reductions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, iota, CMatrix, CVector, EigenSystem, ZERO};
use crate::spectral1d::Potential1D;
use crate::spectral2d::{build_hamiltonian, Hamiltonian2D, ProjectorSpec};
use crate::torus::{fft2, FourierField, ModeBox, ObservationRegion, TorusGeometry};

/// Galerkin matrix of the sampled indicator,
/// `M_{nm} = (1/m^2) sum_{z in Omega} exp(i (w_m - w_n) . z)`; requires `m >= 4N + 1`.
pub fn region_gram(region: &ObservationRegion, cutoff: usize, m: usize) -> Result<CMatrix> {
    if m < 4 * cutoff + 1 {
        return Err(Error::Aliasing { needed: 4 * cutoff + 1, got: m });
    }
    let mut hat: Vec<Complex64> =
        region.mask(m).into_iter().map(|b| if b { Complex64::new(1.0, 0.0) } else { ZERO }).collect();
    fft2(&mut hat, m, FftDirection::Inverse);
    let inv = 1.0 / (m * m) as f64;
    let b = ModeBox::new(cutoff);
    let mi = m as i64;
    Ok(CMatrix::from_fn(b.len(), b.len(), |r, c| {
        let (n, k) = (b.mode(r), b.mode(c));
        let j = (k.0 - n.0).rem_euclid(mi) as usize;
        let l = (k.1 - n.1).rem_euclid(mi) as usize;
        hat[j * m + l] * inv
    }))
}

/// Eigenbasis Gramian `G_ab = (Phi^* M Phi)_ab iota(lambda_a - lambda_b, T)`.
pub fn gramian_matrix(eigen: &EigenSystem, region_gram: &CMatrix, t: f64) -> CMatrix {
    let m = eigen.vectors.ad_mul(&(region_gram * &eigen.vectors));
    let l = &eigen.values;
    CMatrix::from_fn(m.nrows(), m.ncols(), |a, b| m[(a, b)] * iota(l[a] - l[b], t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramianReport {
    pub cutoff: usize,
    pub dim: usize,
    pub time: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `1 / lambda_min`, infinite when the Gramian is numerically singular.
    pub constant: f64,
    pub degenerate: bool,
}

pub(crate) fn spectrum_report(g: &CMatrix, t: f64) -> Result<(f64, f64, f64, bool)> {
    let ev = hermitian_eigen(g)?.values;
    let (lmin, lmax) = (ev[0], ev[ev.len() - 1]);
    let degenerate = lmin <= 1e-12 * t;
    Ok((lmin, lmax, if degenerate { f64::INFINITY } else { 1.0 / lmin }, degenerate))
}

#[derive(Debug, Clone)]
pub struct Gramian {
    /// Gramian in the eigenbasis of the operator it was built from.
    pub matrix: CMatrix,
    pub report: GramianReport,
}

impl Gramian {
    /// `<G u, u>` for a coefficient vector in the Fourier basis.
    pub fn quadratic_form(&self, eigen: &EigenSystem, u: &CVector) -> f64 {
        let c = eigen.to_eigen(u);
        c.dotc(&(&self.matrix * &c)).re
    }

    /// `G u` in the Fourier basis.
    pub fn apply(&self, eigen: &EigenSystem, u: &CVector) -> CVector {
        eigen.from_eigen(&(&self.matrix * eigen.to_eigen(u)))
    }
}

pub fn build_gramian(h: &Hamiltonian2D, region: &ObservationRegion, t: f64, m: usize) -> Result<Gramian> {
    if !(t > 0.0) {
        return invalid("observation time must be positive");
    }
    if region.geometry != h.geometry {
        return invalid("region lives on a different torus");
    }
    let g = gramian_matrix(&h.eigen, &region_gram(region, h.cutoff, m)?, t);
    let (lambda_min, lambda_max, constant, degenerate) = spectrum_report(&g, t)?;
    Ok(Gramian {
        matrix: g,
        report: GramianReport { cutoff: h.cutoff, dim: h.dim(), time: t, lambda_min, lambda_max, constant, degenerate },
    })
}

/// `K(N)` for each cutoff. All cutoffs share one grid of size `m` (default `4 max N + 1`)
/// so that the region matrices are nested.
pub fn observability_constant(
    geometry: TorusGeometry,
    potential: &FourierField,
    region: &ObservationRegion,
    t: f64,
    cutoffs: &[usize],
    m: Option<usize>,
) -> Result<Vec<GramianReport>> {
    let nmax = cutoffs.iter().copied().max().unwrap_or(0);
    let m = m.unwrap_or(4 * nmax + 1);
    cutoffs
        .iter()
        .map(|&n| Ok(build_gramian(&build_hamiltonian(geometry, potential, n)?, region, t, m)?.report))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShellReport {
    pub h: f64,
    pub rho: f64,
    pub modes: usize,
    pub lambda_min: f64,
    pub constant: f64,
    pub degenerate: bool,
}

/// Gramian restricted to the range of each spectral projector, i.e. the principal
/// submatrix on eigenvectors with nonzero weight.
pub fn shell_observability_scan(
    h: &Hamiltonian2D,
    specs: &[ProjectorSpec],
    region: &ObservationRegion,
    t: f64,
    m: usize,
) -> Result<Vec<ShellReport>> {
    let g = build_gramian(h, region, t, m)?;
    specs
        .iter()
        .map(|spec| {
            let idx: Vec<usize> =
                h.eigen.values.iter().enumerate().filter(|(_, &l)| spec.weight(l) != 0.0).map(|(i, _)| i).collect();
            if idx.is_empty() {
                return Ok(ShellReport {
                    h: spec.h,
                    rho: spec.rho,
                    modes: 0,
                    lambda_min: f64::NAN,
                    constant: f64::NAN,
                    degenerate: true,
                });
            }
            let sub = CMatrix::from_fn(idx.len(), idx.len(), |a, b| g.matrix[(idx[a], idx[b])]);
            let (lambda_min, _, constant, degenerate) = spectrum_report(&sub, t)?;
            Ok(ShellReport { h: spec.h, rho: spec.rho, modes: idx.len(), lambda_min, constant, degenerate })
        })
        .collect()
}

fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, s, t) = extended_gcd(b, a.rem_euclid(b));
        (g, t, s - (a.div_euclid(b)) * t)
    }
}

/// Adapted frame for the closed geodesic in lattice direction `(pA, qB)`.
/// `F(x, y) = x xi_perp + y xi`; pulled-back functions are `b`-periodic in `y` and satisfy
/// `F*u(x + a, y) = F*u(x, y - gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionFrame {
    pub geometry: TorusGeometry,
    pub p: i64,
    pub q: i64,
    /// Cofactors with `p q' - q p' = 1`.
    pub cofactors: (i64, i64),
    pub xi: [f64; 2],
    pub xi_perp: [f64; 2],
    pub b: f64,
    pub a: f64,
    pub gamma: f64,
}

impl DirectionFrame {
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.xi_perp[0] + y * self.xi[0], x * self.xi_perp[1] + y * self.xi[1])
    }
}

pub fn direction_frame(geometry: TorusGeometry, p: i64, q: i64) -> Result<DirectionFrame> {
    let (g, s, t) = extended_gcd(p, q);
    if g != 1 {
        return invalid(format!("direction ({p}, {q}) is not primitive"));
    }
    let (pp, qq) = (-t, s);
    debug_assert_eq!(p * qq - q * pp, 1);
    let (ax, by) = (geometry.period_x, geometry.period_y);
    let b = ((p as f64 * ax).powi(2) + (q as f64 * by).powi(2)).sqrt();
    let xi = [p as f64 * ax / b, q as f64 * by / b];
    let xi_perp = [-q as f64 * by / b, p as f64 * ax / b];
    let a = ax * by / b;
    let gamma = ((pp * p) as f64 * ax * ax + (qq * q) as f64 * by * by) / b;
    Ok(DirectionFrame { geometry, p, q, cofactors: (pp, qq), xi, xi_perp, b, a, gamma: gamma.rem_euclid(b) })
}

/// `W(x) = (1/b) int_0^b F*V(x, y) dy = sum_j W_j exp(2 pi i j x / a)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AveragedPotential {
    pub period: f64,
    pub coeffs: Vec<Complex64>,
}

impl AveragedPotential {
    pub fn max_mode(&self) -> i64 {
        (self.coeffs.len() / 2) as i64
    }

    pub fn get(&self, j: i64) -> Complex64 {
        let c = self.max_mode();
        if j.abs() > c { ZERO } else { self.coeffs[(j + c) as usize] }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let c = self.max_mode();
        (-c..=c).map(|j| self.get(j) * Complex64::from_polar(1.0, 2.0 * PI * j as f64 * x / self.period)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.period * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// The same coefficients read on `[0, 2 pi)`.
    pub fn as_unit_period_potential(&self) -> Result<Potential1D> {
        Potential1D::from_coeffs(self.coeffs.clone())
    }
}

/// Averages along the closed geodesic by the trapezoid rule in `y` with `quad` nodes
/// (exact once `quad > N_V (|p| + |q|)`) and recovers the coefficients by a DFT in `x`.
pub fn averaged_potential(v: &FourierField, frame: &DirectionFrame, quad: Option<usize>) -> Result<AveragedPotential> {
    if v.geometry != frame.geometry {
        return invalid("potential lives on a different torus");
    }
    let nv = v.support_cutoff() as i64;
    let quad = quad.unwrap_or((nv * (frame.p.abs() + frame.q.abs()) + 1) as usize).max(1);
    let j_max = nv / frame.p.abs().max(frame.q.abs());
    let nx = (2 * j_max + 1) as usize;
    let samples: Vec<Complex64> = (0..nx)
        .map(|i| {
            let x = frame.a * i as f64 / nx as f64;
            (0..quad)
                .map(|l| {
                    let (zx, zy) = frame.map(x, frame.b * l as f64 / quad as f64);
                    v.eval(zx, zy)
                })
                .sum::<Complex64>()
                / quad as f64
        })
        .collect();
    let coeffs = (-j_max..=j_max)
        .map(|j| {
            samples
                .iter()
                .enumerate()
                .map(|(i, s)| s * Complex64::from_polar(1.0, -2.0 * PI * (j * i as i64) as f64 / nx as f64))
                .sum::<Complex64>()
                / nx as f64
        })
        .collect();
    Ok(AveragedPotential { period: frame.a, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::Rect;

    #[test]
    fn frames_of_axes_and_diagonal() {
        let g = TorusGeometry::square();
        let f = direction_frame(g, 0, 1).unwrap();
        assert!((f.a - 2.0 * PI).abs() < 1e-12);
        assert!(f.gamma.abs() < 1e-12 || (f.gamma - f.b).abs() < 1e-12);
        let f = direction_frame(g, 1, 2).unwrap();
        assert!((f.b - 2.0 * PI * 5f64.sqrt()).abs() < 1e-12);
        assert!((f.a - 2.0 * PI / 5f64.sqrt()).abs() < 1e-12);
        assert!(direction_frame(g, 2, 4).is_err());
        for (p, q) in [(3, -5), (-2, 7), (1, 0), (-1, 0)] {
            let f = direction_frame(g, p, q).unwrap();
            assert_eq!(p * f.cofactors.1 - q * f.cofactors.0, 1);
        }
    }

    #[test]
    fn region_matrix_is_contraction() {
        let g = TorusGeometry::square();
        let r = ObservationRegion::new(g, vec![Rect::new(0.0, PI, 0.0, PI)]).unwrap();
        let m = region_gram(&r, 2, 9).unwrap();
        let ev = hermitian_eigen(&m).unwrap().values;
        assert!(ev[0] >= -1e-12 && ev[ev.len() - 1] <= 1.0 + 1e-12);
        assert!(matches!(region_gram(&r, 2, 8), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn full_region_gives_time() {
        let g = TorusGeometry::square();
        let v = FourierField::from_modes(g, 1, [((1, 0), Complex64::new(1.0, 0.0)), ((-1, 0), Complex64::new(1.0, 0.0))])
            .unwrap();
        let h = build_hamiltonian(g, &v, 2).unwrap();
        let gr = build_gramian(&h, &ObservationRegion::full(g), 0.8, 9).unwrap();
        assert!((gr.report.lambda_min - 0.8).abs() < 1e-12);
        assert!((gr.report.lambda_max - 0.8).abs() < 1e-12);
    }
}
