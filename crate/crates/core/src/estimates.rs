//! Randomized scans of eigenfunction-band, resolvent and Strichartz-type ratios.
//!
//! Ratios of `L^4` to `L^2` norms use the probability measure `dz / (AB)`, so a single
//! Fourier mode has ratio exactly one.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{composite_gauss, iota, CVector, ZERO};
use crate::rng::{complex_vector, random_field, stream};
use crate::spectral1d::{synthesize_1d, FloquetOperator1D};
use crate::spectral2d::Hamiltonian2D;
use crate::torus::{grid_lp_norm, lp_norm, synthesize_grid, FourierField, LpExponent, Mode, TorusGeometry};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusBand {
    pub kappa: f64,
    pub h: f64,
    pub cutoff: usize,
    pub modes: Vec<Mode>,
    /// The box does not contain the whole annulus.
    pub truncated: bool,
}

/// Smallest box cutoff containing `{ |h^2 |w|^2 - 1| <= kappa^2 h^2 }`.
pub fn band_cutoff(geometry: TorusGeometry, kappa: f64, h: f64) -> usize {
    let r = ((1.0 + kappa * kappa * h * h) / (h * h)).sqrt();
    let l = geometry.period_x.max(geometry.period_y);
    (r * l / (2.0 * std::f64::consts::PI)).floor() as usize + 1
}

/// Lattice points with `|h^2 |w_n|^2 - 1| <= kappa^2 h^2` inside the box of `cutoff`.
pub fn annulus_band(geometry: TorusGeometry, kappa: f64, h: f64, cutoff: usize) -> Result<AnnulusBand> {
    if !(h > 0.0 && h <= 1.0 && kappa >= 0.0) {
        return invalid(format!("band needs 0 < h <= 1 and kappa >= 0, got h={h} kappa={kappa}"));
    }
    let c = cutoff as i64;
    let mut modes = Vec::new();
    for n1 in -c..=c {
        for n2 in -c..=c {
            let w = geometry.weighted_norm_sq((n1, n2));
            if (h * h * w - 1.0).abs() <= kappa * kappa * h * h + 1e-12 {
                modes.push((n1, n2));
            }
        }
    }
    let truncated = cutoff < band_cutoff(geometry, kappa, h);
    Ok(AnnulusBand { kappa, h, cutoff, modes, truncated })
}

/// `(AB)^{1/4} ||u||_4 / ||u||_2` for a field supported on `modes`.
pub fn band_ratio(geometry: TorusGeometry, cutoff: usize, modes: &[Mode], coeffs: &[Complex64]) -> Result<f64> {
    let f = FourierField::from_modes(geometry, cutoff, modes.iter().copied().zip(coeffs.iter().copied()))?;
    let l4 = lp_norm(&f, LpExponent::Four, 1)?;
    Ok(geometry.area().powf(0.25) * l4 / f.l2_norm())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub kappa: f64,
    pub h: f64,
    pub band_size: usize,
    pub trials: usize,
    pub max: f64,
    pub mean: f64,
    /// Trial index attaining the maximum; its stream is `zygmund/<kappa>/<h>/<index>`.
    pub witness: usize,
}

pub fn zygmund_stream_label(kappa: f64, h: f64, trial: usize) -> String {
    format!("zygmund/{kappa}/{h}/{trial}")
}

pub fn zygmund_scan(geometry: TorusGeometry, points: &[(f64, f64)], trials: usize, seed: u64) -> Result<Vec<RatioReport>> {
    points
        .par_iter()
        .map(|&(kappa, h)| {
            let band = annulus_band(geometry, kappa, h, band_cutoff(geometry, kappa, h))?;
            if band.modes.is_empty() {
                return invalid(format!("empty band at kappa={kappa} h={h}"));
            }
            let mut max: f64 = 0.0;
            let mut sum = 0.0;
            let mut witness = 0;
            for trial in 0..trials {
                let mut rng = stream(seed, &zygmund_stream_label(kappa, h, trial));
                let c = complex_vector(&mut rng, band.modes.len());
                let r = band_ratio(geometry, band.cutoff, &band.modes, &c)?;
                sum += r;
                if r > max {
                    max = r;
                    witness = trial;
                }
            }
            Ok(RatioReport {
                kappa,
                h,
                band_size: band.modes.len(),
                trials,
                max,
                mean: sum / trials.max(1) as f64,
                witness,
            })
        })
        .collect()
}

/// Least-squares slope of `ln max` against `ln(1 + kappa)`, taken per `h`; returns the largest.
pub fn growth_exponent(reports: &[RatioReport]) -> f64 {
    let mut hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    hs.sort_by(|a, b| a.total_cmp(b));
    hs.dedup();
    let mut worst = f64::NEG_INFINITY;
    for h in hs {
        let pts: Vec<(f64, f64)> =
            reports.iter().filter(|r| r.h == h).map(|r| ((1.0 + r.kappa).ln(), r.max.ln())).collect();
        if pts.len() < 2 {
            continue;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        worst = worst.max(sxy / sxx);
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventReport {
    pub tau: Complex64,
    pub trials: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub max_residual: f64,
    /// `max |lambda - tau| / min |lambda - tau|`.
    pub condition: f64,
}

/// `||(H - tau)^{-1} f||_4 / ||f||_{4/3}` over random `f` on the box.
pub fn resolvent_ratio_scan(
    h: &Hamiltonian2D,
    taus: &[Complex64],
    trials: usize,
    seed: u64,
    oversample: usize,
) -> Result<Vec<ResolventReport>> {
    taus.iter()
        .map(|&tau| {
            if tau.im.abs() < 1.0 {
                return invalid(format!("resolvent scan needs |Im tau| >= 1, got {tau}"));
            }
            let dist: Vec<f64> = h.eigen.values.iter().map(|&l| (Complex64::new(l, 0.0) - tau).norm()).collect();
            let condition = dist.iter().cloned().fold(0.0, f64::max) / dist.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut max_ratio: f64 = 0.0;
            let mut sum = 0.0;
            let mut max_residual: f64 = 0.0;
            for trial in 0..trials {
                let mut rng = stream(seed, &format!("resolvent/{}/{}/{trial}", tau.re, tau.im));
                let f = random_field(&mut rng, h.geometry, h.cutoff);
                let fv = h.to_vector(&f)?;
                let u = h.eigen.apply_fn(&fv, |l| (Complex64::new(l, 0.0) - tau).inv());
                let res = (&h.matrix * &u - &u * tau - &fv).norm() / fv.norm();
                max_residual = max_residual.max(res);
                let ratio = lp_norm(&h.to_field(&u), LpExponent::Four, oversample)?
                    / lp_norm(&f, LpExponent::FourThirds, oversample.max(4))?;
                sum += ratio;
                max_ratio = max_ratio.max(ratio);
            }
            Ok(ResolventReport { tau, trials, max_ratio, mean_ratio: sum / trials.max(1) as f64, max_residual, condition })
        })
        .collect()
}

/// Time-harmonic source `f(t) = exp(-i nu t) g`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicSource {
    pub g: FourierField,
    pub nu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrichartzReport {
    /// `||u||_{L^4_x L^2_t} / data`.
    pub l4l2_ratio: f64,
    /// `||u||_{L^inf_t L^2_x} / data`.
    pub linf_l2_ratio: f64,
    pub data_norm: f64,
}

/// Solves `i u' = H u + f` with the exact Duhamel integral in the eigenbasis and measures
/// mixed norms with Gauss-Legendre in time (`panels` panels of 4 nodes) and an exact
/// `4N + 1` grid in space. The source norm is the smaller of `L^1_t L^2_x` and `L^2_t L^{4/3}_x`.
pub fn strichartz_ratio(
    h: &Hamiltonian2D,
    u0: &FourierField,
    source: Option<&HarmonicSource>,
    t: f64,
    panels: usize,
) -> Result<StrichartzReport> {
    if !(t > 0.0) || panels == 0 {
        return invalid("need T > 0 and at least one panel");
    }
    let a0 = h.eigen.to_eigen(&h.to_vector(u0)?);
    let (ga, nu, fnorm) = match source {
        Some(s) => {
            let gn = s.g.l2_norm();
            let g43 = lp_norm(&s.g, LpExponent::FourThirds, 4)?;
            (h.eigen.to_eigen(&h.to_vector(&s.g)?), s.nu, (t * gn).min(t.sqrt() * g43))
        }
        None => (CVector::zeros(h.dim()), 0.0, 0.0),
    };
    let data = a0.norm() + fnorm;
    let m = 4 * h.cutoff + 1;
    let mut acc = vec![0.0; m * m];
    let mut linf: f64 = 0.0;
    for (s, w) in composite_gauss(0.0, t, panels, 4) {
        let mut c = a0.clone();
        for (i, ci) in c.iter_mut().enumerate() {
            let l = h.eigen.values[i];
            *ci = Complex64::from_polar(1.0, -l * s) * (*ci - Complex64::i() * ga[i] * iota(l - nu, s));
        }
        linf = linf.max(c.norm());
        let grid = synthesize_grid(&h.to_field(&h.eigen.from_eigen(&c)), m)?;
        acc.iter_mut().zip(&grid.samples).for_each(|(a, v)| *a += w * v.norm_sqr());
    }
    let cell = h.geometry.area() / (m * m) as f64;
    let l4l2 = (cell * acc.iter().map(|s| s * s).sum::<f64>()).powf(0.25);
    Ok(StrichartzReport { l4l2_ratio: l4l2 / data, linf_l2_ratio: linf / data, data_norm: data })
}

/// `sup_x (int_0^T |u(t, x)|^2 dt)^{1/2} / ((1 + sqrt T)(1 + ||W||_2) ||u0||)` on `points`
/// uniform points, with the time integral done exactly in the eigenbasis.
pub fn dispersive_ratio_1d(op: &FloquetOperator1D, u0: &CVector, t: f64, points: usize) -> Result<f64> {
    if u0.len() != op.dim() {
        return invalid("state length does not match operator");
    }
    let beta = op.eigen.to_eigen(u0);
    let d = op.dim();
    let cols: Vec<Vec<Complex64>> =
        (0..d).map(|a| synthesize_1d(&op.eigen.vectors.column(a).into_owned(), points)).collect();
    let l = &op.eigen.values;
    let mut kern = vec![ZERO; d * d];
    for a in 0..d {
        for b in 0..d {
            kern[a * d + b] = beta[a] * beta[b].conj() * iota(l[b] - l[a], t);
        }
    }
    let mut sup: f64 = 0.0;
    for j in 0..points {
        let mut s = ZERO;
        for a in 0..d {
            for b in 0..d {
                s += kern[a * d + b] * cols[a][j] * cols[b][j].conj();
            }
        }
        sup = sup.max(s.re);
    }
    Ok(sup.max(0.0).sqrt() / ((1.0 + t.sqrt()) * (1.0 + op.potential.l2_norm()) * u0.norm()))
}

/// Largest [`dispersive_ratio_1d`] over random initial data.
pub fn dispersive_scan_1d(op: &FloquetOperator1D, t: f64, points: usize, trials: usize, seed: u64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = stream(seed, &format!("dispersive/{}/{trial}", op.k));
        let u0 = CVector::from_vec(complex_vector(&mut rng, op.dim()));
        best = best.max(dispersive_ratio_1d(op, &u0, t, points)?);
    }
    Ok(best)
}

/// `(AB)^{1/4} ||u||_4 / ||u||_2` measured on an explicit grid; used by the band oracles.
pub fn grid_band_ratio(f: &FourierField, m: usize) -> Result<f64> {
    let g = synthesize_grid(f, m)?;
    Ok(f.geometry.area().powf(0.25) * grid_lp_norm(&g, LpExponent::Four) / f.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral1d::{build_floquet, Potential1D};
    use crate::spectral2d::build_hamiltonian;

    #[test]
    fn twelve_point_circle() {
        let band = annulus_band(TorusGeometry::square(), 0.0, 0.2, 6).unwrap();
        assert_eq!(band.modes.len(), 12);
        assert!(!band.truncated);
        assert!(annulus_band(TorusGeometry::square(), 0.0, 0.2, 4).unwrap().truncated);
    }

    #[test]
    fn single_mode_ratio_is_one() {
        let g = TorusGeometry::new(2.0, 5.0).unwrap();
        let r = band_ratio(g, 3, &[(2, -3)], &[Complex64::new(0.2, 0.7)]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_single_mode() {
        let g = TorusGeometry::square();
        let h = build_hamiltonian(g, &FourierField::zeros(g, 0), 2).unwrap();
        let f = FourierField::from_modes(g, 2, [((1, 1), Complex64::new(1.0, 0.0))]).unwrap();
        let u = h.eigen.apply_fn(&h.to_vector(&f).unwrap(), |l| (Complex64::new(l, -1.0)).inv());
        let ratio = lp_norm(&h.to_field(&u), LpExponent::Four, 1).unwrap() / lp_norm(&f, LpExponent::FourThirds, 4).unwrap();
        let want = 1.0 / (g.area().sqrt() * 5f64.sqrt());
        assert!((ratio - want).abs() < 1e-12);
    }

    #[test]
    fn strichartz_free_without_source() {
        let g = TorusGeometry::square();
        let h = build_hamiltonian(g, &FourierField::zeros(g, 0), 2).unwrap();
        let u0 = FourierField::from_modes(g, 2, [((1, 0), Complex64::new(1.0, 0.0))]).unwrap();
        let r = strichartz_ratio(&h, &u0, None, 1.0, 4).unwrap();
        assert!((r.linf_l2_ratio - 1.0).abs() < 1e-12);
        // single mode: |u|^2 = 1/(AB) everywhere, so the L^4_x L^2_t norm is (AB)^{-1/4}
        assert!((r.l4l2_ratio - g.area().powf(-0.25)).abs() < 1e-12);
    }

    #[test]
    fn dispersive_single_mode_free() {
        let op = build_floquet(&Potential1D::zero(), 0.0, 3).unwrap();
        let mut u0 = CVector::zeros(7);
        u0[4] = Complex64::new(1.0, 0.0);
        let t = 2.0;
        let r = dispersive_ratio_1d(&op, &u0, t, 24).unwrap();
        let want = (t / (2.0 * std::f64::consts::PI)).sqrt() / (1.0 + t.sqrt());
        assert!((r - want).abs() < 1e-12);
    }
}
