//! Low-frequency elimination: turning a weak observability inequality with a compact
//! remainder into a full one with an explicit constant, on finite Galerkin models.
//!
//! Spectral pieces of `phi`: `a` (clusters with `mu <= N`), `b` (`N < mu <= M`),
//! `c` (`mu > M`). With `E(f) = int_0^T ||A U(t) f||^2` the assembled constant is
//!
//! `K = (1 + sqrt(T) ||A|| beta)^2 / (K6 - S) + beta^2`,
//!
//! where `K6 = min(K3 / K2^2, 1 / (2 C1))`, `beta = r2 sqrt(2 C1) / K5` and `S` bounds the
//! `a`-`c` cross term through a `C^3` window `eta`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, iota, CMatrix, CVector, EigenSystem};
use crate::observability::{gramian_matrix, region_gram};
use crate::rng::{complex_vector, stream};
use crate::spectral1d::{region_gram_1d, FloquetOperator1D, IntervalSet};
use crate::spectral2d::Hamiltonian2D;
use crate::torus::ObservationRegion;

/// Decay power of the window's Fourier transform used for the cross term.
pub const DECAY_POWER: u32 = 4;

#[derive(Debug, Clone)]
pub struct ModelSystem {
    pub eigen: EigenSystem,
    /// `A^* A` in the mode basis.
    pub observation: CMatrix,
    /// `A^* A` in the eigenbasis.
    pub observation_eigen: CMatrix,
    pub time: f64,
    /// Operator norm of `A`.
    pub a_norm: f64,
}

impl ModelSystem {
    pub fn new(eigen: EigenSystem, observation: CMatrix, time: f64) -> Result<Self> {
        let d = eigen.dim();
        if observation.nrows() != d || observation.ncols() != d {
            return invalid("observation matrix does not match the eigenbasis");
        }
        if !(time > 0.0) {
            return invalid("time horizon must be positive");
        }
        let gram = eigen.vectors.ad_mul(&eigen.vectors);
        let ortho = (gram - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if ortho > 1e-10 {
            return Err(Error::Numerical(format!("eigenvectors not orthonormal: defect {ortho:e}")));
        }
        if hermitian_defect(&observation) > 1e-10 {
            return invalid("A^* A must be Hermitian");
        }
        let ev = hermitian_eigenvalues(&observation)?;
        if ev[0] < -1e-10 {
            return invalid("A^* A must be positive semidefinite");
        }
        let observation_eigen = eigen.vectors.ad_mul(&(&observation * &eigen.vectors));
        let a_norm = ev[d - 1].max(0.0).sqrt();
        Ok(Self { eigen, observation, observation_eigen, time, a_norm })
    }

    pub fn from_floquet(op: &FloquetOperator1D, omega: &IntervalSet, time: f64, grid: usize) -> Result<Self> {
        Self::new(op.eigen.clone(), region_gram_1d(omega, op.cutoff, grid)?, time)
    }

    pub fn from_hamiltonian(h: &Hamiltonian2D, region: &ObservationRegion, time: f64, grid: usize) -> Result<Self> {
        Self::new(h.eigen.clone(), region_gram(region, h.cutoff, grid)?, time)
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Eigenbasis Gramian on `[0, t]`.
    pub fn gramian(&self, t: f64) -> CMatrix {
        CMatrix::from_fn(self.dim(), self.dim(), |a, b| {
            self.observation_eigen[(a, b)] * iota(self.eigen.values[a] - self.eigen.values[b], t)
        })
    }

    /// `1 / lambda_min` of the Gramian on `[0, T]`.
    pub fn gramian_constant(&self) -> Result<f64> {
        let ev = hermitian_eigenvalues(&gramian_matrix(&self.eigen, &self.observation, self.time))?;
        Ok(if ev[0] <= 1e-12 * self.time { f64::INFINITY } else { 1.0 / ev[0] })
    }

    /// Smallest `C0` with `lambda_n >= n^delta / C0` for `n >= 1`, using `<lambda_n>`.
    pub fn growth_constant(&self, delta: f64) -> f64 {
        self.eigen
            .values
            .iter()
            .enumerate()
            .map(|(i, &l)| ((i + 1) as f64).powf(delta) / bracket(l))
            .fold(0.0, f64::max)
    }
}

fn bracket(l: f64) -> f64 {
    (1.0 + l * l).sqrt()
}

/// `(sum <lambda_n>^{2s} |<phi, phi_n>|^2)^{1/2}` for `phi` in the mode basis.
pub fn hp_norm(model: &ModelSystem, phi: &CVector, s: f64) -> f64 {
    hp_norm_eigen(model.values(), &model.eigen.to_eigen(phi), s)
}

fn hp_norm_eigen(values: &[f64], c: &CVector, s: f64) -> f64 {
    values.iter().zip(c.iter()).map(|(&l, z)| bracket(l).powf(2.0 * s) * z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    /// Cluster means, ascending, for every cluster of the model.
    pub mu: Vec<f64>,
    /// Eigen-indices of each cluster.
    pub members: Vec<Vec<usize>>,
    /// Clusters with `mu <= N`.
    pub r1: usize,
    /// Clusters with `mu <= M`.
    pub r2: usize,
    pub n: f64,
    pub m: f64,
    pub cluster_tol: f64,
    /// A cluster straddles `N` or `M`.
    pub ambiguous: bool,
}

impl ClusterDecomposition {
    /// `psi_r` for a vector given in eigen coordinates.
    pub fn project(&self, r: usize, coeffs: &CVector) -> CVector {
        let mut out = CVector::zeros(coeffs.len());
        for &i in &self.members[r] {
            out[i] = coeffs[i];
        }
        out
    }

    pub fn multiplicity(&self, r: usize) -> usize {
        self.members[r].len()
    }
}

/// Groups ascending eigenvalues whose consecutive gaps are at most `tol * max(1, |lambda|)`.
pub fn cluster_values(values: &[f64], n: f64, m: f64, tol: f64) -> Result<ClusterDecomposition> {
    if !(n < m) {
        return invalid("cluster thresholds need N < M");
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return invalid("eigenvalues must be ascending");
    }
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in values.iter().enumerate() {
        match members.last_mut() {
            Some(last) if l - values[*last.last().unwrap()] <= tol * l.abs().max(1.0) => last.push(i),
            _ => members.push(vec![i]),
        }
    }
    let mu: Vec<f64> = members.iter().map(|c| c.iter().map(|&i| values[i]).sum::<f64>() / c.len() as f64).collect();
    let straddles = |x: f64| {
        members.iter().any(|c| values[c[0]] <= x && values[*c.last().unwrap()] > x)
    };
    let ambiguous = straddles(n) || straddles(m);
    let r1 = mu.iter().filter(|&&v| v <= n).count();
    let r2 = mu.iter().filter(|&&v| v <= m).count();
    Ok(ClusterDecomposition { mu, members, r1, r2, n, m, cluster_tol: tol, ambiguous })
}

pub fn cluster_spectrum(model: &ModelSystem, n: f64, m: f64, tol: f64) -> Result<ClusterDecomposition> {
    cluster_values(model.values(), n, m, tol)
}

/// `lambda_min` of `( int_{t0}^{t1} exp(i (mu_r - mu_s) t) dt )_{rs}`.
pub fn exp_gram_min_window(mu: &[f64], t0: f64, t1: f64) -> Result<f64> {
    if mu.is_empty() {
        return invalid("need at least one frequency");
    }
    if !(t1 > t0) {
        return invalid("empty time window");
    }
    let mut sorted = mu.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    if sorted.windows(2).any(|w| w[1] - w[0] <= 1e-12 * w[1].abs().max(1.0)) {
        return invalid("frequencies must be distinct");
    }
    let len = t1 - t0;
    let g = CMatrix::from_fn(mu.len(), mu.len(), |r, s| {
        let d = mu[r] - mu[s];
        Complex64::from_polar(1.0, d * t0) * iota(d, len)
    });
    Ok(hermitian_eigenvalues(&g)?[0])
}

/// `K3` on the window `[T/2, 3T/4]`.
pub fn exp_gram_min(mu: &[f64], t: f64) -> Result<f64> {
    exp_gram_min_window(mu, 0.5 * t, 0.75 * t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VandermondeSigma {
    pub sigma: Vec<Complex64>,
    pub k5: f64,
    pub tau: f64,
    /// `tau` was moved off `T / (10 r2)` to separate colliding nodes.
    pub tau_perturbed: bool,
    /// `max_{r <= r1} |sum_p sigma_p x_r^p|`.
    pub zero_residual: f64,
}

/// Coefficients `sigma_1..sigma_r2` with `sum_p sigma_p x_r^p` equal to 0 for `r <= r1`
/// and 1 for `r > r1`, `x_r = exp(-i mu_r tau)`, rescaled so the largest entry is exactly 1.
pub fn vandermonde_sigma(mu: &[f64], r1: usize, r2: usize, t: f64) -> Result<VandermondeSigma> {
    if r2 == 0 || r2 > mu.len() || r1 > r2 {
        return invalid(format!("need 0 <= r1 <= r2 <= {} and r2 >= 1", mu.len()));
    }
    if !(t > 0.0) {
        return invalid("time must be positive");
    }
    let mu = &mu[..r2];
    let base = t / (10.0 * r2 as f64);
    let mut last_pair = (0, 0);
    for k in 0..=16 {
        let shift = if k == 0 { 0.0 } else { (if k % 2 == 1 { 1.0 } else { -1.0 }) * 1e-3 * ((k + 1) / 2) as f64 / 8.0 };
        let tau = base * (1.0 + shift);
        let x: Vec<Complex64> = mu.iter().map(|&m| Complex64::from_polar(1.0, -m * tau)).collect();
        match closest_pair(&x) {
            Some((i, j, d)) if d < 1e-9 => {
                last_pair = (i, j);
                continue;
            }
            _ => {}
        }
        let y: Vec<Complex64> =
            x.iter().enumerate().map(|(r, &xr)| if r < r1 { Complex64::new(0.0, 0.0) } else { xr.inv() }).collect();
        let mut sigma = newton_monomial(&x, &y);
        let pivot = *sigma.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        if pivot.norm() == 0.0 {
            return Err(Error::Numerical("vanishing interpolant".into()));
        }
        for s in sigma.iter_mut() {
            *s /= pivot;
        }
        let value = |xr: Complex64| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut pw = xr;
            for s in &sigma {
                acc += s * pw;
                pw *= xr;
            }
            acc
        };
        let zero_residual = x[..r1].iter().map(|&xr| value(xr).norm()).fold(0.0, f64::max);
        let k5 = x[r1..].iter().map(|&xr| value(xr).norm()).fold(f64::INFINITY, f64::min);
        return Ok(VandermondeSigma { sigma, k5, tau, tau_perturbed: k > 0, zero_residual });
    }
    Err(Error::Numerical(format!(
        "Vandermonde nodes collide for mu[{}] = {} and mu[{}] = {}",
        last_pair.0, mu[last_pair.0], last_pair.1, mu[last_pair.1]
    )))
}

fn closest_pair(x: &[Complex64]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = (x[i] - x[j]).norm();
            if best.map_or(true, |b| d < b.2) {
                best = Some((i, j, d));
            }
        }
    }
    best
}

/// Monomial coefficients of the interpolating polynomial through `(x_r, y_r)`.
fn newton_monomial(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let mut c = y.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (x[i] - x[i - j]);
        }
    }
    let mut poly = vec![c[n - 1]];
    for j in (0..n - 1).rev() {
        // poly * (x - x_j) + c_j
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, &p) in poly.iter().enumerate() {
            next[k + 1] += p;
            next[k] -= p * x[j];
        }
        next[0] += c[j];
        poly = next;
    }
    poly
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakObservability {
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
    /// Eigenvalues at or above this value define the part used to pick `C1`.
    pub split: f64,
    /// Largest `||phi||^2 / (C1 E_t(phi) + C2 ||phi||^2_{-eps})` seen in validation.
    pub worst_ratio: f64,
    pub samples: usize,
}

/// Fits `||phi||^2 <= C1 int_0^t ||A U phi||^2 + C2 ||phi||^2_{H^{-eps}}` for `t >= T/4`.
/// `C1` is the Gramian constant of the upper half of the spectrum at `T/4`; the least
/// admissible `C2` for it is a generalized eigenvalue. Both are inflated by 10% and the
/// pair is checked on random vectors at `t = T/4, T/2, T`.
pub fn certify_weak_observability(model: &ModelSystem, epsilon: f64, samples: usize, seed: u64) -> Result<WeakObservability> {
    if !(epsilon > 0.0) {
        return invalid("epsilon must be positive");
    }
    let d = model.dim();
    let values = model.values();
    let g = model.gramian(0.25 * model.time);
    let split = values[d / 2];
    let high: Vec<usize> = (0..d).filter(|&i| values[i] >= split).collect();
    let gh = CMatrix::from_fn(high.len(), high.len(), |a, b| g[(high[a], high[b])]);
    let lmin = hermitian_eigenvalues(&gh)?[0];
    if lmin <= 1e-12 * model.time {
        return Err(Error::Numerical("upper spectral part is not observed at T/4".into()));
    }
    let c1 = 1.0 / lmin;
    let w: Vec<f64> = values.iter().map(|&l| bracket(l).powf(epsilon)).collect();
    let b = CMatrix::from_fn(d, d, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (Complex64::new(id, 0.0) - g[(i, j)] * c1) * (w[i] * w[j])
    });
    let c2 = hermitian_eigenvalues(&b)?[d - 1].max(0.0);
    let (c1, c2) = (1.1 * c1, 1.1 * c2);

    let grams: Vec<CMatrix> = [0.25, 0.5, 1.0].iter().map(|&f| model.gramian(f * model.time)).collect();
    let mut rng = stream(seed, "lowfreq/weak");
    let vecs: Vec<CVector> = (0..samples).map(|_| CVector::from_vec(complex_vector(&mut rng, d))).collect();
    let worst_ratio = vecs
        .par_iter()
        .map(|v| {
            let lhs = v.norm_squared();
            let low = hp_norm_eigen(values, v, -epsilon).powi(2);
            grams.iter().map(|gm| lhs / (c1 * v.dotc(&(gm * v)).re + c2 * low)).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(WeakObservability { c1, c2, epsilon, split, worst_ratio, samples })
}

/// `int_0^1 |s''''|` for the septic smoothstep `s = 35x^4 - 84x^5 + 70x^6 - 20x^7`.
fn septic_fourth_l1() -> f64 {
    let s3 = |x: f64| 840.0 * x - 5040.0 * x * x + 8400.0 * x.powi(3) - 4200.0 * x.powi(4);
    let r = 15f64.sqrt() / 10.0;
    let knots = [0.0, 0.5 - r, 0.5, 0.5 + r, 1.0];
    knots.windows(2).map(|k| (s3(k[1]) - s3(k[0])).abs()).sum()
}

/// `||eta''''||_{L^1}` for the window rising on `[0, T/2]`, equal to 1 on `[T/2, 3T/4]`
/// and falling on `[3T/4, T]`.
pub fn window_fourth_l1(t: f64) -> f64 {
    septic_fourth_l1() * ((2.0 / t).powi(3) + (4.0 / t).powi(3))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssemblyReport {
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub r1: usize,
    pub r2: usize,
    pub tau: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K3")]
    pub k3: f64,
    /// `M` times the cross-term bound.
    #[serde(rename = "K4")]
    pub k4: f64,
    #[serde(rename = "K5")]
    pub k5: f64,
    #[serde(rename = "K6")]
    pub k6: f64,
    #[serde(rename = "K_assembled")]
    pub k_assembled: f64,
    #[serde(rename = "K_gramian")]
    pub k_gramian: f64,
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub cross_term: f64,
    pub a_norm: f64,
    pub window_c4: f64,
    pub decay_power: u32,
    pub tau_perturbed: bool,
    pub zero_residual: f64,
    pub ambiguous_clusters: bool,
}

/// Runs the elimination chain. With `m = None`, `M` starts at `2 max(N, 1)` and doubles
/// until the cross term is at most `K6 / 2`; past the top of the spectrum it vanishes.
pub fn assemble_constant(
    model: &ModelSystem,
    weak: &WeakObservability,
    m: Option<f64>,
    cluster_tol: f64,
) -> Result<AssemblyReport> {
    let t = model.time;
    let values = model.values();
    let top = values[values.len() - 1];
    let n = (2.0 * weak.c2).powf(1.0 / weak.epsilon);
    let probe = cluster_values(values, n, f64::INFINITY, cluster_tol)?;
    let r1 = probe.r1;

    let mut k2: f64 = 0.0;
    for r in 0..r1 {
        let idx = &probe.members[r];
        let sub = CMatrix::from_fn(idx.len(), idx.len(), |a, b| model.observation_eigen[(idx[a], idx[b])]);
        let lmin = hermitian_eigenvalues(&sub)?[0];
        if lmin <= 1e-14 {
            return Err(Error::Numerical(format!("eigenspace at {} is invisible to A", probe.mu[r])));
        }
        k2 = k2.max(1.0 / lmin.sqrt());
    }
    let k3 = if r1 > 0 { exp_gram_min(&probe.mu[..r1], t)? } else { f64::INFINITY };
    let c4 = window_fourth_l1(t);

    let mut m_cur = m.unwrap_or(2.0 * n.max(1.0));
    loop {
        let m_eff = m_cur.min(top);
        let clusters = cluster_values(values, n, m_eff.max(n + f64::EPSILON * n.abs().max(1.0)), cluster_tol)?;
        let low: Vec<usize> = (0..values.len()).filter(|&i| values[i] <= n).collect();
        let high: Vec<usize> = (0..values.len()).filter(|&i| values[i] > m_eff).collect();
        let mut w2 = 0.0;
        for &a in &low {
            for &b in &high {
                w2 += (values[b] - values[a]).powi(-2 * DECAY_POWER as i32);
            }
        }
        let cross = model.a_norm.powi(2) * c4 * w2.sqrt();
        let mut k6 = f64::INFINITY;
        if r1 > 0 {
            k6 = k6.min(k3 / (k2 * k2));
        }
        if !high.is_empty() || values.iter().any(|&l| l > n) {
            k6 = k6.min(0.5 / weak.c1);
        }
        let accept = m.is_some() || cross <= 0.5 * k6 || m_cur >= top;
        if accept {
            if !(k6 - cross > 0.0) {
                return Err(Error::Numerical(format!("K6 = {k6:e} does not dominate the cross term {cross:e}")));
            }
            let r2 = clusters.r2;
            let (sig, beta) = if r2 > r1 {
                let s = vandermonde_sigma(&clusters.mu, r1, r2, t)?;
                let beta = r2 as f64 * (2.0 * weak.c1).sqrt() / s.k5;
                (Some(s), beta)
            } else {
                (None, 0.0)
            };
            let lead = (1.0 + t.sqrt() * model.a_norm * beta).powi(2);
            let first = if k6.is_finite() { lead / (k6 - cross) } else { 0.0 };
            return Ok(AssemblyReport {
                n,
                m: m_eff,
                r1,
                r2,
                tau: sig.as_ref().map_or(t / (10.0 * r2.max(1) as f64), |s| s.tau),
                k2,
                k3,
                k4: cross * m_eff,
                k5: sig.as_ref().map_or(1.0, |s| s.k5),
                k6,
                k_assembled: first + beta * beta,
                k_gramian: model.gramian_constant()?,
                c1: weak.c1,
                c2: weak.c2,
                epsilon: weak.epsilon,
                beta,
                cross_term: cross,
                a_norm: model.a_norm,
                window_c4: c4,
                decay_power: DECAY_POWER,
                tau_perturbed: sig.as_ref().is_some_and(|s| s.tau_perturbed),
                zero_residual: sig.as_ref().map_or(0.0, |s| s.zero_residual),
                ambiguous_clusters: probe.ambiguous || clusters.ambiguous,
            });
        }
        m_cur *= 2.0;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EliminationReport {
    pub constant: f64,
    pub worst_ratio: f64,
    pub checked: usize,
    pub passed: bool,
    /// Eigen coordinates of the worst vector when the check fails.
    pub witness: Option<Vec<Complex64>>,
}

/// Checks `||phi||^2 <= K int_0^T ||A U phi||^2` on `samples` random vectors and on every
/// eigenvector.
pub fn verify_elimination(model: &ModelSystem, k: f64, samples: usize, seed: u64) -> Result<EliminationReport> {
    if !(k > 0.0) {
        return invalid("constant must be positive");
    }
    let d = model.dim();
    let g = model.gramian(model.time);
    let mut rng = stream(seed, "lowfreq/verify");
    let mut vecs: Vec<CVector> = (0..samples).map(|_| CVector::from_vec(complex_vector(&mut rng, d))).collect();
    for i in 0..d {
        let mut e = CVector::zeros(d);
        e[i] = Complex64::new(1.0, 0.0);
        vecs.push(e);
    }
    let (worst_ratio, at) = vecs
        .par_iter()
        .enumerate()
        .map(|(i, v)| (v.norm_squared() / v.dotc(&(&g * v)).re, i))
        .reduce(|| (0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
    let passed = worst_ratio <= k * (1.0 + 1e-8);
    Ok(EliminationReport {
        constant: k,
        worst_ratio,
        checked: vecs.len(),
        passed,
        witness: (!passed).then(|| vecs[at].iter().copied().collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_frequency_window() {
        assert!((exp_gram_min(&[3.7], 8.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(exp_gram_min(&[1.0, 1.0], 8.0).is_err());
    }

    #[test]
    fn trivial_sigma() {
        let s = vandermonde_sigma(&[2.5], 0, 1, 3.0).unwrap();
        assert_eq!(s.sigma, vec![Complex64::new(1.0, 0.0)]);
        assert!((s.k5 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_sigma() {
        let s = vandermonde_sigma(&[1.0, 2.0], 1, 2, 10.0).unwrap();
        assert!((s.k5 - 2.0 * 0.25f64.sin()).abs() < 1e-13);
        assert!(s.zero_residual < 1e-14);
        assert_eq!(s.tau, 0.5);
    }

    #[test]
    fn colliding_nodes_are_perturbed() {
        // tau = 1, nodes for 0 and 2 pi coincide
        let s = vandermonde_sigma(&[0.0, 2.0 * PI], 1, 2, 20.0).unwrap();
        assert!(s.tau_perturbed);
        assert!(s.zero_residual < 1e-10);
    }

    #[test]
    fn window_norm() {
        // int_0^1 |s''''| for the septic smoothstep, by fine midpoint quadrature
        let s4 = |x: f64| 840.0 - 10080.0 * x + 25200.0 * x * x - 16800.0 * x.powi(3);
        let n = 200_000;
        let q: f64 = (0..n).map(|i| s4((i as f64 + 0.5) / n as f64).abs()).sum::<f64>() / n as f64;
        assert!((septic_fourth_l1() - q).abs() < 1e-6 * q);
    }
}
