//! One-dimensional Floquet-Bloch reductions on `[0, 2 pi)`.
//!
//! States are coefficient vectors over `n = -N..=N` in the basis `exp(inx)/sqrt(2 pi)`;
//! index `n + N`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, iota, CMatrix, CVector, EigenSystem, ZERO};
use crate::observability::{gramian_matrix, spectrum_report};
use crate::rng::{complex_normal, Rng};

/// `W(x) = sum_m w_m exp(imx)` with `|m| <= max_mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential1D {
    pub max_mode: usize,
    coeffs: Vec<Complex64>,
}

impl Potential1D {
    pub fn zero() -> Self {
        Self { max_mode: 0, coeffs: vec![ZERO] }
    }

    pub fn from_modes(entries: &[(i64, Complex64)]) -> Result<Self> {
        let max_mode = entries.iter().map(|(m, _)| m.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![ZERO; 2 * max_mode + 1];
        for &(m, c) in entries {
            coeffs[(m + max_mode as i64) as usize] += c;
        }
        let w = Self { max_mode, coeffs };
        w.check_real()?;
        Ok(w)
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return invalid("coefficient vector must have odd length");
        }
        let w = Self { max_mode: coeffs.len() / 2, coeffs };
        w.check_real()?;
        Ok(w)
    }

    /// `a cos(mx)`.
    pub fn cosine(a: f64, m: i64) -> Self {
        let h = Complex64::new(0.5 * a, 0.0);
        Self::from_modes(&[(m, h), (-m, h)]).expect("cosine is real")
    }

    /// Real potential with `|w_m| ~ <m>^{-1/2-eps}` and random phases, scaled to `L^2` norm `l2`.
    pub fn rough(rng: &mut Rng, max_mode: usize, eps: f64, l2: f64) -> Self {
        let mut coeffs = vec![ZERO; 2 * max_mode + 1];
        let c0 = max_mode as i64;
        for m in 0..=c0 {
            let w = (1.0 + (m * m) as f64).powf(-(0.5 + eps) / 2.0);
            let z = if m == 0 { Complex64::new(complex_normal(rng).re, 0.0) } else { complex_normal(rng) } * w;
            coeffs[(c0 + m) as usize] = z;
            coeffs[(c0 - m) as usize] = z.conj();
        }
        let mut out = Self { max_mode, coeffs };
        let n = out.l2_norm();
        if n > 0.0 {
            out.coeffs.iter_mut().for_each(|c| *c *= l2 / n);
        }
        out
    }

    fn check_real(&self) -> Result<()> {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        for m in 0..=self.max_mode as i64 {
            if (self.get(m) - self.get(-m).conj()).norm() > 1e-12 * scale {
                return invalid("potential is not real: w_{-m} != conj(w_m)");
            }
        }
        Ok(())
    }

    pub fn get(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.max_mode {
            return ZERO;
        }
        self.coeffs[(m + self.max_mode as i64) as usize]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        (-(self.max_mode as i64)..=self.max_mode as i64)
            .map(|m| self.get(m) * Complex64::from_polar(1.0, m as f64 * x))
            .sum::<Complex64>()
            .re
    }

    pub fn l2_norm(&self) -> f64 {
        (2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sub(&self, other: &Potential1D) -> Potential1D {
        let mm = self.max_mode.max(other.max_mode) as i64;
        let coeffs = (-mm..=mm).map(|m| self.get(m) - other.get(m)).collect();
        Potential1D { max_mode: mm as usize, coeffs }
    }

    pub fn add(&self, other: &Potential1D) -> Potential1D {
        let mm = self.max_mode.max(other.max_mode) as i64;
        let coeffs = (-mm..=mm).map(|m| self.get(m) + other.get(m)).collect();
        Potential1D { max_mode: mm as usize, coeffs }
    }

    /// Translate: `W(x - x0)`.
    pub fn translated(&self, x0: f64) -> Potential1D {
        let c0 = self.max_mode as i64;
        let coeffs = (-c0..=c0).map(|m| self.get(m) * Complex64::from_polar(1.0, -(m as f64) * x0)).collect();
        Potential1D { max_mode: self.max_mode, coeffs }
    }
}

/// Half-open intervals `[a, b)` inside `[0, 2 pi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return invalid("empty interval set");
        }
        for &(a, b) in &intervals {
            if !(a >= 0.0 && b <= 2.0 * PI * (1.0 + 1e-12) && a < b) {
                return invalid(format!("interval ({a}, {b}) is empty or leaves [0, 2pi]"));
            }
        }
        Ok(Self { intervals })
    }

    pub fn full() -> Self {
        Self { intervals: vec![(0.0, 2.0 * PI)] }
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = x.rem_euclid(2.0 * PI);
        let t = 1e-12 * 2.0 * PI;
        self.intervals.iter().any(|&(a, b)| x >= a - t && x < b - t)
    }

    pub fn mask(&self, m: usize) -> Vec<bool> {
        (0..m).map(|j| self.contains(2.0 * PI * j as f64 / m as f64)).collect()
    }
}

/// Matrix of the sampled indicator in the box basis:
/// `M_{nm} = (1/m) sum_{x_j in omega} exp(i (m - n) x_j)`.
pub fn region_gram_1d(omega: &IntervalSet, cutoff: usize, m: usize) -> Result<CMatrix> {
    let d = 2 * cutoff + 1;
    if m < d {
        return Err(Error::Aliasing { needed: d, got: m });
    }
    let mask = omega.mask(m);
    let mut hat = BTreeMap::new();
    for k in -(2 * cutoff as i64)..=(2 * cutoff as i64) {
        let s: Complex64 = (0..m)
            .filter(|&j| mask[j])
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (k * j as i64).rem_euclid(m as i64) as f64 / m as f64))
            .sum();
        hat.insert(k, s / m as f64);
    }
    Ok(CMatrix::from_fn(d, d, |r, c| hat[&(c as i64 - r as i64)]))
}

/// Values of a coefficient vector at `x_j = 2 pi j / m`.
pub fn synthesize_1d(coeffs: &CVector, m: usize) -> Vec<Complex64> {
    let cutoff = (coeffs.len() / 2) as i64;
    let norm = 1.0 / (2.0 * PI).sqrt();
    (0..m)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / m as f64;
            (-cutoff..=cutoff)
                .map(|n| coeffs[(n + cutoff) as usize] * Complex64::from_polar(norm, n as f64 * x))
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FloquetOperator1D {
    pub k: f64,
    pub cutoff: usize,
    pub potential: Potential1D,
    pub matrix: CMatrix,
    pub eigen: EigenSystem,
}

/// `H_{nm} = delta_{nm} (n + k)^2 + w_{n-m}` on `|n|, |m| <= N`.
pub fn build_floquet(potential: &Potential1D, k: f64, cutoff: usize) -> Result<FloquetOperator1D> {
    if !(0.0..1.0).contains(&k) {
        return invalid(format!("Floquet parameter k = {k} outside [0, 1)"));
    }
    let d = 2 * cutoff + 1;
    let c = cutoff as i64;
    let matrix = CMatrix::from_fn(d, d, |r, s| {
        let (n, m) = (r as i64 - c, s as i64 - c);
        let kin = if n == m { (n as f64 + k).powi(2) } else { 0.0 };
        potential.get(n - m) + kin
    });
    let eigen = hermitian_eigen(&matrix)?;
    Ok(FloquetOperator1D { k, cutoff, potential: potential.clone(), matrix, eigen })
}

impl FloquetOperator1D {
    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }
}

pub fn propagate_floquet(op: &FloquetOperator1D, v0: &CVector, t: f64) -> Result<CVector> {
    if v0.len() != op.dim() {
        return invalid("state length does not match operator");
    }
    Ok(op.eigen.propagate(v0, t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersiveIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub bound: f64,
    pub error: f64,
    /// Number of `2 pi` periods averaged so that all phase differences are periodic.
    pub periods: u64,
}

fn phase_periods(k: f64) -> Result<u64> {
    for q in 1..=10_000u64 {
        let v = 2.0 * k * q as f64;
        if (v - v.round()).abs() < 1e-9 {
            return Ok(q);
        }
    }
    invalid(format!("k = {k} has no rational representation with small denominator"))
}

/// Compares `sup_x` of the time-averaged `|sum c_n exp(-it(n+k)^2 + inx)|^2` with the
/// sum over resonance classes `|n + k| = |m + k|`. The time average runs over the common
/// period `2 pi q` of all phase differences (`q = 1` when `2k` is an integer).
pub fn free_dispersive_identity(c: &[Complex64], k: f64) -> Result<DispersiveIdentity> {
    if c.len() % 2 == 0 {
        return invalid("coefficient vector must have odd length");
    }
    let cutoff = (c.len() / 2) as i64;
    let q = phase_periods(k)?;
    let window = 2.0 * PI * q as f64;
    let pts = (8 * cutoff.max(1)) as usize;
    let ns: Vec<i64> = (-cutoff..=cutoff).collect();

    // time kernel between every pair of modes
    let d = ns.len();
    let mut kern = vec![ZERO; d * d];
    for (a, &n) in ns.iter().enumerate() {
        for (b, &m) in ns.iter().enumerate() {
            let delta = (n as f64 + k).powi(2) - (m as f64 + k).powi(2);
            kern[a * d + b] = iota(-delta, window) / q as f64;
        }
    }

    // resonance classes by |n + k|
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| (ns[a] as f64 + k).abs().total_cmp(&(ns[b] as f64 + k).abs()));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let r = (ns[i] as f64 + k).abs();
        match classes.last_mut() {
            Some(cl) if ((ns[cl[0]] as f64 + k).abs() - r).abs() < 1e-9 => cl.push(i),
            _ => classes.push(vec![i]),
        }
    }

    let mut lhs: f64 = 0.0;
    let mut rhs: f64 = 0.0;
    for j in 0..pts {
        let x = 2.0 * PI * j as f64 / pts as f64;
        let e: Vec<Complex64> = ns.iter().zip(c).map(|(&n, &cn)| cn * Complex64::from_polar(1.0, n as f64 * x)).collect();
        let mut l = ZERO;
        for a in 0..d {
            for b in 0..d {
                l += e[a] * e[b].conj() * kern[a * d + b];
            }
        }
        lhs = lhs.max(l.re);
        let r: f64 = classes.iter().map(|cl| cl.iter().map(|&i| e[i]).sum::<Complex64>().norm_sqr()).sum();
        rhs = rhs.max(2.0 * PI * r);
    }
    let bound = 4.0 * 2.0 * PI * c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok(DispersiveIdentity { lhs, rhs, bound, error: (lhs - rhs).abs(), periods: q })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gramian1DReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub constant: f64,
    pub time: f64,
    pub dim: usize,
    pub degenerate: bool,
}

pub fn observability_constant_1d(
    op: &FloquetOperator1D,
    omega: &IntervalSet,
    t: f64,
    m: usize,
) -> Result<Gramian1DReport> {
    if !(t > 0.0) {
        return invalid("observation time must be positive");
    }
    let rg = region_gram_1d(omega, op.cutoff, m)?;
    let g = gramian_matrix(&op.eigen, &rg, t);
    let (lambda_min, lambda_max, constant, degenerate) = spectrum_report(&g, t)?;
    Ok(Gramian1DReport { lambda_min, lambda_max, constant, time: t, dim: op.dim(), degenerate })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryReport {
    pub ratio: f64,
    pub tau_used: f64,
    pub shifted: bool,
}

/// Solves `(H - tau) u = g` in the eigenbasis and returns
/// `||u|| / (<tau>^{-1/2} ||g|| + ||u||_{L^2(omega)})`.
pub fn stationary_check_1d(
    op: &FloquetOperator1D,
    tau: f64,
    g: &CVector,
    omega: &IntervalSet,
    m: usize,
) -> Result<StationaryReport> {
    let gap = op.eigen.values.iter().map(|l| (l - tau).abs()).fold(f64::INFINITY, f64::min);
    let shifted = gap < 1e-8 * tau.abs().max(1.0);
    let tau_used = if shifted { tau + 1e-6 } else { tau };
    let u = op.eigen.apply_fn(g, |l| Complex64::new(1.0 / (l - tau_used), 0.0));
    let rg = region_gram_1d(omega, op.cutoff, m)?;
    let u_omega = u.dotc(&(&rg * &u)).re.max(0.0).sqrt();
    let bracket = (1.0 + tau_used * tau_used).sqrt();
    let ratio = u.norm() / (g.norm() / bracket.sqrt() + u_omega);
    Ok(StationaryReport { ratio, tau_used, shifted })
}

/// `||phi_a|| / ||phi_a||_{L^2(omega)}` for the eigenvector of index `a`.
pub fn eigen_observation_ratio(op: &FloquetOperator1D, index: usize, omega: &IntervalSet, m: usize) -> Result<f64> {
    if index >= op.dim() {
        return invalid("eigen index out of range");
    }
    let rg = region_gram_1d(omega, op.cutoff, m)?;
    let v = op.eigen.vectors.column(index).into_owned();
    Ok(1.0 / v.dotc(&(&rg * &v)).re.sqrt())
}
