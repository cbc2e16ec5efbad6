//! Dense Hermitian eigensolves, conjugate gradients and time quadrature.

use nalgebra::{DMatrix, DVector, SymmetricTridiagonal};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Coordinates of `v` in the eigenbasis.
    pub fn to_eigen(&self, v: &CVector) -> CVector {
        self.vectors.ad_mul(v)
    }

    pub fn from_eigen(&self, c: &CVector) -> CVector {
        &self.vectors * c
    }

    /// `f(H) v` for a scalar function of the eigenvalue.
    pub fn apply_fn<F: Fn(f64) -> Complex64>(&self, v: &CVector, f: F) -> CVector {
        let mut c = self.to_eigen(v);
        for (ci, &l) in c.iter_mut().zip(&self.values) {
            *ci *= f(l);
        }
        self.from_eigen(&c)
    }

    /// `exp(-i t H) v`.
    pub fn propagate(&self, v: &CVector, t: f64) -> CVector {
        self.apply_fn(v, |l| Complex64::from_polar(1.0, -l * t))
    }

    /// Largest `||H x - lambda x||` over the eigenpairs.
    pub fn residual(&self, h: &CMatrix) -> f64 {
        let hv = h * &self.vectors;
        let mut worst: f64 = 0.0;
        for (a, &l) in self.values.iter().enumerate() {
            let r = hv.column(a) - self.vectors.column(a) * Complex64::new(l, 0.0);
            worst = worst.max(r.norm());
        }
        worst
    }
}

pub fn hermitian_defect(h: &CMatrix) -> f64 {
    (h - h.adjoint()).norm()
}

pub fn hermitian_eigen(h: &CMatrix) -> Result<EigenSystem> {
    if !h.is_square() {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let scale = h.norm().max(1.0);
    if hermitian_defect(h) > 1e-10 * scale {
        return Err(Error::InvalidArgument("matrix is not Hermitian".into()));
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(EigenSystem { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    // Householder reduction to a real tridiagonal, then implicit QL; the complex QR path
    // of nalgebra loses accuracy on some inputs.
    let (q, diag, off) = SymmetricTridiagonal::new(sym).unpack();
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut z = DMatrix::<f64>::identity(n, n);
    tridiagonal_ql(&mut d, &mut e, &mut z)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let w = CMatrix::from_fn(n, n, |r, c| Complex64::new(z[(r, order[c])], 0.0));
    Ok(EigenSystem { values, vectors: q * w })
}

/// Implicit QL with Wilkinson shifts on the symmetric tridiagonal `(d, e)`, `e[i]` coupling
/// `i` and `i + 1`. Rotations are accumulated into the columns of `z`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Numerical("tridiagonal QL did not converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk1 = z[(k, i + 1)];
                        let zk = z[(k, i)];
                        z[(k, i + 1)] = s * zk + c * zk1;
                        z[(k, i)] = c * zk - s * zk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(h)?.values)
}

/// `int_0^T exp(i d t) dt`, with a Taylor branch near `d = 0`.
pub fn iota(d: f64, t: f64) -> Complex64 {
    let x = d * t;
    if x.abs() < 1e-4 {
        // T (1 + ix/2 - x^2/6 - ix^3/24)
        let x2 = x * x;
        Complex64::new(t * (1.0 - x2 / 6.0), t * (x / 2.0 - x * x2 / 24.0))
    } else {
        // exp(ix) - 1 written without cancellation
        let h = (0.5 * x).sin();
        Complex64::new(-2.0 * h * h, x.sin()) / Complex64::new(0.0, d)
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: CVector,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for a Hermitian positive semidefinite operator.
pub fn conjugate_gradient<F>(apply: F, b: &CVector, tol: f64, max_iter: usize) -> Result<CgOutcome>
where
    F: Fn(&CVector) -> CVector,
{
    let bnorm = b.norm();
    let mut x = CVector::zeros(b.len());
    if bnorm == 0.0 {
        return Ok(CgOutcome { solution: x, iterations: 0, relative_residual: 0.0 });
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = r.norm_squared();
    for k in 0..max_iter {
        let ap = apply(&p);
        let pap = p.dotc(&ap).re;
        if pap <= 0.0 {
            return Err(Error::Numerical(format!("operator not positive definite at iteration {k}")));
        }
        let alpha = rs / pap;
        x.axpy(Complex64::new(alpha, 0.0), &p, Complex64::new(1.0, 0.0));
        r.axpy(Complex64::new(-alpha, 0.0), &ap, Complex64::new(1.0, 0.0));
        let rs_new = r.norm_squared();
        if rs_new.sqrt() <= tol * bnorm {
            return Ok(CgOutcome { solution: x, iterations: k + 1, relative_residual: rs_new.sqrt() / bnorm });
        }
        p = &r + &p * Complex64::new(rs_new / rs, 0.0);
        rs = rs_new;
    }
    Err(Error::Numerical(format!("conjugate gradients did not converge in {max_iter} iterations")))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `points` nodes on `[a, b]`.
pub fn composite_gauss(a: f64, b: f64, panels: usize, points: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(points);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * points);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn iota_branches_agree() {
        let t = 1.7;
        for d in [0.0, 1e-9, 3e-5, 5e-5, 1e-4, 0.3, -2.0] {
            let quad: Complex64 = composite_gauss(0.0, t, 4, 10)
                .iter()
                .map(|&(s, w)| Complex64::from_polar(w, d * s))
                .sum();
            assert!((iota(d, t) - quad).norm() < 1e-14, "d={d}");
        }
    }

    #[test]
    fn eigen_sorted_and_accurate() {
        let h = CMatrix::from_fn(5, 5, |r, c| {
            let base = Complex64::new((r + c) as f64, r as f64 - c as f64);
            if r == c { Complex64::new(r as f64 * 3.0, 0.0) } else { base }
        });
        let eig = hermitian_eigen(&h).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(eig.residual(&h) < 1e-11);
        let unit = eig.vectors.ad_mul(&eig.vectors) - CMatrix::identity(5, 5);
        assert!(unit.norm() < 1e-12);
    }

    #[test]
    fn eigen_accurate_on_random_hermitian() {
        use crate::rng::{complex_vector, stream};
        for seed in 0..20 {
            let mut rng = stream(seed, "linalg/hermitian");
            let a = CMatrix::from_vec(40, 40, complex_vector(&mut rng, 1600));
            let h = &a + a.adjoint();
            let e = hermitian_eigen(&h).unwrap();
            assert!(e.residual(&h) < 1e-11 * h.norm(), "seed {seed}: {}", e.residual(&h));
            let defect = (e.vectors.adjoint() * &e.vectors - CMatrix::identity(40, 40)).norm();
            assert!(defect < 1e-12);
        }
    }

    #[test]
    fn cg_solves_hpd() {
        let a = CMatrix::from_fn(6, 6, |r, c| Complex64::new(1.0 / (1 + r + c) as f64, (r as f64 - c as f64) * 0.01))
            + CMatrix::identity(6, 6);
        let b = CVector::from_fn(6, |i, _| Complex64::new(i as f64, 1.0));
        let out = conjugate_gradient(|v| &a * v, &b, 1e-13, 100).unwrap();
        assert!((&a * &out.solution - &b).norm() < 1e-11);
    }
}
