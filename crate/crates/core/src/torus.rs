//! Rectangular tori, truncated Fourier fields and grid quadrature.
//!
//! Fields are expanded in the orthonormal basis `e_n(z) = exp(i w_n . z) / sqrt(AB)`
//! with physical frequencies `w_n = (2 pi n1 / A, 2 pi n2 / B)`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Mode = (i64, i64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    pub period_x: f64,
    pub period_y: f64,
}

impl TorusGeometry {
    pub fn new(period_x: f64, period_y: f64) -> Result<Self> {
        if !(period_x.is_finite() && period_y.is_finite() && period_x > 0.0 && period_y > 0.0) {
            return invalid(format!("periods must be positive, got ({period_x}, {period_y})"));
        }
        Ok(Self { period_x, period_y })
    }

    /// The square torus of side `2 pi`.
    pub fn square() -> Self {
        Self { period_x: 2.0 * PI, period_y: 2.0 * PI }
    }

    pub fn area(&self) -> f64 {
        self.period_x * self.period_y
    }

    pub fn frequency(&self, n: Mode) -> [f64; 2] {
        [
            2.0 * PI * n.0 as f64 / self.period_x,
            2.0 * PI * n.1 as f64 / self.period_y,
        ]
    }

    /// `|w_n|^2`, the eigenvalue of `-Laplacian` on `e_n`.
    pub fn weighted_norm_sq(&self, n: Mode) -> f64 {
        let w = self.frequency(n);
        w[0] * w[0] + w[1] * w[1]
    }

    pub(crate) fn wrap(&self, x: f64, y: f64) -> (f64, f64) {
        (x.rem_euclid(self.period_x), y.rem_euclid(self.period_y))
    }
}

/// Index set `{ n : max(|n1|, |n2|) <= cutoff }`, ordered with `n1` major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeBox {
    pub cutoff: usize,
}

impl ModeBox {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: Mode) -> bool {
        let c = self.cutoff as i64;
        n.0.abs() <= c && n.1.abs() <= c
    }

    pub fn index(&self, n: Mode) -> Option<usize> {
        if !self.contains(n) {
            return None;
        }
        let c = self.cutoff as i64;
        Some(((n.0 + c) as usize) * self.side() + (n.1 + c) as usize)
    }

    pub fn mode(&self, idx: usize) -> Mode {
        let c = self.cutoff as i64;
        let s = self.side();
        ((idx / s) as i64 - c, (idx % s) as i64 - c)
    }

    pub fn modes(self) -> impl Iterator<Item = Mode> {
        (0..self.len()).map(move |i| self.mode(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierField {
    pub geometry: TorusGeometry,
    pub cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(geometry: TorusGeometry, cutoff: usize) -> Self {
        let len = ModeBox::new(cutoff).len();
        Self { geometry, cutoff, coeffs: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_coeffs(geometry: TorusGeometry, cutoff: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != ModeBox::new(cutoff).len() {
            return invalid(format!(
                "expected {} coefficients for cutoff {cutoff}, got {}",
                ModeBox::new(cutoff).len(),
                coeffs.len()
            ));
        }
        Ok(Self { geometry, cutoff, coeffs })
    }

    /// Builds a field from sparse entries; modes outside the box are an error.
    pub fn from_modes<I>(geometry: TorusGeometry, cutoff: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Mode, Complex64)>,
    {
        let mut f = Self::zeros(geometry, cutoff);
        for (n, c) in entries {
            match f.mode_box().index(n) {
                Some(i) => f.coeffs[i] += c,
                None => return invalid(format!("mode {n:?} outside cutoff {cutoff}")),
            }
        }
        Ok(f)
    }

    pub fn mode_box(&self) -> ModeBox {
        ModeBox::new(self.cutoff)
    }

    pub fn get(&self, n: Mode) -> Complex64 {
        self.mode_box().index(n).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set(&mut self, n: Mode, value: Complex64) -> Result<()> {
        match self.mode_box().index(n) {
            Some(i) => {
                self.coeffs[i] = value;
                Ok(())
            }
            None => invalid(format!("mode {n:?} outside cutoff {}", self.cutoff)),
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &FourierField) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for n in self.mode_box().modes() {
            s += self.get(n) * other.get(n).conj();
        }
        s
    }

    /// Re-expresses the field on another box, dropping modes that fall outside.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(self.geometry, cutoff);
        let target = ModeBox::new(cutoff);
        for (i, n) in self.mode_box().modes().enumerate() {
            if let Some(j) = target.index(n) {
                out.coeffs[j] = self.coeffs[i];
            }
        }
        out
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// `self - other` on the larger of the two boxes.
    pub fn sub(&self, other: &FourierField) -> Self {
        let cutoff = self.cutoff.max(other.cutoff);
        let mut out = self.with_cutoff(cutoff);
        let b = out.mode_box();
        for (i, n) in other.mode_box().modes().enumerate() {
            let j = b.index(n).expect("mode inside larger box");
            out.coeffs[j] -= other.coeffs[i];
        }
        out
    }

    /// Point evaluation by direct summation.
    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let norm = 1.0 / self.geometry.area().sqrt();
        let mut s = Complex64::new(0.0, 0.0);
        for (i, n) in self.mode_box().modes().enumerate() {
            let c = self.coeffs[i];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w = self.geometry.frequency(n);
            s += c * Complex64::from_polar(1.0, w[0] * x + w[1] * y);
        }
        s * norm
    }

    /// True when `c_{-n} = conj(c_n)` to the given tolerance, i.e. the field is real.
    pub fn is_real(&self, tol: f64) -> bool {
        self.mode_box()
            .modes()
            .all(|n| (self.get(n) - self.get((-n.0, -n.1)).conj()).norm() <= tol)
    }

    /// Largest `max(|n1|,|n2|)` over nonzero coefficients.
    pub fn support_cutoff(&self) -> usize {
        self.mode_box()
            .modes()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(n, _)| n.0.unsigned_abs().max(n.1.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Samples on the uniform `m x m` grid `z_{jk} = (jA/m, kB/m)`, stored with `j` major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub geometry: TorusGeometry,
    pub size: usize,
    pub samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn point(&self, j: usize, k: usize) -> (f64, f64) {
        (
            j as f64 * self.geometry.period_x / self.size as f64,
            k as f64 * self.geometry.period_y / self.size as f64,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.geometry.area() / (self.size * self.size) as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.cell_area() * self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized 2D DFT of an `m x m` row-major array.
pub(crate) fn fft2(data: &mut [Complex64], m: usize, direction: FftDirection) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(m, direction));
    for row in data.chunks_exact_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..m {
        for j in 0..m {
            col[j] = data[j * m + k];
        }
        fft.process(&mut col);
        for j in 0..m {
            data[j * m + k] = col[j];
        }
    }
}

fn check_grid(cutoff: usize, m: usize) -> Result<()> {
    if m < 2 * cutoff + 1 {
        return Err(Error::Aliasing { needed: 2 * cutoff + 1, got: m });
    }
    Ok(())
}

pub fn synthesize_grid(field: &FourierField, m: usize) -> Result<GridFunction> {
    check_grid(field.cutoff, m)?;
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    let mi = m as i64;
    for (i, n) in field.mode_box().modes().enumerate() {
        let j = n.0.rem_euclid(mi) as usize;
        let k = n.1.rem_euclid(mi) as usize;
        data[j * m + k] = field.coeffs[i];
    }
    fft2(&mut data, m, FftDirection::Inverse);
    let s = 1.0 / field.geometry.area().sqrt();
    data.iter_mut().for_each(|v| *v *= s);
    Ok(GridFunction { geometry: field.geometry, size: m, samples: data })
}

/// Discrete Fourier analysis truncated to `cutoff`; exact inverse of [`synthesize_grid`].
pub fn analyze(grid: &GridFunction, cutoff: usize) -> Result<FourierField> {
    let m = grid.size;
    check_grid(cutoff, m)?;
    let mut data = grid.samples.clone();
    fft2(&mut data, m, FftDirection::Forward);
    let s = grid.geometry.area().sqrt() / (m * m) as f64;
    let mut out = FourierField::zeros(grid.geometry, cutoff);
    let mi = m as i64;
    let b = out.mode_box();
    for (i, n) in b.modes().enumerate() {
        let j = n.0.rem_euclid(mi) as usize;
        let k = n.1.rem_euclid(mi) as usize;
        out.coeffs[i] = data[j * m + k] * s;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpExponent {
    Two,
    FourThirds,
    Four,
    Infinity,
}

impl LpExponent {
    pub fn value(&self) -> f64 {
        match self {
            LpExponent::Two => 2.0,
            LpExponent::FourThirds => 4.0 / 3.0,
            LpExponent::Four => 4.0,
            LpExponent::Infinity => f64::INFINITY,
        }
    }
}

/// Grid size used by [`lp_norm`]. `L^4` needs `4N+1` points for exactness.
pub fn lp_grid_size(cutoff: usize, p: LpExponent, oversample: usize) -> usize {
    let base = 2 * cutoff + 1;
    let min = match p {
        LpExponent::Four => 4 * cutoff + 1,
        _ => base,
    };
    min.max(oversample.max(1) * base)
}

pub fn grid_lp_norm(grid: &GridFunction, p: LpExponent) -> f64 {
    match p {
        LpExponent::Infinity => grid.samples.iter().map(|c| c.norm()).fold(0.0, f64::max),
        _ => {
            let q = p.value();
            let s: f64 = grid.samples.iter().map(|c| c.norm().powf(q)).sum();
            (grid.cell_area() * s).powf(1.0 / q)
        }
    }
}

/// `L^p` norm by rectangle-rule quadrature. `L^2` and `L^4` are exact on the chosen grid;
/// `L^{4/3}` requires `oversample >= 4`.
pub fn lp_norm(field: &FourierField, p: LpExponent, oversample: usize) -> Result<f64> {
    if p == LpExponent::FourThirds && oversample < 4 {
        return invalid("L^{4/3} quadrature needs oversample >= 4");
    }
    let m = lp_grid_size(field.cutoff, p, oversample);
    Ok(grid_lp_norm(&synthesize_grid(field, m)?, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }
}

/// Finite union of axis-aligned rectangles inside one fundamental domain.
/// Rectangles are half-open, `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRegion {
    pub geometry: TorusGeometry,
    pub rects: Vec<Rect>,
}

impl ObservationRegion {
    pub fn new(geometry: TorusGeometry, rects: Vec<Rect>) -> Result<Self> {
        if rects.is_empty() {
            return invalid("observation region needs at least one rectangle");
        }
        for r in &rects {
            let ok = r.x0 >= 0.0
                && r.y0 >= 0.0
                && r.x1 <= geometry.period_x * (1.0 + 1e-12)
                && r.y1 <= geometry.period_y * (1.0 + 1e-12)
                && r.x0 < r.x1
                && r.y0 < r.y1;
            if !ok {
                return invalid(format!("rectangle {r:?} is empty or leaves the fundamental domain"));
            }
        }
        Ok(Self { geometry, rects })
    }

    pub fn full(geometry: TorusGeometry) -> Self {
        Self { geometry, rects: vec![Rect::new(0.0, geometry.period_x, 0.0, geometry.period_y)] }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (x, y) = self.geometry.wrap(x, y);
        let tx = 1e-12 * self.geometry.period_x;
        let ty = 1e-12 * self.geometry.period_y;
        self.rects
            .iter()
            .any(|r| x >= r.x0 - tx && x < r.x1 - tx && y >= r.y0 - ty && y < r.y1 - ty)
    }

    /// Exact area of the union.
    pub fn measure(&self) -> f64 {
        let mut xs: Vec<f64> = self.rects.iter().flat_map(|r| [r.x0, r.x1]).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();
        let mut area = 0.0;
        for w in xs.windows(2) {
            let xm = 0.5 * (w[0] + w[1]);
            let mut ys: Vec<(f64, f64)> =
                self.rects.iter().filter(|r| r.x0 <= xm && xm < r.x1).map(|r| (r.y0, r.y1)).collect();
            ys.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut covered = 0.0;
            let mut cur: Option<(f64, f64)> = None;
            for (a, b) in ys {
                cur = match cur {
                    Some((c0, c1)) if a <= c1 => Some((c0, c1.max(b))),
                    Some((c0, c1)) => {
                        covered += c1 - c0;
                        Some((a, b))
                    }
                    None => Some((a, b)),
                };
            }
            if let Some((c0, c1)) = cur {
                covered += c1 - c0;
            }
            area += covered * (w[1] - w[0]);
        }
        area
    }

    /// Membership of the grid points of an `m x m` grid, `j` major.
    pub fn mask(&self, m: usize) -> Vec<bool> {
        let g = self.geometry;
        let mut out = Vec::with_capacity(m * m);
        for j in 0..m {
            let x = j as f64 * g.period_x / m as f64;
            for k in 0..m {
                out.push(self.contains(x, k as f64 * g.period_y / m as f64));
            }
        }
        out
    }
}

/// Multiplies the synthesized field by the sampled indicator of the region and returns the
/// masked grid together with its `L^2` norm.
pub fn restrict_to_region(
    field: &FourierField,
    region: &ObservationRegion,
    m: usize,
) -> Result<(GridFunction, f64)> {
    let mut grid = synthesize_grid(field, m)?;
    for (v, inside) in grid.samples.iter_mut().zip(region.mask(m)) {
        if !inside {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    let norm = grid.l2_norm();
    Ok((grid, norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn weighted_norms() {
        let g = TorusGeometry::square();
        assert!((g.weighted_norm_sq((3, 4)) - 25.0).abs() < 1e-12);
        let g = TorusGeometry::new(2.0 * PI, 2.0 * PI / 2f64.sqrt()).unwrap();
        assert!((g.weighted_norm_sq((1, 1)) - 3.0).abs() < 1e-12);
        assert!(TorusGeometry::new(0.0, 1.0).is_err());
    }

    #[test]
    fn mode_box_roundtrip() {
        let b = ModeBox::new(3);
        for (i, n) in b.modes().enumerate() {
            assert_eq!(b.index(n), Some(i));
        }
        assert_eq!(b.index((4, 0)), None);
    }

    #[test]
    fn cosine_l4() {
        let g = TorusGeometry::square();
        let f = FourierField::from_modes(g, 1, [((1, 0), c(2.0 * PI)), ((-1, 0), c(2.0 * PI))]).unwrap();
        let n4 = lp_norm(&f, LpExponent::Four, 1).unwrap().powi(4);
        assert!((n4 - 24.0 * PI * PI).abs() < 1e-9 * n4);
        let ninf = lp_norm(&f, LpExponent::Infinity, 1).unwrap();
        assert!((ninf - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_norms() {
        let g = TorusGeometry::new(3.0, 5.0).unwrap();
        let gamma = 0.7;
        let f = FourierField::from_modes(g, 2, [((0, 0), c(gamma * g.area().sqrt()))]).unwrap();
        for p in [LpExponent::Two, LpExponent::Four, LpExponent::FourThirds] {
            let got = lp_norm(&f, p, 4).unwrap();
            let want = gamma * g.area().powf(1.0 / p.value());
            assert!((got - want).abs() < 1e-12 * want, "{p:?}");
        }
    }

    #[test]
    fn aliasing_is_rejected() {
        let f = FourierField::zeros(TorusGeometry::square(), 4);
        assert_eq!(synthesize_grid(&f, 8).unwrap_err(), Error::Aliasing { needed: 9, got: 8 });
    }

    #[test]
    fn grid_roundtrip() {
        let g = TorusGeometry::new(2.0, 3.0).unwrap();
        let coeffs = (0..25).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let f = FourierField::from_coeffs(g, 2, coeffs).unwrap();
        let grid = synthesize_grid(&f, 7).unwrap();
        let back = analyze(&grid, 2).unwrap();
        assert!(f.sub(&back).l2_norm() < 1e-12 * f.l2_norm());
        let (x, y) = grid.point(3, 5);
        assert!((grid.samples[3 * 7 + 5] - f.eval(x, y)).norm() < 1e-10);
    }

    #[test]
    fn half_torus_restriction() {
        let g = TorusGeometry::square();
        let f = FourierField::from_modes(g, 2, [((1, 2), c(1.0))]).unwrap();
        let half = ObservationRegion::new(g, vec![Rect::new(0.0, PI, 0.0, 2.0 * PI)]).unwrap();
        let (_, n) = restrict_to_region(&f, &half, 16).unwrap();
        assert!((n - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((half.measure() - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn union_measure() {
        let g = TorusGeometry::new(4.0, 4.0).unwrap();
        let r = ObservationRegion::new(g, vec![Rect::new(0.0, 2.0, 0.0, 2.0), Rect::new(1.0, 3.0, 1.0, 3.0)])
            .unwrap();
        assert!((r.measure() - 7.0).abs() < 1e-12);
    }
}
