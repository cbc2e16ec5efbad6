//! Annular sectors, Minkowski-sum disjointness certificates, lattice counts in sectors,
//! and time fractions of straight-line flows in observation regions.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::observability::direction_frame;
use crate::torus::{ObservationRegion, Rect, TorusGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnulusVariant {
    /// `|h |z| - 1| <= kappa^2 h^2`.
    Linear,
    /// `|h^2 |z|^2 - 1| <= kappa^2 h^2`.
    Quadratic,
}

/// Sectors `A_alpha = { Re z, Im z >= 0, z in annulus, arg z in [alpha h kappa, (alpha+1) h kappa) }`
/// for `alpha = 0..=N`, `N = floor(pi / (2 h kappa))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorFamily {
    pub kappa: f64,
    pub h: f64,
    pub variant: AnnulusVariant,
}

impl SectorFamily {
    pub fn new(kappa: f64, h: f64, variant: AnnulusVariant) -> Result<Self> {
        if !(kappa > 0.0 && h > 0.0 && h <= 1.0 && kappa * h < 1.0) {
            return invalid(format!("sector family needs kappa > 0, 0 < h <= 1, kappa h < 1; got kappa={kappa} h={h}"));
        }
        Ok(Self { kappa, h, variant })
    }

    /// Unit-scale family with annulus half-width `eps` and angular width `sqrt(eps)`.
    pub fn rescaled(eps: f64) -> Result<Self> {
        Self::new(1.0, eps.sqrt(), AnnulusVariant::Linear)
    }

    pub fn epsilon(&self) -> f64 {
        self.kappa * self.kappa * self.h * self.h
    }

    pub fn angle(&self) -> f64 {
        self.h * self.kappa
    }

    /// Largest sector index `N`.
    pub fn n_sectors(&self) -> usize {
        (FRAC_PI_2 / self.angle() + 1e-12).floor() as usize
    }

    /// Radial range after scaling by `h`.
    fn unit_radii(&self) -> (f64, f64) {
        let e = self.epsilon();
        match self.variant {
            AnnulusVariant::Linear => (1.0 - e, 1.0 + e),
            AnnulusVariant::Quadratic => ((1.0 - e).sqrt(), (1.0 + e).sqrt()),
        }
    }

    fn angle_range(&self, alpha: usize) -> (f64, f64) {
        let s = self.angle();
        (alpha as f64 * s, ((alpha + 1) as f64 * s).min(FRAC_PI_2))
    }

    /// Sector index of `w = h z`, or `None` outside the quarter annulus.
    fn unit_index(&self, x: f64, y: f64, tol: f64) -> Option<usize> {
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let e = self.epsilon();
        let r2 = x * x + y * y;
        let inside = match self.variant {
            AnnulusVariant::Linear => (r2.sqrt() - 1.0).abs() <= e + tol,
            AnnulusVariant::Quadratic => (r2 - 1.0).abs() <= e + tol,
        };
        if !inside {
            return None;
        }
        let idx = (y.atan2(x) / self.angle() + tol).floor().max(0.0) as usize;
        Some(idx.min(self.n_sectors()))
    }

    /// Sector index of a point in original coordinates.
    pub fn sector_index(&self, z: (f64, f64)) -> Option<usize> {
        self.unit_index(self.h * z.0, self.h * z.1, 1e-12)
    }
}

pub fn sector_membership(z: (f64, f64), family: &SectorFamily, alpha: usize) -> bool {
    family.sector_index(z) == Some(alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Disjointness {
    /// Lower bound on the distance between the two sums: sampled distance minus the
    /// sampling error `4 * grid_step`, or a cell-subdivision bound.
    Disjoint { margin: f64 },
    /// The two sums lie in disjoint half-open angular cones.
    ConeSeparated,
    /// Explicit `z1 + z2 = z3 + z4` with each point in its sector (unit scale).
    Intersect { witness: [(f64, f64); 4] },
    Unknown { sampled_min: f64 },
}

impl Disjointness {
    pub fn is_disjoint(&self) -> bool {
        matches!(self, Disjointness::Disjoint { .. } | Disjointness::ConeSeparated)
    }
}

/// Interior cell centres of the sector in unit coordinates; every sector point lies within
/// `grid_step` of a sample.
fn sample_sector(f: &SectorFamily, alpha: usize, g: f64) -> Vec<(f64, f64)> {
    let (r0, r1) = f.unit_radii();
    let (t0, t1) = f.angle_range(alpha);
    let nr = ((r1 - r0) / g).ceil().max(1.0) as usize;
    let nt = (r1 * (t1 - t0) / g).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(nr * nt);
    for i in 0..nr {
        let r = r0 + (i as f64 + 0.5) * (r1 - r0) / nr as f64;
        for j in 0..nt {
            let t = t0 + (j as f64 + 0.5) * (t1 - t0) / nt as f64;
            out.push((r * t.cos(), r * t.sin()));
        }
    }
    out
}

struct PairCloud {
    points: Vec<(f64, f64)>,
    origin: Vec<(u32, u32)>,
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl PairCloud {
    fn new(a: &[(f64, f64)], b: &[(f64, f64)], cell: f64) -> Self {
        let mut points = Vec::with_capacity(a.len() * b.len());
        let mut origin = Vec::with_capacity(a.len() * b.len());
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in a.iter().enumerate() {
            for (j, q) in b.iter().enumerate() {
                let s = (p.0 + q.0, p.1 + q.1);
                buckets.entry(key(s, cell)).or_default().push(points.len() as u32);
                points.push(s);
                origin.push((i as u32, j as u32));
            }
        }
        Self { points, origin, cell, buckets }
    }
}

fn key(p: (f64, f64), cell: f64) -> (i64, i64) {
    ((p.0 / cell).floor() as i64, (p.1 / cell).floor() as i64)
}

struct SectorSamples {
    family: SectorFamily,
    grid_step: f64,
    samples: Vec<Vec<(f64, f64)>>,
    clouds: HashMap<(usize, usize), PairCloud>,
}

impl SectorSamples {
    fn new(family: SectorFamily, grid_step: f64) -> Self {
        let samples = (0..=family.n_sectors()).map(|a| sample_sector(&family, a, grid_step)).collect();
        Self { family, grid_step, samples, clouds: HashMap::new() }
    }

    fn cloud(&mut self, a: usize, b: usize) -> &PairCloud {
        let cell = 8.0 * self.grid_step;
        let samples = &self.samples;
        self.clouds.entry((a, b)).or_insert_with(|| PairCloud::new(&samples[a], &samples[b], cell))
    }

    fn verdict(&mut self, q: [usize; 4]) -> Disjointness {
        if cone_separated(&self.family, q) {
            return Disjointness::ConeSeparated;
        }
        self.cloud(q[0], q[1]);
        self.cloud(q[2], q[3]);
        let g = self.grid_step;
        let p = &self.clouds[&(q[0], q[1])];
        let r = &self.clouds[&(q[2], q[3])];
        let cap = r.cell;
        let mut best = (cap, usize::MAX, usize::MAX);
        'outer: for (i, s) in p.points.iter().enumerate() {
            let (kx, ky) = key(*s, cap);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = r.buckets.get(&(kx + dx, ky + dy)) {
                        for &j in list {
                            let t = r.points[j as usize];
                            let d = ((s.0 - t.0).powi(2) + (s.1 - t.1).powi(2)).sqrt();
                            if d < best.0 {
                                best = (d, i, j as usize);
                                if d < 0.25 * g {
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
        }
        if best.0 > 4.0 * g {
            return Disjointness::Disjoint { margin: best.0 - 4.0 * g };
        }
        let (i1, i2) = p.origin[best.1];
        let (i3, i4) = r.origin[best.2];
        let z = [
            self.samples[q[0]][i1 as usize],
            self.samples[q[1]][i2 as usize],
            self.samples[q[2]][i3 as usize],
            self.samples[q[3]][i4 as usize],
        ];
        match witness(&self.family, q, z) {
            Some(w) => Disjointness::Intersect { witness: w },
            None => subdivide(&self.family, q, best.0, 200_000),
        }
    }
}

/// Angular range of `A_a + A_b` is inside `[min(a, b) s, (max(a, b) + 1) s)`; disjoint
/// half-open ranges separate the sums.
fn cone_separated(f: &SectorFamily, q: [usize; 4]) -> bool {
    let n = f.n_sectors();
    let (lo1, hi1) = (q[0].min(q[1]), q[0].max(q[1]));
    let (lo2, hi2) = (q[2].min(q[3]), q[2].max(q[3]));
    // the last sector is closed at pi/2, which only matters when it is the upper end
    (hi1 < lo2 && hi1 < n) || (hi2 < lo1 && hi2 < n)
}

#[derive(Clone, Copy)]
struct PolarCell {
    r0: f64,
    r1: f64,
    t0: f64,
    t1: f64,
}

impl PolarCell {
    fn centre(&self) -> (f64, f64) {
        let r = 0.5 * (self.r0 + self.r1);
        let t = 0.5 * (self.t0 + self.t1);
        (r * t.cos(), r * t.sin())
    }

    /// Every point of the cell lies within this distance of the centre.
    fn radius(&self) -> f64 {
        0.5 * (self.r1 - self.r0) + 0.5 * self.r1 * (self.t1 - self.t0)
    }

    fn split(&self) -> (PolarCell, PolarCell) {
        if self.r1 - self.r0 >= self.r1 * (self.t1 - self.t0) {
            let rm = 0.5 * (self.r0 + self.r1);
            (PolarCell { r1: rm, ..*self }, PolarCell { r0: rm, ..*self })
        } else {
            let tm = 0.5 * (self.t0 + self.t1);
            (PolarCell { t1: tm, ..*self }, PolarCell { t0: tm, ..*self })
        }
    }
}

struct Node {
    lower: f64,
    cells: [PolarCell; 4],
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on the lower bound
        other.lower.total_cmp(&self.lower)
    }
}

fn node(cells: [PolarCell; 4]) -> (Node, [(f64, f64); 4], f64) {
    let c = cells.map(|c| c.centre());
    let gap = ((c[0].0 + c[1].0 - c[2].0 - c[3].0).powi(2) + (c[0].1 + c[1].1 - c[2].1 - c[3].1).powi(2)).sqrt();
    let slack: f64 = cells.iter().map(|c| c.radius()).sum();
    (Node { lower: gap - slack, cells }, c, gap)
}

/// Best-first subdivision of the four sectors into polar cells. A cell quadruple whose
/// centre gap exceeds the summed cell radii cannot meet; when every remaining quadruple
/// is excluded the sums are disjoint with the smallest such bound as margin.
fn subdivide(f: &SectorFamily, q: [usize; 4], sampled_min: f64, budget: usize) -> Disjointness {
    let (r0, r1) = f.unit_radii();
    let cells = q.map(|a| {
        let (t0, t1) = f.angle_range(a);
        PolarCell { r0, r1, t0, t1 }
    });
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(node(cells).0);
    let mut margin = f64::INFINITY;
    for _ in 0..budget {
        let Some(top) = heap.pop() else {
            return Disjointness::Disjoint { margin };
        };
        if top.lower > 0.0 {
            // every remaining node is at least this far apart
            return Disjointness::Disjoint { margin: margin.min(top.lower) };
        }
        let k = (0..4).max_by(|&a, &b| top.cells[a].radius().total_cmp(&top.cells[b].radius())).unwrap();
        let (a, b) = top.cells[k].split();
        for half in [a, b] {
            let mut cells = top.cells;
            cells[k] = half;
            let (n, centres, gap) = node(cells);
            if gap < 1e-3 * n.cells.iter().map(|c| c.radius()).sum::<f64>() + 1e-14 {
                if let Some(w) = witness(f, q, centres) {
                    return Disjointness::Intersect { witness: w };
                }
            }
            if n.lower > 0.0 {
                margin = margin.min(n.lower);
            } else {
                heap.push(n);
            }
        }
    }
    Disjointness::Unknown { sampled_min }
}

/// Moves the sampled points so that `z1 + z2 = z3 + z4` exactly and checks membership.
fn witness(f: &SectorFamily, q: [usize; 4], z: [(f64, f64); 4]) -> Option<[(f64, f64); 4]> {
    let r = (z[0].0 + z[1].0 - z[2].0 - z[3].0, z[0].1 + z[1].1 - z[2].1 - z[3].1);
    let shifts: [[f64; 4]; 7] = [
        [-0.25, -0.25, 0.25, 0.25],
        [-0.5, -0.5, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.5],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    for s in shifts {
        let w: [(f64, f64); 4] = std::array::from_fn(|k| (z[k].0 + s[k] * r.0, z[k].1 + s[k] * r.1));
        if (0..4).all(|k| f.unit_index(w[k].0, w[k].1, 0.0) == Some(q[k])) {
            return Some(w);
        }
    }
    None
}

/// Certificate for `(A_a1 + A_a2) cap (A_a3 + A_a4) = empty`, from sector samples with
/// spacing `grid_step` (unit scale).
pub fn minkowski_disjointness(family: &SectorFamily, q: [usize; 4], grid_step: f64) -> Result<Disjointness> {
    if q.iter().any(|&a| a > family.n_sectors()) {
        return invalid("sector index out of range");
    }
    if !(grid_step > 0.0) {
        return invalid("grid step must be positive");
    }
    Ok(SectorSamples::new(*family, grid_step).verdict(q))
}

/// `min(|a1 - a3| + |a2 - a4|, |a1 - a4| + |a2 - a3|)`.
pub fn index_distance(q: [usize; 4]) -> usize {
    let d = |a: usize, b: usize| a.abs_diff(b);
    (d(q[0], q[2]) + d(q[1], q[3])).min(d(q[0], q[3]) + d(q[1], q[2]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub epsilon: f64,
    #[serde(rename = "N_sectors")]
    pub n_sectors: usize,
    /// Largest index distance among quadruples not certified disjoint.
    #[serde(rename = "Q_min")]
    pub q_min: usize,
    /// Largest index distance among certified intersecting quadruples.
    pub q_intersect: usize,
    pub threshold: usize,
    /// Canonical quadruples (pairs unordered, pair order unordered).
    pub quadruples: usize,
    pub violating: usize,
    pub violating_disjoint: usize,
    pub inconclusive_count: usize,
    pub inconclusive_violating: usize,
    pub refinements: usize,
}

/// Classifies every canonical quadruple of the unit family at `epsilon`, refining the
/// sampling of undecided quadruples up to `max_refinements` times.
pub fn lemma_geom_bruteforce(epsilon: f64, threshold: usize, max_refinements: usize) -> Result<LemmaReport> {
    let family = SectorFamily::rescaled(epsilon)?;
    let n = family.n_sectors();
    let pairs: Vec<(usize, usize)> = (0..=n).flat_map(|a| (a..=n).map(move |b| (a, b))).collect();
    let mut quads: Vec<[usize; 4]> = Vec::new();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for &(c, d) in &pairs[i..] {
            quads.push([a, b, c, d]);
        }
    }
    let mut verdicts: Vec<Option<Disjointness>> = vec![None; quads.len()];
    let mut pending: Vec<usize> = (0..quads.len()).collect();
    let mut step = epsilon / 2.0;
    let mut refinements = 0;
    loop {
        let mut samples = SectorSamples::new(family, step);
        let mut still = Vec::new();
        for &i in &pending {
            let v = samples.verdict(quads[i]);
            if matches!(v, Disjointness::Unknown { .. }) {
                still.push(i);
            }
            verdicts[i] = Some(v);
        }
        pending = still;
        if pending.is_empty() || refinements == max_refinements {
            break;
        }
        refinements += 1;
        step /= 2.0;
    }
    let mut report = LemmaReport {
        epsilon,
        n_sectors: n,
        q_min: 0,
        q_intersect: 0,
        threshold,
        quadruples: quads.len(),
        violating: 0,
        violating_disjoint: 0,
        inconclusive_count: 0,
        inconclusive_violating: 0,
        refinements,
    };
    for (q, v) in quads.iter().zip(&verdicts) {
        let d = index_distance(*q);
        let v = v.as_ref().expect("every quadruple classified");
        if !v.is_disjoint() {
            report.q_min = report.q_min.max(d);
        }
        if matches!(v, Disjointness::Intersect { .. }) {
            report.q_intersect = report.q_intersect.max(d);
        }
        let unknown = matches!(v, Disjointness::Unknown { .. });
        report.inconclusive_count += unknown as usize;
        if d > threshold {
            report.violating += 1;
            report.violating_disjoint += v.is_disjoint() as usize;
            report.inconclusive_violating += unknown as usize;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorCounts {
    pub kappa: f64,
    pub h: f64,
    pub counts: Vec<usize>,
    /// Points of the quarter annulus counted without binning.
    pub total: usize,
}

/// Dual-lattice points `w_n` in each sector of the family.
pub fn sector_counts(geometry: TorusGeometry, family: &SectorFamily) -> SectorCounts {
    let e = family.epsilon();
    let rmax = match family.variant {
        AnnulusVariant::Linear => (1.0 + e) / family.h,
        AnnulusVariant::Quadratic => ((1.0 + e) / (family.h * family.h)).sqrt(),
    };
    let nx = (rmax * geometry.period_x / (2.0 * PI)).ceil() as i64 + 1;
    let ny = (rmax * geometry.period_y / (2.0 * PI)).ceil() as i64 + 1;
    let mut counts = vec![0; family.n_sectors() + 1];
    let mut total = 0;
    for n1 in 0..=nx {
        for n2 in 0..=ny {
            let w = geometry.frequency((n1, n2));
            let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
            let inside = match family.variant {
                AnnulusVariant::Linear => (family.h * r - 1.0).abs() <= e + 1e-12,
                AnnulusVariant::Quadratic => (family.h * family.h * r * r - 1.0).abs() <= e + 1e-12,
            };
            total += inside as usize;
            if let Some(a) = family.sector_index((w[0], w[1])) {
                counts[a] += 1;
            }
        }
    }
    SectorCounts { kappa: family.kappa, h: family.h, counts, total }
}

pub fn lattice_points_in_sector(geometry: TorusGeometry, family: &SectorFamily, alpha: usize) -> Result<usize> {
    if alpha > family.n_sectors() {
        return invalid("sector index out of range");
    }
    Ok(sector_counts(geometry, family).counts[alpha])
}

/// Exact fraction of `[0, T]` that `z0 + s v` spends in the region, from the crossing
/// times of the rectangle edges.
pub fn exact_time_fraction(
    geometry: TorusGeometry,
    velocity: [f64; 2],
    z0: (f64, f64),
    region: &ObservationRegion,
    t: f64,
) -> f64 {
    let mut times = vec![0.0, t];
    let mut crossings = |edges: &[f64], x0: f64, v: f64, period: f64| {
        if v.abs() < 1e-300 {
            return;
        }
        for &e in edges {
            // x0 + s v = e + k period, s in [0, t]
            let k0 = ((x0 - e) / period).floor() as i64 - 1;
            let k1 = ((x0 + t * v - e) / period).ceil() as i64 + 1;
            let (lo, hi) = if k0 <= k1 { (k0, k1) } else { (k1, k0) };
            for k in lo..=hi {
                let s = (e + k as f64 * period - x0) / v;
                if s > 0.0 && s < t {
                    times.push(s);
                }
            }
        }
    };
    let ex: Vec<f64> = region.rects.iter().flat_map(|r| [r.x0, r.x1]).collect();
    let ey: Vec<f64> = region.rects.iter().flat_map(|r| [r.y0, r.y1]).collect();
    crossings(&ex, z0.0, velocity[0], geometry.period_x);
    crossings(&ey, z0.1, velocity[1], geometry.period_y);
    times.sort_by(|a, b| a.total_cmp(b));
    let mut inside = 0.0;
    for w in times.windows(2) {
        if w[1] > w[0] {
            let s = 0.5 * (w[0] + w[1]);
            if region.contains(z0.0 + s * velocity[0], z0.1 + s * velocity[1]) {
                inside += w[1] - w[0];
            }
        }
    }
    inside / t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Direction {
    /// Lattice direction `(pA, qB)`.
    Rational(i64, i64),
    /// Unit direction `(cos theta, sin theta)`.
    Angle(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HittingReport {
    pub fraction: f64,
    /// `|f(2n) - f(n)|` for sampled directions, zero for exact integration.
    pub refinement_delta: f64,
    /// Orbit period for rational directions.
    pub period: Option<f64>,
}

/// Fraction of `[0, T]` spent in the region by the unit-speed line from `z0`. Rational
/// directions are integrated exactly; angles are sampled at `samples` and `2 samples`
/// midpoints.
pub fn hitting_fraction(
    geometry: TorusGeometry,
    direction: Direction,
    z0: (f64, f64),
    region: &ObservationRegion,
    t: f64,
    samples: usize,
) -> Result<HittingReport> {
    if !(t > 0.0) {
        return invalid("time must be positive");
    }
    match direction {
        Direction::Rational(p, q) => {
            let f = direction_frame(geometry, p, q)?;
            Ok(HittingReport {
                fraction: exact_time_fraction(geometry, f.xi, z0, region, t),
                refinement_delta: 0.0,
                period: Some(f.b),
            })
        }
        Direction::Angle(theta) => {
            let v = [theta.cos(), theta.sin()];
            let sampled = |n: usize| {
                let hits = (0..n)
                    .filter(|&i| {
                        let s = t * (i as f64 + 0.5) / n as f64;
                        region.contains(z0.0 + s * v[0], z0.1 + s * v[1])
                    })
                    .count();
                hits as f64 / n as f64
            };
            let n = samples.max(1);
            let coarse = sampled(n);
            let fine = sampled(2 * n);
            Ok(HittingReport { fraction: fine, refinement_delta: (fine - coarse).abs(), period: None })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalBound {
    pub delta: f64,
    pub direction: (i64, i64),
    pub start: (f64, f64),
    pub directions: usize,
}

/// Minimum over primitive directions with `n_min <= |(p, q)| <= norm_cap` and starting
/// points on a `z_grid x z_grid` grid of the one-period fraction spent in the region.
pub fn rational_hitting_lowerbound(
    geometry: TorusGeometry,
    region: &ObservationRegion,
    n_min: f64,
    norm_cap: f64,
    z_grid: usize,
) -> Result<RationalBound> {
    let cap = norm_cap.floor() as i64;
    let mut dirs = Vec::new();
    for p in -cap..=cap {
        for q in 0..=cap {
            if q == 0 && p <= 0 {
                continue;
            }
            let r = ((p * p + q * q) as f64).sqrt();
            if r >= n_min && r <= norm_cap && gcd(p, q) == 1 {
                dirs.push((p, q));
            }
        }
    }
    if dirs.is_empty() {
        return invalid("no primitive directions in range");
    }
    let mut best = RationalBound { delta: f64::INFINITY, direction: dirs[0], start: (0.0, 0.0), directions: dirs.len() };
    for &(p, q) in &dirs {
        let f = direction_frame(geometry, p, q)?;
        for i in 0..z_grid {
            for j in 0..z_grid {
                let z0 = (
                    geometry.period_x * (i as f64 + 0.5) / z_grid as f64,
                    geometry.period_y * (j as f64 + 0.5) / z_grid as f64,
                );
                let frac = exact_time_fraction(geometry, f.xi, z0, region, f.b);
                if frac < best.delta {
                    best.delta = frac;
                    best.direction = (p, q);
                    best.start = z0;
                }
            }
        }
    }
    Ok(best)
}

/// Lower bound `[eps m / pi] eps / (2 pi |(p, q)|)`, `m = max(|p|, |q|)`, on the one-period
/// fraction for regions containing a ball of radius `2 eps` on the `2 pi` torus.
pub fn rational_fraction_floor(eps: f64, p: i64, q: i64) -> f64 {
    let m = p.abs().max(q.abs()) as f64;
    (eps * m / PI).floor() * eps / (2.0 * PI * ((p * p + q * q) as f64).sqrt())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Square of side `4 eps` centred at `z0`, containing the ball of radius `2 eps`.
pub fn ball_square(geometry: TorusGeometry, z0: (f64, f64), eps: f64) -> Result<ObservationRegion> {
    ObservationRegion::new(geometry, vec![Rect::new(z0.0 - 2.0 * eps, z0.0 + 2.0 * eps, z0.1 - 2.0 * eps, z0.1 + 2.0 * eps)])
}
