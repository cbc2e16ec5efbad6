//! Independent reference computations checked against the library routes.

use std::f64::consts::PI;

use num_complex::Complex64;
use toruslab::geometry::{
    ball_square, hitting_fraction, index_distance, minkowski_disjointness, rational_fraction_floor, sector_counts,
    AnnulusVariant, Direction, SectorFamily,
};
use toruslab::linalg::{CMatrix, CVector};
use toruslab::lowfreq::{cluster_values, exp_gram_min, exp_gram_min_window, hp_norm, vandermonde_sigma, ModelSystem};
use toruslab::observability::build_gramian;
use toruslab::rng::{complex_vector, random_field, rough_potential, stream};
use toruslab::spectral1d::{build_floquet, region_gram_1d, IntervalSet, Potential1D};
use toruslab::spectral2d::{build_hamiltonian, propagate, split_step};
use toruslab::torus::{synthesize_grid, FourierField, ObservationRegion, Rect, TorusGeometry};

const SEED: u64 = 7;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn gramian_matches_time_quadrature_of_masked_energy() {
    let g = TorusGeometry::square();
    let mut rng = stream(SEED, "oracle/gramian");
    let v = rough_potential(&mut rng, g, 2, 0.5, 1.0);
    let h = build_hamiltonian(g, &v, 2).unwrap();
    let region = ObservationRegion::new(g, vec![Rect::new(0.3, 2.5, 1.0, 4.0)]).unwrap();
    let (t, m) = (0.7, 9);
    let gram = build_gramian(&h, &region, t, m).unwrap();
    let mask = region.mask(m);
    for _ in 0..3 {
        let u = random_field(&mut rng, g, 2);
        let masked_energy = |s: f64| {
            let grid = synthesize_grid(&propagate(&h, &u, s).unwrap(), m).unwrap();
            grid.samples.iter().zip(&mask).filter(|(_, &in_)| in_).map(|(z, _)| z.norm_sqr()).sum::<f64>()
                * grid.cell_area()
        };
        let reference = simpson(masked_energy, 0.0, t, 600);
        let got = gram.quadratic_form(&h.eigen, &h.to_vector(&u).unwrap());
        assert!((got - reference).abs() < 1e-8 * reference.max(1.0), "{got} vs {reference}");
    }
}

#[test]
fn full_torus_gramian_is_time_times_identity() {
    let g = TorusGeometry::new(2.0, 5.0).unwrap();
    let mut rng = stream(SEED, "oracle/full");
    let v = rough_potential(&mut rng, g, 3, 0.5, 2.0);
    let h = build_hamiltonian(g, &v, 3).unwrap();
    let gram = build_gramian(&h, &ObservationRegion::full(g), 1.5, 13).unwrap();
    assert!((gram.report.lambda_min - 1.5).abs() < 1e-10);
    assert!((gram.report.lambda_max - 1.5).abs() < 1e-10);
    assert!((gram.report.constant - 1.0 / 1.5).abs() < 1e-10);
}

#[test]
fn free_split_step_is_exact() {
    let g = TorusGeometry::square();
    let mut rng = stream(SEED, "oracle/split");
    let u = random_field(&mut rng, g, 3);
    let zero = FourierField::zeros(g, 0);
    let h = build_hamiltonian(g, &zero, 3).unwrap();
    let exact = propagate(&h, &u, 0.9).unwrap();
    let split = split_step(g, &zero, &u, 0.9, 3, 7).unwrap();
    assert!(split.with_cutoff(3).sub(&exact).l2_norm() < 1e-12);
}

#[test]
fn free_floquet_spectrum_is_shifted_squares() {
    let (k, n) = (0.3, 5i64);
    let op = build_floquet(&Potential1D::zero(), k, n as usize).unwrap();
    let mut expected: Vec<f64> = (-n..=n).map(|j| (j as f64 + k).powi(2)).collect();
    expected.sort_by(|a, b| a.total_cmp(b));
    for (a, b) in op.eigen.values.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn mathieu_floquet_matches_perturbation_theory() {
    // ground state at k = 0 of -d^2 + a cos x: E0 = -2 (a/2)^2 + O(a^4)
    let a = 1e-2;
    let op = build_floquet(&Potential1D::cosine(a, 1), 0.0, 10).unwrap();
    assert!((op.eigen.values[0] + a * a / 2.0).abs() < 1e-8);
}

#[test]
fn two_frequency_gram_has_closed_form() {
    for &(d, t) in &[(0.3f64, 2.0f64), (1.7, 5.0), (5.0, 0.4)] {
        // window length L = T/4: lambda_min = L - |2 sin(d L / 2) / d|
        let l = 0.25 * t;
        let expected = l - (2.0 * (0.5 * d * l).sin() / d).abs();
        let got = exp_gram_min(&[1.0, 1.0 + d], t).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}

#[test]
fn exp_gram_for_small_gap_behaves_like_cubic() {
    // three equally spaced frequencies, gap g, window L: lambda_min ~ g^4 L^5 / 1080
    let (gap, l) = (1e-2, 1.0);
    let got = exp_gram_min_window(&[0.0, gap, 2.0 * gap], 0.0, l).unwrap();
    let expected = gap.powi(4) * l.powi(5) / 1080.0;
    assert!((got / expected - 1.0).abs() < 1e-2, "{got} vs {expected}");
}

#[test]
fn vandermonde_coefficients_solve_the_interpolation_system() {
    let mu = [0.0, 0.9, 2.3, 4.1, 7.4];
    let t = 3.0;
    let v = vandermonde_sigma(&mu, 2, 5, t).unwrap();
    let eval = |m: f64| {
        let x = Complex64::from_polar(1.0, -m * v.tau);
        v.sigma.iter().enumerate().map(|(p, s)| s * x.powu(p as u32 + 1)).sum::<Complex64>()
    };
    for &m in &mu[..2] {
        assert!(eval(m).norm() < 1e-10);
    }
    let c = eval(mu[2]);
    assert!(c.norm() > 1e-6);
    for &m in &mu[3..] {
        assert!((eval(m) - c).norm() < 1e-9 * c.norm().max(1.0));
    }
    let largest = v.sigma.iter().map(|s| s.norm()).fold(0.0, f64::max);
    assert!((largest - 1.0).abs() < 1e-14);
}

#[test]
fn hp_norm_matches_direct_summation() {
    let op = build_floquet(&Potential1D::cosine(1.0, 1), 0.2, 4).unwrap();
    let omega = IntervalSet::new(vec![(0.0, PI)]).unwrap();
    let model = ModelSystem::new(op.eigen.clone(), region_gram_1d(&omega, 4, 64).unwrap(), 1.0).unwrap();
    let mut rng = stream(SEED, "oracle/hp");
    let phi = CVector::from_vec(complex_vector(&mut rng, op.dim()));
    assert!((hp_norm(&model, &phi, 0.0) - phi.norm()).abs() < 1e-12);
    let direct: f64 = (0..op.dim())
        .map(|a| {
            let c = op.eigen.vectors.column(a).dotc(&phi);
            (1.0 + op.eigen.values[a].powi(2)).powf(-2.0) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    assert!((hp_norm(&model, &phi, -2.0) - direct).abs() < 1e-12 * direct);
}

#[test]
fn identity_observation_gives_constant_one_over_t() {
    let op = build_floquet(&Potential1D::cosine(0.5, 2), 0.1, 3).unwrap();
    let d = op.dim();
    let model = ModelSystem::new(op.eigen.clone(), CMatrix::identity(d, d), 2.5).unwrap();
    assert!((model.gramian_constant().unwrap() - 0.4).abs() < 1e-12);
    assert!((model.a_norm - 1.0).abs() < 1e-12);
}

#[test]
fn clusters_merge_close_values_and_count_free_multiplicities() {
    let c = cluster_values(&[0.0, 1.0, 1.0 + 1e-12, 4.0, 9.0], 2.0, 5.0, 1e-10).unwrap();
    assert_eq!(c.mu.len(), 4);
    assert_eq!(c.multiplicity(1), 2);
    assert_eq!((c.r1, c.r2), (2, 3));
    assert!(!c.ambiguous);
    // free 1D operator at k = 0: n^2 has multiplicity 2 for n != 0
    let op = build_floquet(&Potential1D::zero(), 0.0, 4).unwrap();
    let c = cluster_values(&op.eigen.values, 5.0, 20.0, 1e-10).unwrap();
    let mult: Vec<usize> = (0..c.mu.len()).map(|r| c.multiplicity(r)).collect();
    assert_eq!(mult, vec![1, 2, 2, 2, 2]);
}

#[test]
fn disjointness_verdict_is_symmetric() {
    let f = SectorFamily::rescaled(1.0 / 16.0).unwrap();
    let n = f.n_sectors();
    for q in [[0, 1, 3, 5], [2, 2, 4, 0], [1, 5, 3, 3], [0, 6, 6, 0], [0, 3, 1, 2]] {
        assert!(q.iter().all(|&a| a <= n));
        let base = minkowski_disjointness(&f, q, 0.01).unwrap().is_disjoint();
        for p in [[q[1], q[0], q[2], q[3]], [q[2], q[3], q[0], q[1]], [q[0], q[1], q[3], q[2]]] {
            assert_eq!(minkowski_disjointness(&f, p, 0.01).unwrap().is_disjoint(), base, "{q:?} vs {p:?}");
            assert_eq!(index_distance(p), index_distance(q));
        }
    }
}

#[test]
fn sector_counts_agree_with_direct_enumeration() {
    let g = TorusGeometry::square();
    let f = SectorFamily::new(1.0, 0.05, AnnulusVariant::Quadratic).unwrap();
    let counts = sector_counts(g, &f);
    // h^2 = e = 1/400, so the annulus is |n1^2 + n2^2 - 400| <= 1 in exact arithmetic
    let mut direct = vec![0usize; f.n_sectors() + 1];
    for n1 in 0..40i64 {
        for n2 in 0..40i64 {
            if (n1 * n1 + n2 * n2 - 400).abs() > 1 {
                continue;
            }
            let a = ((n2 as f64).atan2(n1 as f64) / f.angle()).floor() as usize;
            direct[a.min(f.n_sectors())] += 1;
        }
    }
    assert_eq!(counts.counts, direct);
    assert_eq!(counts.total, direct.iter().sum::<usize>());
}

#[test]
fn hitting_fractions_against_closed_forms() {
    let g = TorusGeometry::square();
    let full = ObservationRegion::full(g);
    let r = hitting_fraction(g, Direction::Rational(3, 5), (0.4, 1.1), &full, 17.0, 0).unwrap();
    assert!((r.fraction - 1.0).abs() < 1e-12);
    // horizontal line through a vertical strip of width w: fraction w / 2 pi over whole periods
    let strip = ObservationRegion::new(g, vec![Rect::new(1.0, 2.5, 0.0, 2.0 * PI)]).unwrap();
    let r = hitting_fraction(g, Direction::Rational(1, 0), (0.0, 0.3), &strip, 4.0 * PI, 0).unwrap();
    assert!((r.fraction - 1.5 / (2.0 * PI)).abs() < 1e-12);
    // a strip missed by a horizontal line
    let band = ObservationRegion::new(g, vec![Rect::new(0.0, 2.0 * PI, 2.0, 3.0)]).unwrap();
    let r = hitting_fraction(g, Direction::Rational(1, 0), (0.0, 0.5), &band, 10.0, 0).unwrap();
    assert_eq!(r.fraction, 0.0);
}

#[test]
fn rational_fraction_is_period_invariant_and_above_floor() {
    let g = TorusGeometry::square();
    let eps = 0.5;
    let region = ball_square(g, (PI, PI), eps).unwrap();
    for (p, q) in [(1, 4), (3, 7), (5, 2), (8, 9)] {
        let one = hitting_fraction(g, Direction::Rational(p, q), (0.2, 0.9), &region, 1.0, 0).unwrap();
        let period = one.period.unwrap();
        let a = hitting_fraction(g, Direction::Rational(p, q), (0.2, 0.9), &region, period, 0).unwrap();
        let b = hitting_fraction(g, Direction::Rational(p, q), (0.2, 0.9), &region, 2.0 * period, 0).unwrap();
        assert!((a.fraction - b.fraction).abs() < 1e-12);
        assert!(a.fraction + 1e-12 >= rational_fraction_floor(eps, p, q), "({p}, {q})");
    }
}

#[test]
fn sampled_angle_matches_exact_rational_integration() {
    let g = TorusGeometry::square();
    let region = ObservationRegion::new(g, vec![Rect::new(1.0, 3.0, 2.0, 2.7)]).unwrap();
    let (p, q) = (2i64, 3i64);
    let exact = hitting_fraction(g, Direction::Rational(p, q), (0.1, 0.2), &region, 30.0, 0).unwrap();
    let sampled =
        hitting_fraction(g, Direction::Angle((q as f64).atan2(p as f64)), (0.1, 0.2), &region, 30.0, 200_000).unwrap();
    assert!((exact.fraction - sampled.fraction).abs() < 1e-3);
}
