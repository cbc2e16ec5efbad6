//! Seeded random streams. Every stream is a ChaCha8 generator keyed by
//! `SHA-256(label || seed)`, so named streams are independent and reproducible.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::torus::{FourierField, ModeBox, TorusGeometry};

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, label: &str) -> Rng {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(seed.to_le_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Standard complex Gaussian, `E|z|^2 = 1`.
pub fn complex_normal(rng: &mut Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_vector(rng: &mut Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| complex_normal(rng)).collect()
}

/// Random field with Gaussian coefficients on the whole box.
pub fn random_field(rng: &mut Rng, geometry: TorusGeometry, cutoff: usize) -> FourierField {
    let len = ModeBox::new(cutoff).len();
    FourierField::from_coeffs(geometry, cutoff, complex_vector(rng, len)).expect("length matches box")
}

/// Real random potential with `|V_n| ~ <n>^{-1-eps}` and random phases, rescaled to the
/// requested `L^2` norm.
pub fn rough_potential(
    rng: &mut Rng,
    geometry: TorusGeometry,
    cutoff: usize,
    eps: f64,
    l2_norm: f64,
) -> FourierField {
    let mut v = FourierField::zeros(geometry, cutoff);
    let b = v.mode_box();
    for n in b.modes() {
        // fill one representative of each pair {n, -n}
        if (n.0, n.1) < (0, 0) {
            continue;
        }
        let weight = (1.0 + (n.0 * n.0 + n.1 * n.1) as f64).powf(-(1.0 + eps) / 2.0);
        let c = if n == (0, 0) {
            Complex64::new(StandardNormal.sample(rng), 0.0) * weight
        } else {
            complex_normal(rng) * weight
        };
        v.set(n, c).unwrap();
        v.set((-n.0, -n.1), c.conj()).unwrap();
    }
    let norm = v.l2_norm();
    if norm > 0.0 {
        v = v.scaled(Complex64::new(l2_norm / norm, 0.0));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, "x").gen();
        let b: u64 = stream(7, "x").gen();
        let c: u64 = stream(7, "y").gen();
        let d: u64 = stream(8, "x").gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn rough_potential_is_real_with_requested_norm() {
        let mut rng = stream(1, "v");
        let v = rough_potential(&mut rng, TorusGeometry::square(), 6, 0.1, 0.05);
        assert!(v.is_real(1e-15));
        assert!((v.l2_norm() - 0.05).abs() < 1e-15);
    }
}
