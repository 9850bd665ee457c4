//! Deterministic low-discrepancy sample points in chart boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5EED;
pub const DEFAULT_SAMPLES: usize = 64;
/// Fraction of the half-width kept clear of the box boundary.
pub const MARGIN: f64 = 0.1;

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Halton points in the unit cube with a seeded Cranley-Patterson shift.
pub fn halton(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "sampling supports at most {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| (0..dim).map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract()).collect())
        .collect()
}

/// Points in `prod [-w_d, w_d]` shrunk by the margin.
pub fn box_points(half_widths: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    halton(half_widths.len(), count, seed)
        .into_iter()
        .map(|u| u.iter().zip(half_widths).map(|(t, w)| (2.0 * t - 1.0) * w * (1.0 - MARGIN)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_deterministic_and_inside_the_box() {
        let a = box_points(&[1.0, 0.5, 2.0], 64, DEFAULT_SEED);
        assert_eq!(a, box_points(&[1.0, 0.5, 2.0], 64, DEFAULT_SEED));
        assert_ne!(a, box_points(&[1.0, 0.5, 2.0], 64, 1));
        for p in &a {
            assert!(p[0].abs() <= 0.9 && p[1].abs() <= 0.45 && p[2].abs() <= 1.8);
        }
    }

    #[test]
    fn halton_base_two_prefix() {
        let p = halton(1, 3, 0);
        let shift = p[0][0] - 0.5;
        let expect = [0.5, 0.25, 0.75];
        for (q, e) in p.iter().zip(expect) {
            assert!(((q[0] - e - shift).rem_euclid(1.0)).min((e + shift - q[0]).rem_euclid(1.0)) < 1e-12);
        }
    }
}
