//! Deterministic low-discrepancy sample points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::submanifold::Domain;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `k` in base `b`.
fn radical_inverse(mut k: u64, b: u64) -> f64 {
    let (mut inv, mut denom) = (0.0, 1.0);
    while k > 0 {
        denom *= b as f64;
        inv += (k % b) as f64 / denom;
        k /= b;
    }
    inv
}

/// `count` points of a Halton sequence in `domain`, with a random
/// Cranley–Patterson shift drawn from `seed`.
pub fn halton_points(domain: &Domain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = domain.lo.len();
    assert!(dim <= PRIMES.len(), "too many parameters for the Halton bases");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|k| {
            let t: Vec<f64> = (0..dim)
                .map(|d| (radical_inverse(k, PRIMES[d]) + shift[d]).fract())
                .collect();
            domain.from_unit(&t)
        })
        .collect()
}

/// Seed for per-point randomness, mixed from the run seed and the point's position.
pub fn point_seed(seed: u64, case_index: usize, point_index: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = seed
        ^ (case_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (point_index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(6, 3), 2.0 / 9.0);
    }

    #[test]
    fn points_stay_in_domain_and_repeat() {
        let d = Domain::cube(2, 1.0);
        let a = halton_points(&d, 25, 42);
        assert_eq!(a.len(), 25);
        assert!(a.iter().all(|u| d.contains(u)));
        assert_eq!(a, halton_points(&d, 25, 42));
        assert_ne!(a, halton_points(&d, 25, 43));
    }

    #[test]
    fn point_seeds_differ() {
        assert_ne!(point_seed(42, 0, 1), point_seed(42, 1, 0));
        assert_eq!(point_seed(7, 2, 3), point_seed(7, 2, 3));
    }
}
