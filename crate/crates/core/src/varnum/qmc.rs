//! Shifted Halton points. Every point is a pure function of
//! `(seed, index)`, so batches can be evaluated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton sequence in `[0,1)^dim` with a Cranley–Patterson rotation drawn
/// from the master seed and a salt identifying the stream.
#[derive(Clone, Debug)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64, salt: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton supports at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Halton { shift: (0..dim).map(|_| rng.random::<f64>()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, p)| {
                let v = radical_inverse(index + 1, p) + s;
                v - v.floor()
            })
            .collect()
    }

    /// Point mapped affinely into the box `[lo_i, hi_i]`.
    pub fn in_box(&self, index: u64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        self.point(index)
            .into_iter()
            .zip(lo.iter().zip(hi))
            .map(|(t, (a, b))| a + t * (b - a))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn deterministic_and_in_unit_cube() {
        let a = Halton::new(3, 7, 0);
        let b = Halton::new(3, 7, 0);
        for i in 0..100 {
            let p = a.point(i);
            assert_eq!(p, b.point(i));
            assert!(p.iter().all(|&t| (0.0..1.0).contains(&t)));
        }
        assert_ne!(Halton::new(3, 8, 0).point(0), a.point(0));
    }

    #[test]
    fn roughly_uniform() {
        let h = Halton::new(2, 1, 0);
        let inside = (0..4000).filter(|&i| h.point(i)[0] < 0.3).count();
        assert!((inside as f64 / 4000.0 - 0.3).abs() < 0.01);
    }
}
