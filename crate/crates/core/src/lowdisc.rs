//! Halton points with a seeded Cranley–Patterson shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(base: u64, mut index: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Shifted Halton sequence in `[0, 1)^D`.
///
/// Extending the number of points only appends to the sequence, so any
/// running maximum over it is monotone in the sample count.
#[derive(Clone, Debug)]
pub struct Halton<const D: usize> {
    shift: [f64; D],
}

impl<const D: usize> Halton<D> {
    pub fn new(seed: u64) -> Self {
        assert!(
            D <= PRIMES.len(),
            "Halton sequence supports up to {} dimensions",
            PRIMES.len()
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            shift: std::array::from_fn(|_| rng.gen::<f64>()),
        }
    }

    /// The unshifted sequence.
    pub fn plain() -> Self {
        Self { shift: [0.0; D] }
    }

    /// Point number `i` (the sequence skips index 0).
    pub fn point(&self, i: usize) -> [f64; D] {
        std::array::from_fn(|k| (radical_inverse(PRIMES[k], i as u64 + 1) + self.shift[k]).fract())
    }

    pub fn points(&self, n: usize) -> impl Iterator<Item = [f64; D]> + '_ {
        (0..n).map(move |i| self.point(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(2, 1), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(2, 3), 0.75);
        assert_eq!(radical_inverse(3, 1), 1.0 / 3.0);
    }

    #[test]
    fn points_stay_in_unit_cube() {
        let h = Halton::<3>::new(9);
        for p in h.points(1000) {
            assert!(p.iter().all(|x| (0.0..1.0).contains(x)));
        }
    }
}
