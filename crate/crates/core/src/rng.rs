//! Counter-based random number generation.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed and
//! integer indices, so realizations can be regenerated entry by entry, in any
//! order, on any number of workers, without storing generator state.

use num_complex::Complex64;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with two indices into a single well-distributed word.
pub fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = splitmix64(seed ^ a.rotate_left(17));
    z = splitmix64(z ^ b.rotate_left(41));
    splitmix64(z)
}

/// Uniform double in `(0, 1]` from a word (never returns 0, so it is safe
/// under a logarithm).
pub fn unit_open(word: u64) -> f64 {
    (((word >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform double in `[0, 1)` from a word.
pub fn unit_closed_open(word: u64) -> f64 {
    ((word >> 11) as f64) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard circular complex Gaussian: real and imaginary parts are
/// independent `N(0, 1/2)`, so `E X = 0`, `E |X|^2 = 1`, `E X^2 = 0`.
///
/// The value is a pure function of `(seed, i, j)`.
pub fn complex_gaussian(seed: u64, i: u64, j: u64) -> Complex64 {
    let w1 = mix3(seed, i, j);
    let w2 = splitmix64(w1 ^ GOLDEN);
    let u1 = unit_open(w1);
    let u2 = unit_closed_open(w2);
    // Box-Muller, scaled so each component has variance 1/2.
    let r = (-u1.ln()).sqrt(); // == sqrt(-2 ln u1) * sqrt(1/2)
    let phase = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * phase.cos(), r * phase.sin())
}

/// Standard real Gaussian `N(0, 1)` from `(seed, i)`; used by samplers that
/// need scalar draws.
pub fn real_gaussian(seed: u64, i: u64) -> f64 {
    let w1 = mix3(seed, i, 0x5151_5151);
    let w2 = splitmix64(w1 ^ GOLDEN);
    let u1 = unit_open(w1);
    let u2 = unit_closed_open(w2);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Low-discrepancy point in the unit square (2-D Halton, bases 2 and 3).
pub fn halton2(index: usize) -> (f64, f64) {
    (radical_inverse(index, 2), radical_inverse(index, 3))
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_gaussian_is_reproducible() {
        let a = complex_gaussian(42, 3, 7);
        let b = complex_gaussian(42, 3, 7);
        assert_eq!(a, b);
        assert_ne!(a, complex_gaussian(43, 3, 7));
        assert_ne!(a, complex_gaussian(42, 7, 3));
    }

    #[test]
    fn complex_gaussian_moments() {
        let n = 200_000u64;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut sq = Complex64::new(0.0, 0.0);
        let mut abs2 = 0.0;
        for k in 0..n {
            let x = complex_gaussian(7, k, 0);
            mean += x;
            sq += x * x;
            abs2 += x.norm_sqr();
        }
        let n = n as f64;
        assert!((mean / n).norm() < 5e-3);
        assert!((sq / n).norm() < 5e-3);
        assert!((abs2 / n - 1.0).abs() < 5e-3);
    }

    #[test]
    fn real_gaussian_moments() {
        let n = 200_000u64;
        let (mut m, mut v) = (0.0, 0.0);
        for k in 0..n {
            let x = real_gaussian(11, k);
            m += x;
            v += x * x;
        }
        assert!((m / n as f64).abs() < 5e-3);
        assert!((v / n as f64 - 1.0).abs() < 8e-3);
    }
}
