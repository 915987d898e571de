#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tree_dispersion::tree::RadialFunction;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_radial(rng: &mut ChaCha8Rng, q: u32, n: usize) -> RadialFunction {
    let values = (0..=n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    RadialFunction::from_values(q, values).unwrap()
}

/// Random data on radii `0..=support`, zero-padded to radius `n`.
pub fn random_padded(rng: &mut ChaCha8Rng, q: u32, support: usize, n: usize) -> RadialFunction {
    random_radial(rng, q, support).resized(n)
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}
