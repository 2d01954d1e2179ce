//! Deterministic low-discrepancy sampling.

use crate::game::ActionInterval;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `k` in base `b`.
pub fn radical_inverse(mut k: u64, b: u32) -> f64 {
    let b = b as u64;
    let (mut inv, mut f) = (0.0, 1.0 / b as f64);
    while k > 0 {
        inv += f * (k % b) as f64;
        k /= b;
        f /= b as f64;
    }
    inv
}

/// The `k`-th Halton point (1-based index skips the origin) mapped into a box.
pub fn halton_point(k: usize, boxes: &[ActionInterval]) -> Vec<f64> {
    boxes
        .iter()
        .enumerate()
        .map(|(d, iv)| iv.lo + iv.width() * radical_inverse(k as u64 + 1, PRIMES[d % PRIMES.len()]))
        .collect()
}

pub fn halton_points(count: usize, boxes: &[ActionInterval]) -> Vec<Vec<f64>> {
    (0..count).map(|k| halton_point(k, boxes)).collect()
}
