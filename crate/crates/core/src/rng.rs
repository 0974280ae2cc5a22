//! Deterministic sampling helpers on a pinned generator.
//!
//! All randomized code in this crate draws from PCG-64 (`rand_pcg::Pcg64`,
//! the pcg_xsl_rr_128_64 member of the PCG family) seeded from a single
//! `u64`. The samplers below are defined directly on the raw `u64` stream
//! with the formulas documented here, so a port in another language that
//! reproduces PCG-64 reproduces every corpus byte for byte.

use rand_core::{Rng as _, SeedableRng};
use rand_pcg::Pcg64;

/// Generator used by every randomized routine in the crate.
pub type Rng = Pcg64;

/// Seeds PCG-64 by repeating the `u64` across the 128-bit state seed.
pub fn seeded(seed: u64) -> Rng {
    let mut state = [0u8; 32];
    for chunk in state.chunks_mut(8) {
        chunk.copy_from_slice(&seed.to_le_bytes());
    }
    Pcg64::from_seed(state)
}

/// Uniform f64 in [0, 1): the top 53 bits of one `u64` draw, scaled by 2^-53.
pub fn uniform(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in [0, n) via 128-bit widening multiply of one draw.
/// The multiply bias is below 2^-64 per call; no rejection loop keeps the
/// stream consumption fixed at one draw.
pub fn below(rng: &mut Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    (((rng.next_u64() as u128) * (n as u128)) >> 64) as usize
}

/// Bernoulli(p) from one [`uniform`] draw.
pub fn chance(rng: &mut Rng, p: f64) -> bool {
    uniform(rng) < p
}

/// Poisson(lambda) by Knuth's product-of-uniforms method; consumes one
/// draw per event plus one.
pub fn poisson(rng: &mut Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0u64;
    let mut product = 1.0;
    loop {
        product *= uniform(rng);
        if product <= limit {
            return k;
        }
        k += 1;
    }
}

/// Geometric on {0, 1, ...} with the given mean, by inverting the CDF of
/// one [`uniform`] draw: floor(ln(1-u) / ln(m/(m+1))).
pub fn geometric(rng: &mut Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let q = mean / (mean + 1.0);
    let u = uniform(rng);
    ((1.0 - u).ln() / q.ln()).floor() as u64
}

/// Standard normal via Box–Muller; consumes exactly two draws.
pub fn normal(rng: &mut Rng) -> f64 {
    let u1 = (1.0 - uniform(rng)).max(f64::MIN_POSITIVE);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Picks an index proportionally to `weights` (all non-negative, sum > 0).
pub fn weighted(rng: &mut Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0);
    let mut target = uniform(rng) * total;
    for (i, w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = seeded(7);
        let mut b = seeded(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = seeded(1);
        for _ in 0..10_000 {
            let u = uniform(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn below_stays_in_range_and_covers() {
        let mut rng = seeded(2);
        let mut seen = [false; 7];
        for _ in 0..1_000 {
            seen[below(&mut rng, 7)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn poisson_mean_is_close() {
        let mut rng = seeded(3);
        let n = 20_000;
        let sum: u64 = (0..n).map(|_| poisson(&mut rng, 4.0)).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 4.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn geometric_mean_is_close() {
        let mut rng = seeded(4);
        let n = 20_000;
        let sum: u64 = (0..n).map(|_| geometric(&mut rng, 3.0)).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 3.0).abs() < 0.15, "mean {mean}");
    }

    #[test]
    fn weighted_respects_weights() {
        let mut rng = seeded(5);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[weighted(&mut rng, &[1.0, 2.0, 7.0])] += 1;
        }
        assert!(counts[2] > counts[1] && counts[1] > counts[0]);
        let frac = counts[2] as f64 / 30_000.0;
        assert!((frac - 0.7).abs() < 0.03);
    }
}
