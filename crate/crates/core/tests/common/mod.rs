#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A smooth signal whose per-step change never exceeds `threshold_rel` times
/// its own range, i.e. the codec threshold `T`. Drawn by rejection from sums
/// of low-frequency sinusoids.
pub fn slow_signal(rng: &mut ChaCha8Rng, threshold_rel: f64) -> Vec<f64> {
    loop {
        let len = rng.gen_range(2..400);
        let parts: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..4))
            .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(0.1..4.0), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let offset = rng.gen_range(-1.0..1.0);
        let x: Vec<f64> = (0..len)
            .map(|i| {
                let t = i as f64 / len as f64;
                offset + parts.iter().map(|(a, f, p)| a * (2.0 * PI * f * t + p).sin()).sum::<f64>()
            })
            .collect();
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t = threshold_rel * (hi - lo);
        if hi > lo && x.windows(2).all(|w| (w[1] - w[0]).abs() <= t) {
            return x;
        }
    }
}

/// Uniform noise in `[0, 1)` of random length.
pub fn rough_signal(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| rng.gen_range(0.0..1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
