//! Rational-ratio polyphase resampler with a Kaiser-windowed sinc prototype.

use std::f64::consts::PI;

const TAPS_PER_PHASE: usize = 64;
const KAISER_BETA: f64 = 8.6;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let half_sq = (x / 2.0) * (x / 2.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= half_sq / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Polyphase filter bank for one `from -> to` conversion.
#[derive(Clone, Debug)]
pub struct Resampler {
    up: u64,
    down: u64,
    // `up` phases of TAPS_PER_PHASE coefficients each.
    table: Vec<f64>,
}

impl Resampler {
    pub fn new(from_rate: u32, to_rate: u32) -> Self {
        assert!(from_rate > 0 && to_rate > 0, "sample rates must be positive");
        let g = gcd(from_rate as u64, to_rate as u64);
        let up = to_rate as u64 / g;
        let down = from_rate as u64 / g;

        let half = (TAPS_PER_PHASE / 2) as f64;
        // Cutoff in cycles per sample of the virtual upsampled stream.
        let cutoff = 0.5 / up.max(down) as f64;
        let i0_beta = bessel_i0(KAISER_BETA);
        let span = half * up as f64;

        let mut table = Vec::with_capacity(up as usize * TAPS_PER_PHASE);
        for phase in 0..up {
            for i in 0..TAPS_PER_PHASE {
                let offset = phase as f64 + (half - 1.0 - i as f64) * up as f64;
                let r = offset / span;
                let window = if r.abs() <= 1.0 {
                    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta
                } else {
                    0.0
                };
                table.push(2.0 * cutoff * up as f64 * sinc(2.0 * cutoff * offset) * window);
            }
        }
        Self { up, down, table }
    }

    /// Number of output samples produced for `n_in` input samples: every
    /// output instant strictly before the end of the input.
    pub fn output_len(&self, n_in: usize) -> usize {
        ((n_in as u64 * self.up).div_ceil(self.down)) as usize
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        if self.up == self.down {
            return input.to_vec();
        }
        let n_out = self.output_len(input.len());
        let half = TAPS_PER_PHASE as i64 / 2;
        let mut out = Vec::with_capacity(n_out);
        for n in 0..n_out as u64 {
            let pos = n * self.down;
            let phase = (pos % self.up) as usize;
            let base = (pos / self.up) as i64 - (half - 1);
            let coeffs = &self.table[phase * TAPS_PER_PHASE..(phase + 1) * TAPS_PER_PHASE];
            let mut acc = 0.0;
            for (i, c) in coeffs.iter().enumerate() {
                let k = base + i as i64;
                if k >= 0 && (k as usize) < input.len() {
                    acc += c * input[k as usize];
                }
            }
            out.push(acc);
        }
        out
    }
}

/// Resamples `input` from `from_rate` to `to_rate`. Equal rates are a copy.
pub fn resample(input: &[f64], from_rate: u32, to_rate: u32) -> Vec<f64> {
    Resampler::new(from_rate, to_rate).process(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i0_matches_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        // I0(1) = 1.2660658777520082
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_2).abs() < 1e-12);
    }

    #[test]
    fn output_length_rounds_up() {
        let r = Resampler::new(48_000, 44_100);
        assert_eq!(r.output_len(48_000), 44_100);
        assert_eq!(r.output_len(1), 1);
        let r = Resampler::new(22_050, 44_100);
        assert_eq!(r.output_len(3), 6);
    }

    #[test]
    fn dc_gain_is_unity_in_the_interior() {
        let input = vec![0.25; 4000];
        let out = resample(&input, 22_050, 44_100);
        for v in &out[200..out.len() - 200] {
            assert!((v - 0.25).abs() < 1e-3, "{v}");
        }
        let out = resample(&input, 48_000, 44_100);
        for v in &out[200..out.len() - 200] {
            assert!((v - 0.25).abs() < 1e-3, "{v}");
        }
    }
}
