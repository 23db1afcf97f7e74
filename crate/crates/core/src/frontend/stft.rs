use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::FrontendError;
use crate::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// Periodic Hann.
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// Number of fully interior frames: `1 + floor((len - n_fft) / hop)`.
pub fn frame_count(len: usize, n_fft: usize, hop: usize) -> usize {
    if len < n_fft {
        0
    } else {
        1 + (len - n_fft) / hop
    }
}

/// Power spectrogram `[n_fft/2 + 1 x frames]` without center padding.
pub fn stft_power(
    samples: &[f64],
    n_fft: usize,
    hop: usize,
    window: Window,
) -> Result<Matrix, FrontendError> {
    if n_fft == 0 || !n_fft.is_power_of_two() {
        return Err(FrontendError::Config(format!(
            "n_fft must be a power of two, got {n_fft}"
        )));
    }
    if hop == 0 {
        return Err(FrontendError::Config("hop must be positive".into()));
    }
    if samples.len() < n_fft {
        return Err(FrontendError::TooShort {
            have: samples.len(),
            need: n_fft,
        });
    }
    let frames = frame_count(samples.len(), n_fft, hop);
    let bins = n_fft / 2 + 1;
    let win = window.coefficients(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let mut out = Matrix::zeros(bins, frames);
    for f in 0..frames {
        let start = f * hop;
        for (slot, (x, w)) in buf
            .iter_mut()
            .zip(samples[start..start + n_fft].iter().zip(&win))
        {
            *slot = Complex::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (b, c) in buf[..bins].iter().enumerate() {
            out.set(b, f, c.norm_sqr());
        }
    }
    Ok(out)
}
