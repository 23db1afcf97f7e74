//! Mel-spectrogram front end and frequency-band grouping.
//!
//! A waveform becomes a `channels x frames` matrix of log-mel values, each
//! channel min-max normalized to `[0, 1]`. The normalization offset and scale
//! are kept so that values can be mapped back to log10 power.

mod bands;
mod io;
mod mel;
mod stft;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Waveform;
use crate::Matrix;

pub use bands::{partition_bands, BandPartition, BAND_EDGES_HZ, N_BANDS};
pub use io::{read_features, write_features, FEATURE_MAGIC};
pub use mel::{hz_to_mel, mel_centers_hz, mel_filterbank, mel_to_hz};
pub use stft::{frame_count, stft_power, Window};

/// Added to mel power before the log so that silence stays finite.
pub const LOG_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("signal has {have} samples, need at least {need}")]
    TooShort { have: usize, need: usize },
    #[error("f_max {f_max} Hz exceeds the Nyquist frequency {nyquist} Hz")]
    AboveNyquist { f_max: f64, nyquist: f64 },
    #[error("channel {channel} center {hz} Hz lies outside [20, 20000] Hz")]
    CenterOutOfRange { channel: usize, hz: f64 },
    #[error("invalid frontend configuration: {0}")]
    Config(String),
    #[error("feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontendConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub window: Window,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 256,
            n_mels: 128,
            f_min: 20.0,
            f_max: 20_000.0,
            window: Window::Hann,
        }
    }
}

/// Per-channel min-max state. `scale == 0` marks a flat channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormState {
    pub offset: f64,
    pub scale: f64,
}

impl NormState {
    pub fn is_degenerate(&self) -> bool {
        self.scale == 0.0
    }

    pub fn normalize(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (v - self.offset) / self.scale
        }
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            self.offset
        } else {
            v * self.scale + self.offset
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    /// `channels x frames`, each entry in `[0, 1]`.
    pub values: Matrix,
    pub channel_center_hz: Vec<f64>,
    pub norm_state: Vec<NormState>,
    pub frame_rate: f64,
}

impl FeatureMatrix {
    pub fn channels(&self) -> usize {
        self.values.rows()
    }

    pub fn frames(&self) -> usize {
        self.values.cols()
    }

    /// Normalizes each row of a raw `channels x frames` matrix.
    pub fn from_raw(raw: Matrix, channel_center_hz: Vec<f64>, frame_rate: f64) -> Self {
        let (rows, cols) = raw.shape();
        let mut values = Matrix::zeros(rows, cols);
        let mut norm_state = Vec::with_capacity(rows);
        for c in 0..rows {
            let row = raw.row(c);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let state = if cols == 0 {
                NormState {
                    offset: 0.0,
                    scale: 0.0,
                }
            } else {
                NormState {
                    offset: lo,
                    scale: hi - lo,
                }
            };
            for (dst, &src) in values.row_mut(c).iter_mut().zip(row) {
                *dst = state.normalize(src);
            }
            norm_state.push(state);
        }
        Self {
            values,
            channel_center_hz,
            norm_state,
            frame_rate,
        }
    }

    /// Maps normalized values (these or a reconstruction) back to log10 power.
    pub fn denormalize(&self, normalized: &Matrix) -> Matrix {
        let mut out = normalized.clone();
        for (c, state) in self.norm_state.iter().enumerate() {
            for v in out.row_mut(c) {
                *v = state.denormalize(*v);
            }
        }
        out
    }
}

/// `log10(mel_fb . |STFT|^2 + eps)` without normalization, `[n_mels x frames]`.
pub fn log_mel(w: &Waveform, cfg: &FrontendConfig) -> Result<Matrix, FrontendError> {
    let power = stft_power(&w.samples, cfg.n_fft, cfg.hop, cfg.window)?;
    let fb = mel_filterbank(
        cfg.n_mels,
        cfg.f_min,
        cfg.f_max,
        cfg.n_fft,
        w.sample_rate as f64,
    )?;
    let frames = power.cols();
    let mut out = Matrix::zeros(cfg.n_mels, frames);
    for m in 0..cfg.n_mels {
        let weights = fb.row(m);
        let support: Vec<(usize, f64)> = weights
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .collect();
        let row = out.row_mut(m);
        for (b, wgt) in &support {
            for (acc, p) in row.iter_mut().zip(power.row(*b)) {
                *acc += wgt * p;
            }
        }
        for v in row.iter_mut() {
            *v = (*v + LOG_EPS).log10();
        }
    }
    Ok(out)
}

/// Normalized log-mel features for one clip.
pub fn mel_spectrogram(w: &Waveform, cfg: &FrontendConfig) -> Result<FeatureMatrix, FrontendError> {
    let raw = log_mel(w, cfg)?;
    let centers = mel_centers_hz(cfg.n_mels, cfg.f_min, cfg.f_max);
    Ok(FeatureMatrix::from_raw(
        raw,
        centers,
        w.sample_rate as f64 / cfg.hop as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_round_trip_and_flat_channels() {
        let raw = Matrix::from_rows(&[vec![-3.0, 1.0, 5.0], vec![2.0, 2.0, 2.0]]).unwrap();
        let f = FeatureMatrix::from_raw(raw.clone(), vec![100.0, 200.0], 10.0);
        assert_eq!(f.values.row(0), &[0.0, 0.5, 1.0]);
        assert_eq!(f.values.row(1), &[0.0, 0.0, 0.0]);
        assert!(f.norm_state[1].is_degenerate());
        assert_eq!(f.denormalize(&f.values), raw);
    }

    #[test]
    fn silence_normalizes_to_zeros() {
        let w = Waveform::new(vec![0.0; 4096], 44_100, "silence");
        let f = mel_spectrogram(&w, &FrontendConfig::default()).unwrap();
        assert_eq!(f.values.shape(), (128, 13));
        assert!(f.values.as_slice().iter().all(|&v| v == 0.0));
        assert!(f.norm_state.iter().all(|s| s.is_degenerate()));
        assert!(f.norm_state.iter().all(|s| s.offset == -10.0));
    }

    #[test]
    fn frame_rate_is_rate_over_hop() {
        let w = Waveform::new(vec![0.1; 2048], 44_100, "dc");
        let f = mel_spectrogram(&w, &FrontendConfig::default()).unwrap();
        assert_eq!(f.frame_rate, 44_100.0 / 256.0);
    }
}
