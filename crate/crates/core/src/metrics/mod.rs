//! Reconstruction fidelity, firing rates and encoding cost.
//!
//! All fidelity scores are energy ratios in decibels on the normalized
//! log-mel values the encoders consume:
//!
//! ```text
//! snr   = 10 log10( sum s^2 / sum (s - s_hat)^2 )
//! errdb = -snr
//! ```
//!
//! Both are clamped to `[-100, 100]` dB so that perfect reconstructions stay
//! finite in reports.

mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode_matrix, serialized_len, Codec, CodecConfig, CodecError, SpikeTrain};
use crate::frontend::{BandPartition, FeatureMatrix, N_BANDS};
use crate::Matrix;

pub use report::{
    write_efficiency_csv, write_per_band_csv, write_per_class_csv, BandRow, ClassRow,
    EfficiencyRow,
};

pub const DB_CLAMP: f64 = 100.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    Shape {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite value in metric input")]
    NonFinite,
    #[error("empty spike train")]
    EmptyTrain,
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("report: {0}")]
    Report(String),
}

fn shape_check(a: usize, b: usize) -> Result<(), MetricsError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricsError::Shape {
            left: (1, a),
            right: (1, b),
        })
    }
}

fn energies(s: &[f64], s_hat: &[f64]) -> Result<(f64, f64), MetricsError> {
    shape_check(s.len(), s_hat.len())?;
    let mut signal = 0.0;
    let mut error = 0.0;
    for (a, b) in s.iter().zip(s_hat) {
        if !a.is_finite() || !b.is_finite() {
            return Err(MetricsError::NonFinite);
        }
        signal += a * a;
        error += (a - b) * (a - b);
    }
    Ok((signal, error))
}

fn snr_from_energies(signal: f64, error: f64) -> f64 {
    if error == 0.0 {
        DB_CLAMP
    } else if signal == 0.0 {
        -DB_CLAMP
    } else {
        (10.0 * (signal / error).log10()).clamp(-DB_CLAMP, DB_CLAMP)
    }
}

/// Signal-to-error energy ratio in dB, clamped to `[-100, 100]`.
pub fn snr_db(s: &[f64], s_hat: &[f64]) -> Result<f64, MetricsError> {
    let (signal, error) = energies(s, s_hat)?;
    Ok(snr_from_energies(signal, error))
}

/// Relative error energy in dB; always exactly `-snr_db`.
pub fn errdb(s: &[f64], s_hat: &[f64]) -> Result<f64, MetricsError> {
    snr_db(s, s_hat).map(|v| -v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BandId {
    Band(usize),
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconScore {
    pub errdb: f64,
    pub snr: f64,
    pub band: BandId,
    pub class_label: Option<String>,
    pub n_channels: usize,
    pub n_frames: usize,
}

impl ReconScore {
    fn from_energies(signal: f64, error: f64, band: BandId, n_channels: usize, n_frames: usize) -> Self {
        let snr = snr_from_energies(signal, error);
        Self {
            errdb: -snr,
            snr,
            band,
            class_label: None,
            n_channels,
            n_frames,
        }
    }
}

fn check_shapes(a: &Matrix, b: &Matrix) -> Result<(), MetricsError> {
    if a.shape() == b.shape() {
        Ok(())
    } else {
        Err(MetricsError::Shape {
            left: a.shape(),
            right: b.shape(),
        })
    }
}

/// Score over every channel.
pub fn score_all(f: &Matrix, f_hat: &Matrix) -> Result<ReconScore, MetricsError> {
    check_shapes(f, f_hat)?;
    let (signal, error) = energies(f.as_slice(), f_hat.as_slice())?;
    Ok(ReconScore::from_energies(signal, error, BandId::All, f.rows(), f.cols()))
}

/// One score per analysis band over the concatenation of its channels.
/// Bands without channels yield `None`.
pub fn score_per_band(
    f: &Matrix,
    f_hat: &Matrix,
    bands: &BandPartition,
) -> Result<Vec<Option<ReconScore>>, MetricsError> {
    check_shapes(f, f_hat)?;
    if bands.assignment.len() != f.rows() {
        return Err(MetricsError::Shape {
            left: (bands.assignment.len(), f.cols()),
            right: f.shape(),
        });
    }
    let mut acc = [(0.0f64, 0.0f64, 0usize); N_BANDS];
    for (c, &b) in bands.assignment.iter().enumerate() {
        let (signal, error) = energies(f.row(c), f_hat.row(c))?;
        acc[b].0 += signal;
        acc[b].1 += error;
        acc[b].2 += 1;
    }
    Ok(acc
        .iter()
        .enumerate()
        .map(|(b, &(signal, error, n))| {
            (n > 0).then(|| ReconScore::from_energies(signal, error, BandId::Band(b), n, f.cols()))
        })
        .collect())
}

/// Order-independent mean: the values are sorted before summation so the
/// result does not depend on input order, bit for bit.
pub fn stable_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unweighted mean ERRdB per (codec, class).
pub fn score_per_class<'a>(
    scores: impl IntoIterator<Item = (Codec, &'a str, f64)>,
) -> BTreeMap<(Codec, String), f64> {
    let mut groups: BTreeMap<(Codec, String), Vec<f64>> = BTreeMap::new();
    for (codec, class, e) in scores {
        groups.entry((codec, class.to_string())).or_default().push(e);
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, stable_mean(&v)))
        .collect()
}

/// Percentage of nonzero entries over `channels x frames`.
pub fn firing_rate(st: &SpikeTrain) -> Result<f64, MetricsError> {
    let total = st.channels() * st.frames();
    if total == 0 {
        return Err(MetricsError::EmptyTrain);
    }
    Ok(100.0 * st.nonzero_count() as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyStat {
    pub firing_rate_pct: f64,
    /// Median wall-clock encode time for one clip.
    pub encode_ms: f64,
    /// Serialized spike train plus encoder working state.
    pub aux_bytes: usize,
}

/// Encoder working state per channel, in bytes.
pub fn state_bytes_per_channel(codec: Codec, cfg: &CodecConfig) -> usize {
    const F64: usize = std::mem::size_of::<f64>();
    match codec {
        // baseline, threshold
        Codec::Sf => 2 * F64,
        // window samples, threshold
        Codec::Mw => (cfg.window + 1) * F64,
        // baseline, threshold, min, max, gamma
        Codec::Tae => 5 * F64,
    }
}

pub const MIN_TIMING_REPS: usize = 5;

/// Encodes `f` `max(reps, 5)` times and reports the median wall time.
pub fn measure_encode_cost(
    f: &FeatureMatrix,
    cfg: &CodecConfig,
    codec: Codec,
    reps: usize,
) -> Result<EfficiencyStat, MetricsError> {
    let reps = reps.max(MIN_TIMING_REPS);
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let st = encode_matrix(f, cfg, codec)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(st);
    }
    let st = last.expect("at least one repetition");
    times.sort_by(f64::total_cmp);
    let encode_ms = if reps % 2 == 1 {
        times[reps / 2]
    } else {
        0.5 * (times[reps / 2 - 1] + times[reps / 2])
    };
    Ok(EfficiencyStat {
        firing_rate_pct: firing_rate(&st)?,
        encode_ms,
        aux_bytes: serialized_len(st.channels(), st.frames())
            + st.channels() * state_bytes_per_channel(codec, cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::SideInfo;

    #[test]
    fn closed_form_examples() {
        let snr = snr_db(&[3.0, 4.0], &[3.0, 0.0]).unwrap();
        assert!((snr - 10.0 * (25.0f64 / 16.0).log10()).abs() < 1e-12);
        assert!((snr - 1.938_200_260_161_128).abs() < 1e-9);
        assert_eq!(errdb(&[3.0, 4.0], &[3.0, 0.0]).unwrap(), -snr);
        assert_eq!(snr_db(&[1.0, -2.0], &[1.0, -2.0]).unwrap(), 100.0);
        assert_eq!(snr_db(&[1.0, -2.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn zero_signal_conventions() {
        assert_eq!(snr_db(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 100.0);
        assert_eq!(snr_db(&[0.0, 0.0], &[0.1, 0.0]).unwrap(), -100.0);
    }

    #[test]
    fn clamp_applies_to_tiny_errors() {
        assert_eq!(snr_db(&[1.0], &[1.0 + 1e-12]).unwrap(), 100.0);
    }

    #[test]
    fn mismatched_lengths_fail() {
        assert!(matches!(snr_db(&[1.0], &[1.0, 2.0]), Err(MetricsError::Shape { .. })));
    }

    #[test]
    fn per_class_means() {
        let table = score_per_class([(Codec::Sf, "dog", -10.0), (Codec::Sf, "dog", -20.0)]);
        assert_eq!(table[&(Codec::Sf, "dog".to_string())], -15.0);
    }

    #[test]
    fn firing_rate_counts_nonzeros() {
        let st = SpikeTrain::new(
            2,
            4,
            vec![0, 1, 0, -1, 0, 0, 1, 0],
            vec![SideInfo { initial: 0.0, threshold: 0.1 }; 2],
            Codec::Sf,
            CodecConfig::default(),
        )
        .unwrap();
        assert_eq!(firing_rate(&st).unwrap(), 37.5);
        let empty = SpikeTrain::new(0, 0, vec![], vec![], Codec::Sf, CodecConfig::default()).unwrap();
        assert!(matches!(firing_rate(&empty), Err(MetricsError::EmptyTrain)));
    }
}
