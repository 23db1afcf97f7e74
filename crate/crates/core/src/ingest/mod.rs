//! Audio loading, clip preparation and dataset manifests.

mod manifest;
mod resample;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use manifest::{
    build_manifest, read_manifest, write_manifest, DatasetRules, DurationRule, Manifest,
    ManifestEntry, Split,
};
pub use resample::{resample, Resampler};

/// Default analysis rate. FFT size and hop are counted in samples, so one
/// canonical rate keeps frame counts comparable across corpora.
pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported or malformed WAV file {path}: {reason}")]
    Unsupported { path: PathBuf, reason: String },
    #[error("{path} contains no audio samples")]
    Empty { path: PathBuf },
    #[error("{path} contains a non-finite sample")]
    NonFinite { path: PathBuf },
    #[error("clip {path} lasts {have_s:.4} s, shorter than the requested {want_s:.4} s")]
    TooShort {
        path: String,
        have_s: f64,
        want_s: f64,
    },
    #[error("label {label:?} of {path} is not in the declared label set")]
    UnknownLabel { path: String, label: String },
    #[error("cannot parse a fold identifier from {path}")]
    BadFold { path: String },
    #[error("cannot parse a split (train/test) from {path}")]
    BadSplit { path: String },
    #[error("invalid dataset rules: {0}")]
    Rules(String),
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
}

/// Mono audio at a fixed sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub source_path: String,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32, source_path: impl Into<String>) -> Self {
        Self {
            samples,
            sample_rate,
            source_path: source_path.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn unsupported(path: &Path, reason: impl ToString) -> IngestError {
    IngestError::Unsupported {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn open_wav(path: &Path) -> Result<hound::WavReader<std::io::BufReader<std::fs::File>>, IngestError> {
    hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) => IngestError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => unsupported(path, other),
    })
}

/// Duration in seconds read from the WAV header, without decoding samples.
pub fn wav_duration(path: &Path) -> Result<f64, IngestError> {
    wav_header(path).map(|(d, _)| d)
}

pub(crate) fn wav_header(path: &Path) -> Result<(f64, u32), IngestError> {
    let reader = open_wav(path)?;
    let rate = reader.spec().sample_rate;
    if rate == 0 {
        return Err(unsupported(path, "zero sample rate"));
    }
    Ok((reader.duration() as f64 / rate as f64, rate))
}

/// Loads a PCM WAV file (8/16/24/32-bit integer or 32-bit float), averages
/// its channels to mono and resamples to `target_rate`.
pub fn load_audio(path: &Path, target_rate: u32) -> Result<Waveform, IngestError> {
    let reader = open_wav(path)?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.sample_rate == 0 {
        return Err(unsupported(path, "zero channels or zero sample rate"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| unsupported(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| unsupported(path, e))?,
        (format, bits) => {
            return Err(unsupported(path, format!("{bits}-bit {format:?} samples")));
        }
    };
    if interleaved.iter().any(|v| !v.is_finite()) {
        return Err(IngestError::NonFinite {
            path: path.to_path_buf(),
        });
    }

    let channels = spec.channels as usize;
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().sum::<f64>() / channels as f64).clamp(-1.0, 1.0))
        .collect();
    if mono.is_empty() {
        return Err(IngestError::Empty {
            path: path.to_path_buf(),
        });
    }

    let samples = if spec.sample_rate == target_rate {
        mono
    } else {
        resample(&mono, spec.sample_rate, target_rate)
            .into_iter()
            .map(|v| v.clamp(-1.0, 1.0))
            .collect()
    };
    Ok(Waveform::new(
        samples,
        target_rate,
        path.to_string_lossy().into_owned(),
    ))
}

/// Keeps the items whose duration lies within `tolerance` of `seconds`,
/// preserving order.
pub fn filter_exact_duration<T>(
    items: Vec<T>,
    seconds: f64,
    tolerance: f64,
    duration_of: impl Fn(&T) -> f64,
) -> Vec<T> {
    items
        .into_iter()
        .filter(|item| (duration_of(item) - seconds).abs() <= tolerance)
        .collect()
}

/// Central `seconds` of the clip. When an odd number of samples must be
/// discarded, the extra one comes off the end.
pub fn center_crop(w: &Waveform, seconds: f64) -> Result<Waveform, IngestError> {
    let keep = (seconds * w.sample_rate as f64).round() as usize;
    if keep > w.samples.len() {
        return Err(IngestError::TooShort {
            path: w.source_path.clone(),
            have_s: w.duration_s(),
            want_s: seconds,
        });
    }
    let start = (w.samples.len() - keep) / 2;
    Ok(Waveform {
        samples: w.samples[start..start + keep].to_vec(),
        sample_rate: w.sample_rate,
        source_path: w.source_path.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(n: usize, rate: u32) -> Waveform {
        Waveform::new((0..n).map(|i| i as f64).collect(), rate, "clip")
    }

    #[test]
    fn crop_odd_discard_goes_to_the_end() {
        let out = center_crop(&clip(7, 1), 5.0).unwrap();
        assert_eq!(out.samples, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn crop_ten_seconds_to_five_keeps_the_middle() {
        let w = clip(10 * 100, 100);
        let out = center_crop(&w, 5.0).unwrap();
        assert_eq!(out.samples.len(), 500);
        assert_eq!(out.samples[0], 250.0);
        assert_eq!(*out.samples.last().unwrap(), 749.0);
    }

    #[test]
    fn crop_of_exact_length_is_identity_and_idempotent() {
        let w = clip(50, 10);
        assert_eq!(center_crop(&w, 5.0).unwrap(), w);
        let once = center_crop(&clip(93, 10), 5.0).unwrap();
        assert_eq!(center_crop(&once, 5.0).unwrap(), once);
    }

    #[test]
    fn crop_rejects_short_clips() {
        assert!(matches!(
            center_crop(&clip(4, 1), 5.0),
            Err(IngestError::TooShort { .. })
        ));
    }

    #[test]
    fn duration_filter_keeps_matching_items_in_order() {
        let kept = filter_exact_duration(vec![4.0, 3.2, 4.0], 4.0, 0.01, |d| *d);
        assert_eq!(kept, vec![4.0, 4.0]);
        let kept = filter_exact_duration(vec![(0, 4.0), (1, 3.2), (2, 4.0)], 4.0, 0.01, |e| e.1);
        assert_eq!(kept.iter().map(|e| e.0).collect::<Vec<_>>(), vec![0, 2]);
        assert!(filter_exact_duration(Vec::<f64>::new(), 4.0, 0.01, |d| *d).is_empty());
    }

    #[test]
    fn duration_filter_tolerance_is_inclusive_absolute_difference() {
        // |3.999 - 4| = 0.001 is inside a 5 ms tolerance; 4.02 is not.
        let kept = filter_exact_duration(vec![3.999, 4.02], 4.0, 0.005, |d| *d);
        assert_eq!(kept, vec![3.999]);
        let kept = filter_exact_duration(vec![3.999, 4.02], 4.0, 0.0005, |d| *d);
        assert!(kept.is_empty());
    }
}
