//! Ternary delta encoders and their decoders.
//!
//! Every encoder works on one channel at a time and emits at most one spike
//! per frame: `+1` when the signal has risen past the tracked baseline by
//! more than the threshold, `-1` when it has fallen below it, `0` otherwise.
//! The three encoders differ only in how the baseline and the threshold move:
//!
//! | codec | baseline | threshold |
//! |-------|----------|-----------|
//! | [`Codec::Sf`] (step forward) | moves one threshold step per spike | fixed |
//! | [`Codec::Mw`] (moving window) | mean of the last `window` samples | fixed |
//! | [`Codec::Tae`] (threshold adaptive) | moves one threshold step per spike | grows on spikes, decays on silence |
//!
//! Thresholds are relative to the channel's dynamic range, so the absolute
//! step is `T = threshold_rel * (max(x) - min(x))`, or `threshold_rel` for a
//! flat channel.

mod io;
mod mw;
mod sf;
mod tae;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::FeatureMatrix;
use crate::Matrix;

pub use io::{
    read_spikes, serialized_len, spikes_from_bytes, spikes_to_bytes, write_spikes,
    SPIKE_MAGIC,
};
pub use mw::{decode_mw, encode_mw, mw_decode_into, mw_encode_into};
pub use sf::{decode_sf, encode_sf, sf_decode_into, sf_encode_into};
pub use tae::{
    decode_tae, decode_tae_traced, encode_tae, encode_tae_traced, tae_decode_into,
    tae_encode_into, TaeThreshold,
};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("non-finite input value at frame {frame}")]
    NonFinite { frame: usize },
    #[error("empty signal")]
    Empty,
    #[error("invalid codec configuration: {0}")]
    Config(String),
    #[error("missing side information for channel {channel}")]
    MissingSideInfo { channel: usize },
    #[error("spike train was produced by {found}, expected {expected}")]
    CodecMismatch { expected: Codec, found: Codec },
    #[error("spike value {value} outside {{-1, 0, 1}}")]
    BadSpike { value: i8 },
    #[error("spike file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Codec {
    Sf,
    Mw,
    Tae,
}

impl Codec {
    pub const ALL: [Codec; 3] = [Codec::Sf, Codec::Mw, Codec::Tae];

    pub fn id(self) -> u8 {
        match self {
            Codec::Sf => 0,
            Codec::Mw => 1,
            Codec::Tae => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Codec::Sf => "SF",
            Codec::Mw => "MW",
            Codec::Tae => "TAE",
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Codec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sf" => Ok(Codec::Sf),
            "mw" => Ok(Codec::Mw),
            "tae" => Ok(Codec::Tae),
            other => Err(format!("unknown codec {other:?} (expected sf, mw or tae)")),
        }
    }
}

/// Encoder parameters. Thresholds are fractions of each channel's range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecConfig {
    pub threshold_rel: f64,
    /// Moving-window length in frames.
    pub window: usize,
    /// Threshold growth factor per spike (and decay divisor per silent frame).
    pub tae_gamma: f64,
    pub tae_tmin_rel: f64,
    pub tae_tmax_rel: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            threshold_rel: 0.05,
            window: 3,
            tae_gamma: 1.5,
            tae_tmin_rel: 0.05,
            tae_tmax_rel: 0.5,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        let err = |m: String| Err(CodecError::Config(m));
        if !(self.threshold_rel > 0.0 && self.threshold_rel <= 1.0) {
            return err(format!("threshold_rel {} not in (0, 1]", self.threshold_rel));
        }
        if self.window < 1 {
            return err("window must be at least 1".into());
        }
        if !(self.tae_gamma > 1.0 && self.tae_gamma.is_finite()) {
            return err(format!("tae_gamma {} must exceed 1", self.tae_gamma));
        }
        if !(self.tae_tmin_rel > 0.0
            && self.tae_tmin_rel <= self.threshold_rel
            && self.threshold_rel <= self.tae_tmax_rel)
        {
            return err(format!(
                "need 0 < tae_tmin_rel ({}) <= threshold_rel ({}) <= tae_tmax_rel ({})",
                self.tae_tmin_rel, self.threshold_rel, self.tae_tmax_rel
            ));
        }
        Ok(())
    }
}

/// Per-channel decoder bootstrap: the first sample and the initial absolute
/// threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideInfo {
    pub initial: f64,
    pub threshold: f64,
}

/// Absolute threshold for one channel.
#[inline]
pub fn channel_threshold(x: &[f64], threshold_rel: f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in x {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    let range = hi - lo;
    if range > 0.0 {
        threshold_rel * range
    } else {
        threshold_rel
    }
}

pub(crate) fn check_signal(x: &[f64]) -> Result<(), CodecError> {
    if x.is_empty() {
        return Err(CodecError::Empty);
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(frame) => Err(CodecError::NonFinite { frame }),
        None => Ok(()),
    }
}

/// Spike matrix for one clip plus everything needed to decode it.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeTrain {
    channels: usize,
    frames: usize,
    /// Row-major `channels x frames`, entries in `{-1, 0, 1}`.
    spikes: Vec<i8>,
    pub side_info: Vec<SideInfo>,
    pub codec: Codec,
    pub params: CodecConfig,
}

impl SpikeTrain {
    pub fn new(
        channels: usize,
        frames: usize,
        spikes: Vec<i8>,
        side_info: Vec<SideInfo>,
        codec: Codec,
        params: CodecConfig,
    ) -> Result<Self, CodecError> {
        if spikes.len() != channels * frames {
            return Err(CodecError::Format(format!(
                "{} spikes for a {channels}x{frames} train",
                spikes.len()
            )));
        }
        if let Some(&value) = spikes.iter().find(|s| !(-1..=1).contains(*s)) {
            return Err(CodecError::BadSpike { value });
        }
        if side_info.len() != channels {
            return Err(CodecError::MissingSideInfo {
                channel: side_info.len().min(channels),
            });
        }
        Ok(Self {
            channels,
            frames,
            spikes,
            side_info,
            codec,
            params,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn row(&self, c: usize) -> &[i8] {
        &self.spikes[c * self.frames..(c + 1) * self.frames]
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.spikes
    }

    /// Spike value of every channel at frame `t`.
    pub fn frame(&self, t: usize) -> impl Iterator<Item = i8> + '_ {
        (0..self.channels).map(move |c| self.spikes[c * self.frames + t])
    }

    pub fn nonzero_count(&self) -> usize {
        self.spikes.iter().filter(|&&s| s != 0).count()
    }
}

/// Encodes one channel with `codec`, writing into `out`.
#[inline]
pub fn encode_channel_into(
    x: &[f64],
    cfg: &CodecConfig,
    codec: Codec,
    out: &mut [i8],
) -> SideInfo {
    let threshold = channel_threshold(x, cfg.threshold_rel);
    match codec {
        Codec::Sf => sf_encode_into(x, threshold, out),
        Codec::Mw => mw_encode_into(x, threshold, cfg.window, out),
        Codec::Tae => tae_encode_into(x, threshold, cfg, out),
    }
}

pub fn decode_channel_into(
    spikes: &[i8],
    side: SideInfo,
    cfg: &CodecConfig,
    codec: Codec,
    out: &mut [f64],
) {
    match codec {
        Codec::Sf => sf_decode_into(spikes, side, out),
        Codec::Mw => mw_decode_into(spikes, side, cfg.window, out),
        Codec::Tae => tae_decode_into(spikes, side, cfg, out),
    }
}

/// Encodes every channel of `f` independently.
pub fn encode_matrix(
    f: &FeatureMatrix,
    cfg: &CodecConfig,
    codec: Codec,
) -> Result<SpikeTrain, CodecError> {
    encode_rows(&f.values, cfg, codec)
}

/// [`encode_matrix`] over a bare `channels x frames` matrix.
pub fn encode_rows(
    values: &Matrix,
    cfg: &CodecConfig,
    codec: Codec,
) -> Result<SpikeTrain, CodecError> {
    cfg.validate()?;
    let (channels, frames) = values.shape();
    if frames == 0 {
        return Err(CodecError::Empty);
    }
    let mut spikes = vec![0i8; channels * frames];
    let mut side_info = Vec::with_capacity(channels);
    for (c, out) in spikes.chunks_exact_mut(frames).enumerate() {
        let x = values.row(c);
        check_signal(x)?;
        side_info.push(encode_channel_into(x, cfg, codec, out));
    }
    SpikeTrain::new(channels, frames, spikes, side_info, codec, *cfg)
}

/// Reconstructs the normalized feature matrix from spikes.
pub fn decode_matrix(st: &SpikeTrain) -> Result<Matrix, CodecError> {
    let mut out = Matrix::zeros(st.channels, st.frames);
    for c in 0..st.channels {
        let side = *st
            .side_info
            .get(c)
            .ok_or(CodecError::MissingSideInfo { channel: c })?;
        decode_channel_into(st.row(c), side, &st.params, st.codec, out.row_mut(c));
    }
    Ok(out)
}
