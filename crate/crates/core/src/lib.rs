//! Spike encoding toolkit and benchmark harness for environmental sound.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! 1. [`ingest`] loads WAV audio, mixes it down to mono, resamples it and
//!    builds dataset manifests.
//! 2. [`frontend`] turns a waveform into a 128-channel normalized log-mel
//!    [`FeatureMatrix`](frontend::FeatureMatrix) and groups channels into
//!    eight analysis bands.
//! 3. [`codec`] encodes every channel into a ternary spike train with one of
//!    three delta encoders (step forward, moving window, threshold adaptive)
//!    and decodes it back.
//! 4. [`metrics`] scores reconstructions (ERRdB / SNR per band and class),
//!    firing rates and encoding cost.
//! 5. [`snn`] trains a four-layer LIF classifier on the spike trains.
//!
//! [`harness`] ties everything together behind the `spikeband` CLI.
//!
//! ```
//! use spikeband::codec::{encode_matrix, decode_matrix, Codec, CodecConfig};
//! use spikeband::frontend::{mel_spectrogram, FrontendConfig};
//! use spikeband::harness::synth::tone;
//! use spikeband::metrics::snr_db;
//!
//! let wave = tone(1000.0, 1.0, 44_100);
//! let features = mel_spectrogram(&wave, &FrontendConfig::default()).unwrap();
//! let spikes = encode_matrix(&features, &CodecConfig::default(), Codec::Tae).unwrap();
//! let recon = decode_matrix(&spikes).unwrap();
//! let snr = snr_db(features.values.as_slice(), recon.as_slice()).unwrap();
//! assert!(snr > 0.0);
//! ```

pub mod codec;
pub mod frontend;
pub mod harness;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod snn;

pub use matrix::Matrix;

// `cargo test --doc` compiles and runs every snippet in the guide.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/audio.md")]
    pub struct Audio;
    #[doc = include_str!("../../../book/src/features.md")]
    pub struct Features;
    #[doc = include_str!("../../../book/src/codecs.md")]
    pub struct Codecs;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
    #[doc = include_str!("../../../book/src/snn.md")]
    pub struct Snn;
    #[doc = include_str!("../../../book/src/harness.md")]
    pub struct Harness;
}
