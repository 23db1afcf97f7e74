use std::f64::consts::PI;

use proptest::prelude::*;

use spikeband::frontend::{
    frame_count, hz_to_mel, mel_centers_hz, mel_filterbank, mel_spectrogram, mel_to_hz, partition_bands,
    read_features, stft_power, write_features, FeatureMatrix, FrontendConfig, Window, N_BANDS,
};
use spikeband::harness::tone;
use spikeband::ingest::Waveform;
use spikeband::Matrix;

#[test]
fn five_seconds_give_858_frames() {
    let w = tone(440.0, 5.0, 44_100);
    assert_eq!(w.samples.len(), 220_500);
    let f = mel_spectrogram(&w, &FrontendConfig::default()).unwrap();
    assert_eq!(f.values.shape(), (128, 858));
    assert!(f.values.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn four_khz_peaks_at_bin_93() {
    let w = tone(4000.0, 0.5, 44_100);
    let p = stft_power(&w.samples, 1024, 256, Window::Hann).unwrap();
    for t in 0..p.cols() {
        let peak = (0..p.rows()).max_by(|&a, &b| p.get(a, t).total_cmp(&p.get(b, t))).unwrap();
        assert_eq!(peak, 93);
    }
}

#[test]
fn one_khz_tone_lands_in_the_one_khz_channel() {
    let w = tone(1000.0, 1.0, 44_100);
    let f = mel_spectrogram(&w, &FrontendConfig::default()).unwrap();
    // compare raw log-power means; normalized values are all in [0, 1]
    let raw = f.denormalize(&f.values);
    let means: Vec<f64> = (0..raw.rows()).map(|c| raw.row(c).iter().sum::<f64>() / raw.cols() as f64).collect();
    let best = (0..means.len()).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
    let centers = &f.channel_center_hz;
    let spacing = centers[best + 1] - centers[best - 1];
    assert!((centers[best] - 1000.0).abs() <= spacing / 2.0, "channel {best} at {} Hz", centers[best]);
}

#[test]
fn two_mel_filters_peak_at_mel_thirds() {
    let nyquist = 22_050.0;
    let centers = mel_centers_hz(2, 0.0, nyquist);
    let top = 2595.0 * (1.0 + nyquist / 700.0).log10();
    for (k, c) in centers.iter().enumerate() {
        let mel = top * (k + 1) as f64 / 3.0;
        let by_hand = 700.0 * (10f64.powf(mel / 2595.0) - 1.0);
        assert!((c - by_hand).abs() < 1e-9);
    }
    let fb = mel_filterbank(2, 0.0, nyquist, 1024, 44_100.0).unwrap();
    let bin_hz = 44_100.0 / 1024.0;
    for (m, c) in centers.iter().enumerate() {
        let peak = (0..fb.cols()).max_by(|&a, &b| fb.get(m, a).total_cmp(&fb.get(m, b))).unwrap();
        assert!((peak as f64 * bin_hz - c).abs() <= bin_hz);
    }
}

#[test]
fn default_bank_rows_and_bands() {
    let fb = mel_filterbank(128, 20.0, 20_000.0, 1024, 44_100.0).unwrap();
    assert_eq!(fb.shape(), (128, 513));
    for m in 0..128 {
        assert!(fb.row(m).iter().all(|&w| w >= 0.0));
        assert!(fb.row(m).iter().sum::<f64>() > 0.0);
    }
    let centers = mel_centers_hz(128, 20.0, 20_000.0);
    assert!(centers.windows(2).all(|w| w[0] < w[1]));
    let bands = partition_bands(&centers).unwrap();
    assert_eq!(bands.sizes().iter().sum::<usize>(), 128);
    assert!(bands.sizes().iter().all(|&n| n > 0));
    assert!(bands.assignment.windows(2).all(|w| w[0] <= w[1]));
    for b in 0..N_BANDS {
        for c in bands.channels(b) {
            assert!(bands.edges_hz[b] <= centers[c] && centers[c] < bands.edges_hz[b + 1]);
        }
    }
}

#[test]
fn silence_is_degenerate_everywhere() {
    let w = Waveform::new(vec![0.0; 4096], 44_100, "silence");
    let f = mel_spectrogram(&w, &FrontendConfig::default()).unwrap();
    assert!(f.values.as_slice().iter().all(|&v| v == 0.0));
    assert!(f.norm_state.iter().all(|s| s.is_degenerate()));
}

#[test]
fn too_short_and_above_nyquist_fail() {
    let w = Waveform::new(vec![0.0; 100], 44_100, "short");
    assert!(mel_spectrogram(&w, &FrontendConfig::default()).is_err());
    let w = tone(100.0, 0.1, 16_000);
    assert!(mel_spectrogram(&w, &FrontendConfig::default()).is_err());
}

#[test]
fn feature_file_round_trip() {
    let f = mel_spectrogram(&tone(2000.0, 0.2, 44_100), &FrontendConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.spkf");
    write_features(&path, &f).unwrap();
    let back = read_features(&path).unwrap();
    assert_eq!(back.values.shape(), f.values.shape());
    assert_eq!(back.channel_center_hz, f.channel_center_hz);
    assert_eq!(back.norm_state, f.norm_state);
    for (a, b) in back.values.as_slice().iter().zip(f.values.as_slice()) {
        assert_eq!(*a, *b as f32 as f64);
    }
}

#[test]
fn deterministic_features() {
    let w = tone(3000.0, 0.3, 44_100);
    let cfg = FrontendConfig::default();
    assert_eq!(mel_spectrogram(&w, &cfg).unwrap(), mel_spectrogram(&w, &cfg).unwrap());
}

proptest! {
    #[test]
    fn frame_formula_holds(len in 1024usize..50_000, hop in 1usize..600) {
        let x = vec![0.0; len];
        let p = stft_power(&x, 1024, hop, Window::Hann).unwrap();
        prop_assert_eq!(p.cols(), 1 + (len - 1024) / hop);
        prop_assert_eq!(frame_count(len, 1024, hop), p.cols());
    }

    #[test]
    fn mel_scale_inverts(hz in 0.0f64..22_050.0) {
        prop_assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
    }

    #[test]
    fn normalization_inverts(rows in prop::collection::vec(prop::collection::vec(-10.0f64..2.0, 5), 1..6)) {
        let raw = Matrix::from_rows(&rows).unwrap();
        let n = rows.len();
        let centers: Vec<f64> = (0..n).map(|i| 100.0 + i as f64).collect();
        let f = FeatureMatrix::from_raw(raw.clone(), centers, 1.0);
        let back = f.denormalize(&f.values);
        for c in 0..n {
            prop_assert!(f.values.row(c).iter().all(|v| (0.0..=1.0).contains(v)));
            if !f.norm_state[c].is_degenerate() {
                for (a, b) in back.row(c).iter().zip(raw.row(c)) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn partition_is_total_and_monotone(mut centers in prop::collection::vec(20.0f64..=20_000.0, 1..64)) {
        centers.sort_by(f64::total_cmp);
        let p = partition_bands(&centers).unwrap();
        prop_assert_eq!(p.assignment.len(), centers.len());
        prop_assert_eq!(p.sizes().iter().sum::<usize>(), centers.len());
        prop_assert!(p.assignment.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(p.assignment.iter().all(|&b| b < N_BANDS));
    }
}

#[test]
fn sine_phase_does_not_move_the_peak() {
    for phase in [0.0, 0.7, 2.1] {
        let x: Vec<f64> = (0..4096).map(|i| (2.0 * PI * 4000.0 * i as f64 / 44_100.0 + phase).sin()).collect();
        let p = stft_power(&x, 1024, 512, Window::Hann).unwrap();
        let peak = (0..p.rows()).max_by(|&a, &b| p.get(a, 0).total_cmp(&p.get(b, 0))).unwrap();
        assert_eq!(peak, 93);
    }
}
