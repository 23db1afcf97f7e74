use std::path::Path;
use std::process::Command;

use spikeband::codec::{Codec, CodecConfig};
use spikeband::frontend::{mel_spectrogram, FrontendConfig};
use spikeband::harness::{
    compare_report, evaluate, generate_synthetic, load_report, run_bench, write_corpus, Generator, HarnessError,
    RunConfig, SyntheticSpec, EFFICIENCY_CSV, PER_BAND_CSV, PER_CLASS_CSV, RUN_SUMMARY_JSON,
};

fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        n_clips: 10,
        duration_s: 1.0,
        ..Default::default()
    }
}

fn config(out: &Path) -> RunConfig {
    RunConfig {
        synthetic: small_spec(),
        output_dir: out.to_path_buf(),
        ..Default::default()
    }
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn without_timing(csv_text: &str) -> Vec<String> {
    csv_text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            // codec,dataset,firing_rate_pct,encode_ms,aux_bytes
            format!("{},{},{},{}", f[0], f[1], f[2], f[4])
        })
        .collect()
}

#[test]
fn report_shape_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_bench(&config(dir.path())).unwrap();
    assert_eq!(report.per_band.len(), 3 * 8);
    assert_eq!(report.per_class.len(), 3 * 5);
    assert_eq!(report.efficiency.len(), 3);
    let keys: Vec<(String, usize)> = report.per_band.iter().map(|r| (r.codec.clone(), r.band)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(report.per_band.iter().all(|r| r.snr == -r.errdb));
    assert!(report.classification.is_none());
    for name in [PER_BAND_CSV, PER_CLASS_CSV, EFFICIENCY_CSV, RUN_SUMMARY_JSON] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert!(read(dir.path(), EFFICIENCY_CSV).starts_with("codec,dataset,firing_rate_pct,encode_ms,aux_bytes\n"));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), RUN_SUMMARY_JSON)).unwrap();
    assert_eq!(summary["corpus"]["n_clips"], 10);
    assert_eq!(summary["config"]["seed"], 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    run_bench(&cfg).unwrap();
    let first: Vec<String> = [PER_BAND_CSV, PER_CLASS_CSV, RUN_SUMMARY_JSON].iter().map(|n| read(dir.path(), n)).collect();
    let eff = without_timing(&read(dir.path(), EFFICIENCY_CSV));
    run_bench(&cfg).unwrap();
    let second: Vec<String> = [PER_BAND_CSV, PER_CLASS_CSV, RUN_SUMMARY_JSON].iter().map(|n| read(dir.path(), n)).collect();
    assert_eq!(first, second);
    assert_eq!(eff, without_timing(&read(dir.path(), EFFICIENCY_CSV)));
}

#[test]
fn a_corrupt_clip_aborts_the_run_and_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus(&corpus, &generate_synthetic(&small_spec(), 0).unwrap()).unwrap();
    std::fs::write(corpus.join("chirp/chirp_001.wav"), b"RIFF garbage").unwrap();
    let out = dir.path().join("out");
    let cfg = RunConfig {
        dataset: corpus.join("manifest.csv").to_string_lossy().into_owned(),
        output_dir: out.clone(),
        ..Default::default()
    };
    let err = run_bench(&cfg).unwrap_err();
    assert!(matches!(&err, HarnessError::Clip { clip, .. } if clip == "chirp/chirp_001.wav"), "{err}");
    assert!(err.to_string().contains("chirp/chirp_001.wav"));
    assert_eq!(err.exit_code(), 3);
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn manifest_corpus_matches_in_memory_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus(&corpus, &generate_synthetic(&small_spec(), 0).unwrap()).unwrap();
    let from_disk = evaluate(&RunConfig {
        dataset: corpus.join("manifest.csv").to_string_lossy().into_owned(),
        dataset_name: Some("synthetic".into()),
        ..Default::default()
    })
    .unwrap();
    let in_memory = evaluate(&config(dir.path())).unwrap();
    // WAV files hold f32 samples, so scores agree closely but not bit for bit
    for (a, b) in from_disk.per_band.iter().zip(&in_memory.per_band) {
        assert_eq!((&a.codec, a.band), (&b.codec, b.band));
        assert!((a.errdb - b.errdb).abs() < 0.05, "{a:?} vs {b:?}");
    }
}

fn mean_mel(clip_wave: &spikeband::ingest::Waveform) -> Vec<f64> {
    let f = mel_spectrogram(clip_wave, &FrontendConfig::default()).unwrap();
    let raw = f.denormalize(&f.values);
    (0..raw.rows()).map(|c| raw.row(c).iter().sum::<f64>() / raw.cols() as f64).collect()
}

#[test]
fn synthetic_classes_are_separable_by_mean_spectrum() {
    let clips = generate_synthetic(
        &SyntheticSpec {
            duration_s: 1.0,
            ..Default::default()
        },
        0,
    )
    .unwrap();
    let feats: Vec<Vec<f64>> = clips.iter().map(|c| mean_mel(&c.wave)).collect();
    let labels: Vec<&str> = clips.iter().map(|c| c.entry.class_label.as_str()).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    // leave-one-out nearest centroid
    for i in 0..clips.len() {
        let mut best = ("", f64::INFINITY);
        for g in Generator::ALL {
            let members: Vec<&Vec<f64>> = (0..clips.len())
                .filter(|&j| j != i && labels[j] == g.label())
                .map(|j| &feats[j])
                .collect();
            let centroid: Vec<f64> = (0..128)
                .map(|c| members.iter().map(|m| m[c]).sum::<f64>() / members.len() as f64)
                .collect();
            let d = dist(&feats[i], &centroid);
            if d < best.1 {
                best = (g.label(), d);
            }
        }
        assert_eq!(best.0, labels[i], "clip {}", clips[i].entry.path);
    }
}

#[test]
fn pure_tone_clips_peak_near_one_khz() {
    let clips = generate_synthetic(
        &SyntheticSpec {
            n_clips: 5,
            classes: vec![Generator::PureTone],
            duration_s: 1.0,
            ..Default::default()
        },
        9,
    )
    .unwrap();
    let centers = spikeband::frontend::mel_centers_hz(128, 20.0, 20_000.0);
    for c in &clips {
        let m = mean_mel(&c.wave);
        let best = (0..m.len()).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap();
        let spacing = centers[best + 1] - centers[best - 1];
        assert!((centers[best] - 1000.0).abs() <= 0.02 * 1000.0 + spacing / 2.0);
    }
}

#[test]
fn compare_ranks_match_a_hand_sort() {
    let dir = tempfile::tempdir().unwrap();
    let (a_dir, b_dir) = (dir.path().join("a"), dir.path().join("b"));
    run_bench(&config(&a_dir)).unwrap();
    let mut coarse = config(&b_dir);
    coarse.codecs = vec![Codec::Sf];
    coarse.codec_params.insert(
        Codec::Sf,
        CodecConfig {
            threshold_rel: 0.1,
            ..Default::default()
        },
    );
    run_bench(&coarse).unwrap();
    let (a, b) = (load_report(&a_dir).unwrap(), load_report(&b_dir).unwrap());
    let summary = compare_report(&a, &b).unwrap();
    assert_eq!(summary.bands.len(), 8);
    for ranking in &summary.bands {
        let band: usize = ranking.key.parse().unwrap();
        let mut hand: Vec<(String, f64)> = a
            .per_band
            .iter()
            .filter(|r| r.band == band)
            .map(|r| (format!("a:{}", r.codec).replace("a:MW", "MW").replace("a:TAE", "TAE"), r.errdb))
            .chain(b.per_band.iter().filter(|r| r.band == band).map(|r| (format!("b:{}", r.codec), r.errdb)))
            .collect();
        hand.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
        let got: Vec<&str> = ranking.entries.iter().map(|e| e.0.as_str()).collect();
        let want: Vec<&str> = hand.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(got, want, "band {band}");
        assert_eq!(ranking.winner(), Some(want[0]));
    }
    let total: usize = summary.band_wins.values().sum();
    assert_eq!(total, 8);

    let rates: Vec<&str> = summary.firing_rate.entries.iter().map(|e| e.0.as_str()).collect();
    assert_eq!(rates.len(), 4);
    // a coarser step fires less than the same codec at the default step
    let pos = |n: &str| rates.iter().position(|r| *r == n).unwrap();
    assert!(pos("b:SF") < pos("a:SF"));

    let other = dir.path().join("other");
    let mut different = config(&other);
    different.seed = 1;
    run_bench(&different).unwrap();
    assert!(compare_report(&a, &load_report(&other).unwrap()).is_err());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_spikeband")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"no_such_field": 1}"#).unwrap();
    let out = cli(&["bench", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let nyquist = dir.path().join("nyquist.json");
    std::fs::write(&nyquist, r#"{"sample_rate": 16000, "synthetic": {"sample_rate": 16000}}"#).unwrap();
    assert_eq!(cli(&["bench", "--config", nyquist.to_str().unwrap()]).status.code(), Some(2));

    let corpus = dir.path().join("corpus");
    let out = cli(&["synth", "--out", corpus.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(corpus.join("am_tone/am_tone_000.wav"), b"junk").unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"dataset": "corpus/manifest.csv"}"#).unwrap();
    let out = cli(&["bench", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("am_tone/am_tone_000.wav"));
}

#[test]
fn cli_encode_reconstruct_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    write_corpus(&corpus, &generate_synthetic(&small_spec(), 0).unwrap()).unwrap();
    let wav = corpus.join("chirp/chirp_000.wav");
    let out_dir = dir.path().join("enc");
    let out = cli(&["encode", wav.to_str().unwrap(), "--codec", "tae", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let spks = out_dir.join("chirp_000.tae.spks");
    let spkf = out_dir.join("chirp_000.spkf");
    assert!(spks.exists() && spkf.exists());
    let out = cli(&[
        "reconstruct",
        spks.to_str().unwrap(),
        "--reference",
        spkf.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("band ")).count(), 8);
    assert!(out_dir.join("chirp_000.tae.recon.spkf").exists());
}
