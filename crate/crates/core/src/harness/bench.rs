use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::{generate_synthetic, HarnessError, RunConfig};
use crate::codec::{decode_matrix, encode_matrix, Codec};
use crate::frontend::{mel_spectrogram, partition_bands, FeatureMatrix, N_BANDS};
use crate::ingest::{center_crop, load_audio, read_manifest, ManifestEntry, Waveform};
use crate::metrics::{
    measure_encode_cost, score_all, score_per_band, score_per_class, stable_mean, write_efficiency_csv,
    write_per_band_csv, write_per_class_csv, BandRow, ClassRow, EfficiencyRow,
};
use crate::snn::{run_protocol, LabeledClip, Protocol, SnnConfig, SpikeInput};

pub const PER_BAND_CSV: &str = "per_band.csv";
pub const PER_CLASS_CSV: &str = "per_class.csv";
pub const EFFICIENCY_CSV: &str = "efficiency.csv";
pub const CLASSIFICATION_CSV: &str = "classification.csv";
pub const RUN_SUMMARY_JSON: &str = "run_summary.json";

/// A loaded clip and its manifest row.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    pub entry: ManifestEntry,
    pub wave: Waveform,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationRow {
    pub codec: String,
    pub dataset: String,
    /// Held-out fold number, `holdout`, or `mean`.
    pub fold: String,
    pub macro_acc: f64,
}

/// Everything a bench run writes, kept in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub per_band: Vec<BandRow>,
    pub per_class: Vec<ClassRow>,
    pub efficiency: Vec<EfficiencyRow>,
    pub classification: Option<Vec<ClassificationRow>>,
    pub summary: serde_json::Value,
}

/// Loads the configured corpus in manifest order.
pub fn load_corpus(cfg: &RunConfig) -> Result<Vec<Clip>, HarnessError> {
    if cfg.is_synthetic() {
        return Ok(generate_synthetic(&cfg.synthetic, cfg.seed)?
            .into_iter()
            .map(|c| Clip {
                entry: c.entry,
                wave: c.wave,
            })
            .collect());
    }
    let manifest_path = PathBuf::from(&cfg.dataset);
    let manifest = read_manifest(&manifest_path)?;
    if manifest.entries.is_empty() {
        return Err(HarnessError::Data(format!("{}: manifest has no entries", cfg.dataset)));
    }
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut clips = Vec::with_capacity(manifest.entries.len());
    for entry in manifest.entries {
        let wave = load_audio(&root.join(&entry.path), cfg.sample_rate)
            .and_then(|w| match cfg.crop_seconds {
                Some(s) => center_crop(&w, s),
                None => Ok(w),
            })
            .map_err(|e| HarnessError::from(e).in_clip(&entry.path))?;
        clips.push(Clip { entry, wave });
    }
    Ok(clips)
}

fn features(clips: &[Clip], cfg: &RunConfig) -> Result<Vec<FeatureMatrix>, HarnessError> {
    clips
        .iter()
        .map(|c| mel_spectrogram(&c.wave, &cfg.frontend).map_err(|e| HarnessError::from(e).in_clip(&c.entry.path)))
        .collect()
}

// FNV-1a over everything that identifies the corpus and the features.
fn fingerprint(clips: &[Clip], cfg: &RunConfig) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for c in clips {
        eat(c.entry.path.as_bytes());
        eat(&[0]);
        eat(c.entry.class_label.as_bytes());
        eat(&[0]);
        eat(&(c.wave.samples.len() as u64).to_le_bytes());
        for v in &c.wave.samples {
            eat(&v.to_bits().to_le_bytes());
        }
    }
    eat(serde_json::to_string(&cfg.frontend).unwrap_or_default().as_bytes());
    eat(&cfg.sample_rate.to_le_bytes());
    format!("{h:016x}")
}

fn corpus_descriptor(clips: &[Clip], cfg: &RunConfig) -> serde_json::Value {
    let mut classes: Vec<&str> = clips.iter().map(|c| c.entry.class_label.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    json!({
        "dataset": cfg.dataset_label(),
        "n_clips": clips.len(),
        "classes": classes,
        "fingerprint": fingerprint(clips, cfg),
    })
}

/// Runs the SNN protocol on every configured codec. Cross-validation is used
/// when every clip carries a fold, holdout otherwise.
pub fn run_classification(
    clips: &[Clip],
    feats: &[FeatureMatrix],
    cfg: &RunConfig,
) -> Result<Vec<ClassificationRow>, HarnessError> {
    let mut labels: Vec<&str> = clips.iter().map(|c| c.entry.class_label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    let protocol = if clips.iter().all(|c| c.entry.fold.is_some()) {
        Protocol::CrossValidation
    } else {
        Protocol::Holdout
    };
    let snn_cfg = SnnConfig {
        input_size: feats.first().map_or(0, |f| f.channels()),
        output_size: labels.len(),
        seed: cfg.seed,
        ..cfg.snn.clone()
    };
    let dataset = cfg.dataset_label();
    let mut rows = Vec::new();
    for &codec in &cfg.codecs {
        let ccfg = cfg.codec_config(codec);
        let mut data = Vec::with_capacity(clips.len());
        for (clip, f) in clips.iter().zip(feats) {
            let st = encode_matrix(f, &ccfg, codec).map_err(|e| HarnessError::from(e).in_clip(&clip.entry.path))?;
            data.push(LabeledClip {
                input: SpikeInput::from_spike_train(&st),
                label: labels.binary_search(&clip.entry.class_label.as_str()).expect("label listed"),
                fold: clip.entry.fold,
                split: clip.entry.split,
            });
        }
        let result = run_protocol(&data, protocol, &snn_cfg)?;
        for fold in &result.folds {
            rows.push(ClassificationRow {
                codec: codec.name().into(),
                dataset: dataset.clone(),
                fold: fold.fold.map_or_else(|| "holdout".into(), |f| f.to_string()),
                macro_acc: fold.macro_acc,
            });
        }
        rows.push(ClassificationRow {
            codec: codec.name().into(),
            dataset: dataset.clone(),
            fold: "mean".into(),
            macro_acc: result.mean_macro_acc,
        });
    }
    Ok(rows)
}

/// Computes the full report without touching the file system.
pub fn evaluate(cfg: &RunConfig) -> Result<BenchReport, HarnessError> {
    cfg.validate()?;
    let clips = load_corpus(cfg)?;
    let feats = features(&clips, cfg)?;

    let mut band_errdb: BTreeMap<(Codec, usize), Vec<f64>> = BTreeMap::new();
    let mut class_scores: Vec<(Codec, &str, f64)> = Vec::new();
    let mut efficiency = Vec::new();
    let dataset = cfg.dataset_label();

    for &codec in &cfg.codecs {
        let ccfg = cfg.codec_config(codec);
        let (mut rates, mut times, mut bytes) = (Vec::new(), Vec::new(), Vec::new());
        for (clip, f) in clips.iter().zip(&feats) {
            let name = &clip.entry.path;
            let wrap = |e: HarnessError| e.in_clip(name);
            let st = encode_matrix(f, &ccfg, codec).map_err(|e| wrap(e.into()))?;
            let f_hat = decode_matrix(&st).map_err(|e| wrap(e.into()))?;
            let bands = partition_bands(&f.channel_center_hz).map_err(|e| wrap(e.into()))?;
            for (b, score) in score_per_band(&f.values, &f_hat, &bands)
                .map_err(|e| wrap(e.into()))?
                .into_iter()
                .enumerate()
            {
                if let Some(s) = score {
                    band_errdb.entry((codec, b)).or_default().push(s.errdb);
                }
            }
            let all = score_all(&f.values, &f_hat).map_err(|e| wrap(e.into()))?;
            class_scores.push((codec, clip.entry.class_label.as_str(), all.errdb));
            let cost = measure_encode_cost(f, &ccfg, codec, cfg.timing_reps).map_err(|e| wrap(e.into()))?;
            rates.push(cost.firing_rate_pct);
            times.push(cost.encode_ms);
            bytes.push(cost.aux_bytes as f64);
        }
        efficiency.push(EfficiencyRow {
            codec: codec.name().into(),
            dataset: dataset.clone(),
            firing_rate_pct: stable_mean(&rates),
            encode_ms: stable_mean(&times),
            aux_bytes: stable_mean(&bytes).round() as usize,
        });
    }

    let mut per_band: Vec<BandRow> = band_errdb
        .iter()
        .map(|(&(codec, band), v)| {
            let errdb = stable_mean(v);
            BandRow {
                codec: codec.name().into(),
                band,
                errdb,
                snr: -errdb,
            }
        })
        .collect();
    let mut per_class: Vec<ClassRow> = score_per_class(class_scores)
        .into_iter()
        .map(|((codec, class), errdb)| ClassRow {
            codec: codec.name().into(),
            class,
            errdb,
        })
        .collect();
    // same order as the CSV files
    per_band.sort_by(|a, b| (&a.codec, a.band).cmp(&(&b.codec, b.band)));
    per_class.sort_by(|a, b| (&a.codec, &a.class).cmp(&(&b.codec, &b.class)));
    efficiency.sort_by(|a, b| a.codec.cmp(&b.codec));
    let classification = if cfg.classify {
        Some(run_classification(&clips, &feats, cfg)?)
    } else {
        None
    };
    let summary = json!({
        "crate": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "n_bands": N_BANDS,
        "corpus": corpus_descriptor(&clips, cfg),
        "config": cfg,
    });
    Ok(BenchReport {
        per_band,
        per_class,
        efficiency,
        classification,
        summary,
    })
}

fn write_classification_csv(path: &Path, rows: &[ClassificationRow]) -> Result<(), HarnessError> {
    let err = |e: csv::Error| HarnessError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_report(dir: &Path, report: &BenchReport, written: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let mut target = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    write_per_band_csv(&target(PER_BAND_CSV), &report.per_band)?;
    write_per_class_csv(&target(PER_CLASS_CSV), &report.per_class)?;
    write_efficiency_csv(&target(EFFICIENCY_CSV), &report.efficiency)?;
    if let Some(rows) = &report.classification {
        write_classification_csv(&target(CLASSIFICATION_CSV), rows)?;
    }
    let mut text = serde_json::to_string_pretty(&report.summary)
        .map_err(|e| HarnessError::Data(e.to_string()))?;
    text.push('\n');
    std::fs::write(target(RUN_SUMMARY_JSON), text)?;
    Ok(())
}

/// Runs the pipeline and writes the report files into `cfg.output_dir`.
/// On failure nothing from this run is left behind.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchReport, HarnessError> {
    let report = evaluate(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", cfg.output_dir.display())))?;
    let mut written = Vec::new();
    if let Err(e) = write_report(&cfg.output_dir, &report, &mut written) {
        for p in written {
            let _ = std::fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(report)
}
