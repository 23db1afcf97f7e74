use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spikeband::codec::{decode_matrix, encode_matrix, read_spikes, write_spikes, Codec};
use spikeband::frontend::{mel_centers_hz, mel_spectrogram, partition_bands, read_features, write_features, FeatureMatrix};
use spikeband::harness::{
    compare_report, generate_synthetic, load_corpus, load_report, run_bench, run_classification, write_corpus,
    HarnessError, RunConfig, CLASSIFICATION_CSV,
};
use spikeband::ingest::load_audio;
use spikeband::metrics::{score_all, score_per_band};
use spikeband::snn::{save_checkpoint, train, write_training_log, LabeledClip, SnnConfig, SpikeInput};

#[derive(Parser)]
#[command(name = "spikeband", version, about = "Spike encoding benchmark for environmental sound")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restricts the run to one codec.
    #[arg(long)]
    codec: Option<Codec>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic corpus (WAV files plus manifest.csv).
    Synth(Common),
    /// Extract features from a WAV file and encode them to spikes.
    Encode {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Decode a spike file back to features.
    Reconstruct {
        input: PathBuf,
        /// Original features; when given, reconstruction scores are printed.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Encode, decode and score the whole corpus.
    Bench(Common),
    /// Run the classification protocol and save a model trained on all clips.
    Train(Common),
    /// Rank the codecs of two bench reports.
    Compare {
        report_a: PathBuf,
        report_b: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_json_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(codec) = common.codec {
        cfg.codecs = vec![codec];
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "clip".into())
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Config(format!("{}: {e}", dir.display())))
}

fn synth(common: &Common) -> Result<(), HarnessError> {
    let cfg = resolve(common)?;
    let clips = generate_synthetic(&cfg.synthetic, cfg.seed)?;
    ensure_dir(&cfg.output_dir)?;
    write_corpus(&cfg.output_dir, &clips)?;
    println!("wrote {} clips to {}", clips.len(), cfg.output_dir.display());
    Ok(())
}

fn encode(input: &Path, common: &Common) -> Result<(), HarnessError> {
    let cfg = resolve(common)?;
    cfg.validate()?;
    let wave = load_audio(input, cfg.sample_rate)?;
    let features = mel_spectrogram(&wave, &cfg.frontend)?;
    ensure_dir(&cfg.output_dir)?;
    let name = stem(input);
    write_features(&cfg.output_dir.join(format!("{name}.spkf")), &features)?;
    for &codec in &cfg.codecs {
        let st = encode_matrix(&features, &cfg.codec_config(codec), codec)?;
        let path = cfg.output_dir.join(format!("{name}.{}.spks", codec.name().to_lowercase()));
        write_spikes(&path, &st)?;
        println!("{}: {} spikes -> {}", codec.name(), st.nonzero_count(), path.display());
    }
    Ok(())
}

fn reconstruct(input: &Path, reference: Option<&Path>, common: &Common) -> Result<(), HarnessError> {
    let cfg = resolve(common)?;
    let st = read_spikes(input)?;
    let values = decode_matrix(&st)?;
    let recon = match reference {
        Some(r) => {
            let orig = read_features(r)?;
            let per_band = score_per_band(&orig.values, &values, &partition_bands(&orig.channel_center_hz)?)?;
            for (band, score) in per_band.iter().enumerate() {
                if let Some(s) = score {
                    println!("band {band}: errdb {:.4} snr {:.4}", s.errdb, s.snr);
                }
            }
            let all = score_all(&orig.values, &values)?;
            println!("all: errdb {:.4} snr {:.4}", all.errdb, all.snr);
            FeatureMatrix {
                values,
                ..orig
            }
        }
        None => {
            let centers = mel_centers_hz(cfg.frontend.n_mels, cfg.frontend.f_min, cfg.frontend.f_max);
            if centers.len() != st.channels() {
                return Err(HarnessError::Config(format!(
                    "spike file has {} channels, frontend config has {}",
                    st.channels(),
                    centers.len()
                )));
            }
            let rate = cfg.sample_rate as f64 / cfg.frontend.hop as f64;
            FeatureMatrix::from_raw(values, centers, rate)
        }
    };
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(format!("{}.recon.spkf", stem(input)));
    write_features(&path, &recon)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn bench(common: &Common) -> Result<(), HarnessError> {
    let cfg = resolve(common)?;
    let report = run_bench(&cfg)?;
    for row in &report.efficiency {
        println!(
            "{}: firing rate {:.2}%, {:.3} ms/clip, {} bytes",
            row.codec, row.firing_rate_pct, row.encode_ms, row.aux_bytes
        );
    }
    println!("reports in {}", cfg.output_dir.display());
    Ok(())
}

fn train_cmd(common: &Common) -> Result<(), HarnessError> {
    let cfg = resolve(common)?;
    cfg.validate()?;
    cfg.snn.validate()?;
    let clips = load_corpus(&cfg)?;
    let feats = clips
        .iter()
        .map(|c| mel_spectrogram(&c.wave, &cfg.frontend))
        .collect::<Result<Vec<_>, _>>()?;
    ensure_dir(&cfg.output_dir)?;
    let rows = run_classification(&clips, &feats, &cfg)?;
    let path = cfg.output_dir.join(CLASSIFICATION_CSV);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| HarnessError::Data(e.to_string()))?;
    for r in &rows {
        w.serialize(r).map_err(|e| HarnessError::Data(e.to_string()))?;
        println!("{} fold {}: macro accuracy {:.4}", r.codec, r.fold, r.macro_acc);
    }
    w.flush()?;

    let mut labels: Vec<&str> = clips.iter().map(|c| c.entry.class_label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    let snn_cfg = SnnConfig {
        input_size: feats.first().map_or(0, |f| f.channels()),
        output_size: labels.len(),
        seed: cfg.seed,
        ..cfg.snn.clone()
    };
    for &codec in &cfg.codecs {
        let ccfg = cfg.codec_config(codec);
        let mut data = Vec::with_capacity(clips.len());
        for (clip, f) in clips.iter().zip(&feats) {
            data.push(LabeledClip {
                input: SpikeInput::from_spike_train(&encode_matrix(f, &ccfg, codec)?),
                label: labels.binary_search(&clip.entry.class_label.as_str()).expect("label listed"),
                fold: clip.entry.fold,
                split: clip.entry.split,
            });
        }
        let outcome = train(&data, None, &snn_cfg)?;
        let tag = codec.name().to_lowercase();
        write_training_log(&cfg.output_dir.join(format!("training_log_{tag}.csv")), &outcome.log)?;
        save_checkpoint(&cfg.output_dir.join(format!("model_{tag}.spkn")), &outcome.network)?;
    }
    Ok(())
}

fn compare(a: &Path, b: &Path, common: &Common) -> Result<(), HarnessError> {
    let summary = compare_report(&load_report(a)?, &load_report(b)?)?;
    for r in summary.bands.iter().chain(&summary.classes).chain([&summary.firing_rate]) {
        let order: Vec<String> = r.entries.iter().map(|(n, v, rank)| format!("{rank}. {n} ({v:.3})")).collect();
        println!("{} {}: {}", r.scope, r.key, order.join(", "));
    }
    if let Some(out) = &common.out {
        ensure_dir(out)?;
        summary.write_winners_csv(&out.join("winners.csv"))?;
        summary.write_ranking_csv(&out.join("ranking.csv"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(c) => synth(c),
        Command::Encode { input, common } => encode(input, common),
        Command::Reconstruct {
            input,
            reference,
            common,
        } => reconstruct(input, reference.as_deref(), common),
        Command::Bench(c) => bench(c),
        Command::Train(c) => train_cmd(c),
        Command::Compare {
            report_a,
            report_b,
            common,
        } => compare(report_a, report_b, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
