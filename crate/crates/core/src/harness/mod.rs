//! End-to-end runs: load or synthesize a corpus, encode, decode, score,
//! optionally classify, and write the report files.

mod bench;
mod compare;
pub mod synth;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Codec, CodecConfig, CodecError};
use crate::frontend::{FrontendConfig, FrontendError};
use crate::ingest::IngestError;
use crate::metrics::MetricsError;
use crate::snn::{SnnConfig, SnnError};

pub use bench::{
    evaluate, load_corpus, run_bench, run_classification, BenchReport, ClassificationRow, Clip,
    CLASSIFICATION_CSV, EFFICIENCY_CSV, PER_BAND_CSV, PER_CLASS_CSV, RUN_SUMMARY_JSON,
};
pub use compare::{compare_report, load_report, CompareSummary, Ranking, ReportData};
pub use synth::{generate_synthetic, tone, write_corpus, Generator, SyntheticClip, SyntheticSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("clip {clip}: {source}")]
    Clip {
        clip: String,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SnnError> for HarnessError {
    fn from(e: SnnError) -> Self {
        match e {
            SnnError::NonFinite { .. } => HarnessError::Numeric(e.to_string()),
            SnnError::Config(m) => HarnessError::Config(m),
            other => HarnessError::Data(other.to_string()),
        }
    }
}

impl HarnessError {
    /// Process exit code: 2 configuration, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Codec(CodecError::Config(_)) => 2,
            HarnessError::Frontend(FrontendError::Config(_) | FrontendError::AboveNyquist { .. }) => 2,
            HarnessError::Ingest(IngestError::Rules(_)) => 2,
            HarnessError::Numeric(_) => 4,
            HarnessError::Codec(CodecError::NonFinite { .. }) => 4,
            HarnessError::Metrics(MetricsError::NonFinite) => 4,
            HarnessError::Clip { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    pub(crate) fn in_clip(self, clip: &str) -> Self {
        HarnessError::Clip {
            clip: clip.to_string(),
            source: Box::new(self),
        }
    }
}

/// Full configuration of a run. Every field is echoed into the run summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `"synthetic"` or a path to a manifest CSV (relative paths resolve
    /// against the config file's directory).
    pub dataset: String,
    /// Name used in report rows; defaults to the manifest's file stem.
    pub dataset_name: Option<String>,
    pub synthetic: SyntheticSpec,
    pub codecs: Vec<Codec>,
    pub sample_rate: u32,
    /// Center-crop every loaded clip to this many seconds.
    pub crop_seconds: Option<f64>,
    pub frontend: FrontendConfig,
    /// Parameters per codec; codecs without an entry use the defaults.
    pub codec_params: BTreeMap<Codec, CodecConfig>,
    pub snn: SnnConfig,
    /// Run the SNN protocol in `bench` as well.
    pub classify: bool,
    pub timing_reps: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: "synthetic".into(),
            dataset_name: None,
            synthetic: SyntheticSpec::default(),
            codecs: Codec::ALL.to_vec(),
            sample_rate: crate::ingest::DEFAULT_SAMPLE_RATE,
            crop_seconds: None,
            frontend: FrontendConfig::default(),
            codec_params: BTreeMap::new(),
            snn: SnnConfig::default(),
            classify: false,
            timing_reps: crate::metrics::MIN_TIMING_REPS,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if !cfg.is_synthetic() {
            let p = Path::new(&cfg.dataset);
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.dataset = dir.join(p).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn is_synthetic(&self) -> bool {
        self.dataset == "synthetic"
    }

    pub fn codec_config(&self, codec: Codec) -> CodecConfig {
        self.codec_params.get(&codec).copied().unwrap_or_default()
    }

    pub fn dataset_label(&self) -> String {
        if let Some(name) = &self.dataset_name {
            return name.clone();
        }
        if self.is_synthetic() {
            return "synthetic".into();
        }
        Path::new(&self.dataset)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.codecs.is_empty() {
            return Err(HarnessError::Config("select at least one codec".into()));
        }
        for &codec in &self.codecs {
            self.codec_config(codec).validate()?;
        }
        if self.sample_rate == 0 {
            return Err(HarnessError::Config("sample_rate must be positive".into()));
        }
        if self.frontend.f_max > self.sample_rate as f64 / 2.0 {
            return Err(HarnessError::Config(format!(
                "f_max {} Hz exceeds Nyquist for {} Hz",
                self.frontend.f_max, self.sample_rate
            )));
        }
        if self.is_synthetic() && self.synthetic.sample_rate != self.sample_rate {
            return Err(HarnessError::Config(
                "synthetic.sample_rate must equal sample_rate".into(),
            ));
        }
        if self.classify {
            self.snn.validate()?;
        }
        Ok(())
    }
}
