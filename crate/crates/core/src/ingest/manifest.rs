use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{wav_header, IngestError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "test" | "evaluate" | "evaluation" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One clip of a dataset. `path` is relative to the dataset root (and to the
/// manifest file once written), always with `/` separators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub class_label: String,
    pub fold: Option<u32>,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationRule {
    pub seconds: f64,
    /// Defaults to half a sample period of each file.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// How to turn a directory of WAV files into a manifest.
///
/// Patterns are regular expressions matched against the `/`-separated path
/// relative to the root and must define the named group they are used for
/// (`label`, `fold` or `split`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetRules {
    /// Declared label set (after `label_map`). Files with any other label are
    /// an error.
    pub labels: Vec<String>,
    /// Labels dropped from the manifest.
    pub exclude: Vec<String>,
    /// Without a pattern the label is the name of the file's parent directory.
    pub label_pattern: Option<String>,
    /// Maps raw captured labels (e.g. numeric class ids) to names.
    pub label_map: BTreeMap<String, String>,
    /// Cross-validation datasets set this; folds are then mandatory.
    pub fold_pattern: Option<String>,
    /// Holdout datasets set this; without it every entry is `train`.
    pub split_pattern: Option<String>,
    pub duration: Option<DurationRule>,
    /// Applied when clips are loaded, not when the manifest is built.
    pub crop_seconds: Option<f64>,
    /// Downsample every class to the smallest class count within each
    /// fold (or split), keeping the lexicographically first files.
    pub balance: bool,
}

/// Ordered entries plus the per-fold class counts of the final selection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub fold_counts: BTreeMap<(Option<u32>, String), usize>,
}

impl Manifest {
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Self {
        let mut fold_counts = BTreeMap::new();
        for e in &entries {
            *fold_counts
                .entry((e.fold, e.class_label.clone()))
                .or_insert(0) += 1;
        }
        Self {
            entries,
            fold_counts,
        }
    }

    /// Sorted distinct labels.
    pub fn labels(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.class_label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn folds(&self) -> Vec<u32> {
        self.entries
            .iter()
            .filter_map(|e| e.fold)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

fn compile(pattern: &Option<String>, group: &str) -> Result<Option<Regex>, IngestError> {
    let Some(p) = pattern else { return Ok(None) };
    let re = Regex::new(p).map_err(|e| IngestError::Rules(e.to_string()))?;
    if !re.capture_names().flatten().any(|n| n == group) {
        return Err(IngestError::Rules(format!(
            "pattern {p:?} has no named group `{group}`"
        )));
    }
    Ok(Some(re))
}

fn collect_wavs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), IngestError> {
    let read = std::fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for item in read {
        let item = item.map_err(|source| IngestError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = item.path();
        if path.is_dir() {
            collect_wavs(&path, out)?;
        } else if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        {
            out.push(path);
        }
    }
    Ok(())
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Scans `root` recursively for WAV files and applies `rules`.
///
/// Output is sorted by relative path, so it is identical across runs and
/// platforms.
pub fn build_manifest(root: &Path, rules: &DatasetRules) -> Result<Manifest, IngestError> {
    let label_re = compile(&rules.label_pattern, "label")?;
    let fold_re = compile(&rules.fold_pattern, "fold")?;
    let split_re = compile(&rules.split_pattern, "split")?;
    let declared: BTreeSet<&str> = rules.labels.iter().map(String::as_str).collect();
    let excluded: BTreeSet<&str> = rules.exclude.iter().map(String::as_str).collect();

    let mut files = Vec::new();
    collect_wavs(root, &mut files)?;
    let mut rel: Vec<(String, PathBuf)> = files.into_iter().map(|p| (relative(root, &p), p)).collect();
    rel.sort();

    let mut entries = Vec::new();
    for (rel_path, abs_path) in rel {
        let raw_label = match &label_re {
            Some(re) => re
                .captures(&rel_path)
                .and_then(|c| c.name("label"))
                .map(|m| m.as_str().to_string()),
            None => abs_path
                .parent()
                .and_then(Path::file_name)
                .map(|n| n.to_string_lossy().into_owned()),
        }
        .unwrap_or_default();
        let label = rules.label_map.get(&raw_label).cloned().unwrap_or(raw_label);
        if !declared.contains(label.as_str()) {
            return Err(IngestError::UnknownLabel {
                path: rel_path,
                label,
            });
        }

        let fold = match &fold_re {
            Some(re) => Some(
                re.captures(&rel_path)
                    .and_then(|c| c.name("fold"))
                    .and_then(|m| m.as_str().parse::<u32>().ok())
                    .ok_or_else(|| IngestError::BadFold {
                        path: rel_path.clone(),
                    })?,
            ),
            None => None,
        };
        let split = match &split_re {
            Some(re) => re
                .captures(&rel_path)
                .and_then(|c| c.name("split"))
                .and_then(|m| m.as_str().parse::<Split>().ok())
                .ok_or_else(|| IngestError::BadSplit {
                    path: rel_path.clone(),
                })?,
            None => Split::Train,
        };

        if excluded.contains(label.as_str()) {
            continue;
        }
        entries.push((
            ManifestEntry {
                path: rel_path,
                class_label: label,
                fold,
                split,
            },
            abs_path,
        ));
    }

    if let Some(rule) = &rules.duration {
        let mut kept = Vec::with_capacity(entries.len());
        for (entry, abs) in entries {
            let (duration, rate) = wav_header(&abs)?;
            let tolerance = rule.tolerance.unwrap_or(0.5 / rate as f64);
            if (duration - rule.seconds).abs() <= tolerance {
                kept.push((entry, abs));
            }
        }
        entries = kept;
    }

    let mut entries: Vec<ManifestEntry> = entries.into_iter().map(|(e, _)| e).collect();
    if rules.balance {
        entries = balance(entries);
    }
    Ok(Manifest::from_entries(entries))
}

fn balance(entries: Vec<ManifestEntry>) -> Vec<ManifestEntry> {
    let mut counts: BTreeMap<(Option<u32>, Split, &str), usize> = BTreeMap::new();
    for e in &entries {
        *counts.entry((e.fold, e.split, &e.class_label)).or_insert(0) += 1;
    }
    let mut quota: BTreeMap<(Option<u32>, Split), usize> = BTreeMap::new();
    for ((fold, split, _), n) in &counts {
        let q = quota.entry((*fold, *split)).or_insert(usize::MAX);
        *q = (*q).min(*n);
    }
    let mut taken: BTreeMap<(Option<u32>, Split, String), usize> = BTreeMap::new();
    entries
        .into_iter()
        .filter(|e| {
            let used = taken
                .entry((e.fold, e.split, e.class_label.clone()))
                .or_insert(0);
            *used += 1;
            *used <= quota[&(e.fold, e.split)]
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    path: String,
    class_label: String,
    fold: Option<u32>,
    split: Split,
}

/// Writes `path,class_label,fold,split` CSV (LF line endings; empty fold
/// when the dataset has none).
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), IngestError> {
    let err = |reason: String| IngestError::Manifest {
        path: path.to_path_buf(),
        reason,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    for e in entries {
        w.serialize(CsvRow {
            path: e.path.clone(),
            class_label: e.class_label.clone(),
            fold: e.fold,
            split: e.split,
        })
        .map_err(|e| err(e.to_string()))?;
    }
    w.flush().map_err(|e| err(e.to_string()))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, IngestError> {
    let err = |reason: String| IngestError::Manifest {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let headers = r.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "class_label", "fold", "split"] {
        return Err(err(format!("unexpected header {headers:?}")));
    }
    let mut entries = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(|e| err(e.to_string()))?;
        entries.push(ManifestEntry {
            path: row.path,
            class_label: row.class_label,
            fold: row.fold,
            split: row.split,
        });
    }
    Ok(Manifest::from_entries(entries))
}
