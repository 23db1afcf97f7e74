use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::bench::{EFFICIENCY_CSV, PER_BAND_CSV, PER_CLASS_CSV, RUN_SUMMARY_JSON};
use super::HarnessError;
use crate::metrics::{BandRow, ClassRow, EfficiencyRow};

/// Report files read back from a bench output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportData {
    pub per_band: Vec<BandRow>,
    pub per_class: Vec<ClassRow>,
    pub efficiency: Vec<EfficiencyRow>,
    pub corpus: serde_json::Value,
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let err = |e: csv::Error| HarnessError::Data(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().map(|row| row.map_err(err)).collect()
}

pub fn load_report(dir: &Path) -> Result<ReportData, HarnessError> {
    let summary_path = dir.join(RUN_SUMMARY_JSON);
    let text = std::fs::read_to_string(&summary_path)
        .map_err(|e| HarnessError::Data(format!("{}: {e}", summary_path.display())))?;
    let summary: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Data(format!("{}: {e}", summary_path.display())))?;
    Ok(ReportData {
        per_band: read_rows(&dir.join(PER_BAND_CSV))?,
        per_class: read_rows(&dir.join(PER_CLASS_CSV))?,
        efficiency: read_rows(&dir.join(EFFICIENCY_CSV))?,
        corpus: summary.get("corpus").cloned().unwrap_or(serde_json::Value::Null),
    })
}

/// Candidates for one comparison key, best first. Equal values share a rank.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ranking {
    /// `band`, `class` or `firing_rate`.
    pub scope: String,
    pub key: String,
    pub entries: Vec<(String, f64, usize)>,
}

impl Ranking {
    fn new(scope: &str, key: String, mut values: Vec<(String, f64)>) -> Self {
        values.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let mut entries: Vec<(String, f64, usize)> = Vec::with_capacity(values.len());
        for (i, (name, v)) in values.into_iter().enumerate() {
            let rank = match entries.last() {
                Some(prev) if prev.1 == v => prev.2,
                _ => i + 1,
            };
            entries.push((name, v, rank));
        }
        Self {
            scope: scope.into(),
            key,
            entries,
        }
    }

    /// The single best candidate, or `None` when first place is shared.
    pub fn winner(&self) -> Option<&str> {
        match self.entries.as_slice() {
            [first, second, ..] if second.2 == first.2 => None,
            [first, ..] => Some(&first.0),
            [] => None,
        }
    }

    pub fn is_tie(&self) -> bool {
        self.entries.len() > 1 && self.winner().is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareSummary {
    pub bands: Vec<Ranking>,
    pub classes: Vec<Ranking>,
    pub firing_rate: Ranking,
    /// Outright wins per candidate across bands.
    pub band_wins: BTreeMap<String, usize>,
    pub class_wins: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct WinnerRow<'a> {
    scope: &'a str,
    key: &'a str,
    winner: &'a str,
    value: f64,
}

// Codec names present in both reports get an `a:` / `b:` prefix.
fn candidate_names(a: &ReportData, b: &ReportData) -> (impl Fn(&str) -> String, impl Fn(&str) -> String) {
    let codecs = |r: &ReportData| -> Vec<String> { r.efficiency.iter().map(|e| e.codec.clone()).collect() };
    let (ca, cb) = (codecs(a), codecs(b));
    let shared: Vec<String> = ca.iter().filter(|c| cb.contains(c)).cloned().collect();
    let shared_b = shared.clone();
    (
        move |c: &str| {
            if shared.iter().any(|s| s == c) {
                format!("a:{c}")
            } else {
                c.to_string()
            }
        },
        move |c: &str| {
            if shared_b.iter().any(|s| s == c) {
                format!("b:{c}")
            } else {
                c.to_string()
            }
        },
    )
}

/// Ranks every codec of both reports by ERRdB per band and per class, and by
/// firing rate. Lower is better in all three. Fails if the reports were
/// produced from different corpora or feature settings.
pub fn compare_report(a: &ReportData, b: &ReportData) -> Result<CompareSummary, HarnessError> {
    if a.corpus != b.corpus {
        return Err(HarnessError::Data(format!(
            "reports cover different corpora: {} vs {}",
            a.corpus, b.corpus
        )));
    }
    let (name_a, name_b) = candidate_names(a, b);

    let mut bands: BTreeMap<usize, Vec<(String, f64)>> = BTreeMap::new();
    for r in &a.per_band {
        bands.entry(r.band).or_default().push((name_a(&r.codec), r.errdb));
    }
    for r in &b.per_band {
        bands.entry(r.band).or_default().push((name_b(&r.codec), r.errdb));
    }
    let mut classes: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for r in &a.per_class {
        classes.entry(r.class.clone()).or_default().push((name_a(&r.codec), r.errdb));
    }
    for r in &b.per_class {
        classes.entry(r.class.clone()).or_default().push((name_b(&r.codec), r.errdb));
    }
    let rates: Vec<(String, f64)> = a
        .efficiency
        .iter()
        .map(|e| (name_a(&e.codec), e.firing_rate_pct))
        .chain(b.efficiency.iter().map(|e| (name_b(&e.codec), e.firing_rate_pct)))
        .collect();

    let bands: Vec<Ranking> = bands
        .into_iter()
        .map(|(band, v)| Ranking::new("band", band.to_string(), v))
        .collect();
    let classes: Vec<Ranking> = classes
        .into_iter()
        .map(|(class, v)| Ranking::new("class", class, v))
        .collect();
    let count = |rs: &[Ranking]| {
        let mut wins = BTreeMap::new();
        for r in rs {
            if let Some(w) = r.winner() {
                *wins.entry(w.to_string()).or_insert(0) += 1;
            }
        }
        wins
    };
    Ok(CompareSummary {
        band_wins: count(&bands),
        class_wins: count(&classes),
        bands,
        classes,
        firing_rate: Ranking::new("firing_rate", "all".into(), rates),
    })
}

impl CompareSummary {
    fn all(&self) -> impl Iterator<Item = &Ranking> {
        self.bands
            .iter()
            .chain(&self.classes)
            .chain(std::iter::once(&self.firing_rate))
    }

    /// `winners.csv`: `scope,key,winner,value`, with `tie` when first place
    /// is shared.
    pub fn write_winners_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let err = |e: csv::Error| HarnessError::Data(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(err)?;
        for r in self.all() {
            let (winner, value) = match (r.winner(), r.entries.first()) {
                (Some(name), Some(first)) => (name, first.1),
                (None, Some(first)) => ("tie", first.1),
                _ => continue,
            };
            w.serialize(WinnerRow {
                scope: &r.scope,
                key: &r.key,
                winner,
                value,
            })
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `ranking.csv`: one row per candidate and key.
    pub fn write_ranking_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let err = |e: csv::Error| HarnessError::Data(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(err)?;
        w.write_record(["scope", "key", "rank", "candidate", "value"]).map_err(err)?;
        for r in self.all() {
            for (name, v, rank) in &r.entries {
                w.write_record([r.scope.as_str(), &r.key, &rank.to_string(), name, &v.to_string()])
                    .map_err(err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(codecs: &[(&str, [f64; 8], f64)]) -> ReportData {
        let mut per_band = Vec::new();
        let mut per_class = Vec::new();
        let mut efficiency = Vec::new();
        for (codec, errs, rate) in codecs {
            for (band, &errdb) in errs.iter().enumerate() {
                per_band.push(BandRow {
                    codec: codec.to_string(),
                    band,
                    errdb,
                    snr: -errdb,
                });
            }
            per_class.push(ClassRow {
                codec: codec.to_string(),
                class: "x".into(),
                errdb: errs[0],
            });
            efficiency.push(EfficiencyRow {
                codec: codec.to_string(),
                dataset: "d".into(),
                firing_rate_pct: *rate,
                encode_ms: 1.0,
                aux_bytes: 10,
            });
        }
        ReportData {
            per_band,
            per_class,
            efficiency,
            corpus: serde_json::json!({"fingerprint": "0"}),
        }
    }

    #[test]
    fn tae_wins_every_band() {
        let a = report(&[("TAE", [-30.0; 8], 10.0), ("SF", [-20.0; 8], 20.0)]);
        let b = report(&[("MW", [-10.0; 8], 30.0)]);
        let s = compare_report(&a, &b).unwrap();
        assert_eq!(s.band_wins.get("TAE"), Some(&8));
        assert_eq!(s.firing_rate.winner(), Some("TAE"));
        let order: Vec<&str> = s.bands[0].entries.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(order, ["TAE", "SF", "MW"]);
    }

    #[test]
    fn identical_reports_tie_everywhere() {
        let a = report(&[("TAE", [-30.0; 8], 10.0)]);
        let s = compare_report(&a, &a.clone()).unwrap();
        assert!(s.bands.iter().all(Ranking::is_tie));
        assert!(s.classes.iter().all(Ranking::is_tie));
        assert!(s.firing_rate.is_tie());
        assert!(s.band_wins.is_empty());
        assert_eq!(s.bands[0].entries[0].0, "a:TAE");
    }

    #[test]
    fn different_corpora_are_rejected() {
        let a = report(&[("TAE", [-30.0; 8], 10.0)]);
        let mut b = a.clone();
        b.corpus = serde_json::json!({"fingerprint": "1"});
        assert!(compare_report(&a, &b).is_err());
    }
}
