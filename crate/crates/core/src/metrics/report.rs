//! Report CSVs. Rows are sorted by codec name, then band index or class
//! label, whatever order they were produced in.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub codec: String,
    pub band: usize,
    pub errdb: f64,
    pub snr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub codec: String,
    pub class: String,
    pub errdb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub codec: String,
    pub dataset: String,
    pub firing_rate_pct: f64,
    pub encode_ms: f64,
    pub aux_bytes: usize,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), MetricsError> {
    let err = |e: csv::Error| MetricsError::Report(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush()
        .map_err(|e| MetricsError::Report(format!("{}: {e}", path.display())))
}

pub fn write_per_band_csv(path: &Path, rows: &[BandRow]) -> Result<(), MetricsError> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| (&a.codec, a.band).cmp(&(&b.codec, b.band)));
    write_rows(path, &rows)
}

pub fn write_per_class_csv(path: &Path, rows: &[ClassRow]) -> Result<(), MetricsError> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| (&a.codec, &a.class).cmp(&(&b.codec, &b.class)));
    write_rows(path, &rows)
}

pub fn write_efficiency_csv(path: &Path, rows: &[EfficiencyRow]) -> Result<(), MetricsError> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| (&a.codec, &a.dataset).cmp(&(&b.codec, &b.dataset)));
    write_rows(path, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_band_rows_are_sorted_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("per_band.csv");
        let row = |codec: &str, band| BandRow {
            codec: codec.into(),
            band,
            errdb: -1.5,
            snr: 1.5,
        };
        write_per_band_csv(&path, &[row("TAE", 0), row("MW", 1), row("MW", 0)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "codec,band,errdb,snr\nMW,0,-1.5,1.5\nMW,1,-1.5,1.5\nTAE,0,-1.5,1.5\n"
        );
    }
}
