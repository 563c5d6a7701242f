//! CSV persistence of sweep records.

use std::io::{Read, Write};
use std::path::Path;

use super::sweep::{SweepRecord, SweepResult};
use crate::error::{Error, Result};

/// Column order of the sweep CSV.
pub const CSV_HEADER: [&str; 9] = [
    "sigma",
    "snr_db",
    "method",
    "scenario",
    "trial",
    "relative_error",
    "residual",
    "iterations",
    "converged",
];

/// Seventeen significant digits, enough to round-trip any `f64`.
fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes one row per record under [`CSV_HEADER`].
pub fn write_csv(result: &SweepResult, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &result.records {
        w.write_record([
            float(r.sigma),
            float(r.snr_db),
            r.method.to_string(),
            r.scenario.to_string(),
            r.trial.to_string(),
            float(r.relative_error),
            float(r.residual),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])?;
    }
    w.flush()
}

/// Writes the CSV to `path`.
pub fn emit_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_csv(result, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parses a CSV written by [`write_csv`].
pub fn parse_csv(input: impl Read) -> Result<SweepResult> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::parse(
            1,
            format!(
                "unexpected header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        let field = |j: usize| row.get(j).unwrap_or_default();
        let num = |j: usize| -> Result<f64> {
            field(j)
                .parse()
                .map_err(|_| Error::parse(line, format!("bad {} `{}`", CSV_HEADER[j], field(j))))
        };
        let int = |j: usize| -> Result<usize> {
            field(j)
                .parse()
                .map_err(|_| Error::parse(line, format!("bad {} `{}`", CSV_HEADER[j], field(j))))
        };
        records.push(SweepRecord {
            sigma: num(0)?,
            snr_db: num(1)?,
            method: field(2)
                .parse()
                .map_err(|e: Error| Error::parse(line, e.to_string()))?,
            scenario: field(3)
                .parse()
                .map_err(|e: Error| Error::parse(line, e.to_string()))?,
            trial: int(4)?,
            relative_error: num(5)?,
            residual: num(6)?,
            iterations: int(7)?,
            converged: field(8)
                .parse()
                .map_err(|_| Error::parse(line, format!("bad converged `{}`", field(8))))?,
        });
    }
    Ok(SweepResult { records })
}

/// Reads a CSV file written by [`emit_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(std::io::BufReader::new(file))
}
