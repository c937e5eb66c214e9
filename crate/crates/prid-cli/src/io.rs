//! CSV ingestion and emission for time series.
//!
//! Rows are time steps, columns are units. Parsing reports the exact row
//! and column of the first offending cell; row numbers are 1-based file
//! lines, so an optional header row counts as line 1.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use prid::{PridError, Result, TimeSeries};

fn input_error(msg: String) -> PridError {
    PridError::InvalidInput(msg)
}

/// Reads a whole CSV file into a time series. With `has_header` the first
/// line supplies column labels; otherwise every line is data.
pub fn read_series_path(path: &Path, has_header: bool) -> Result<TimeSeries> {
    let file = std::fs::File::open(path)
        .map_err(|e| input_error(format!("cannot open {}: {e}", path.display())))?;
    read_series(file, has_header)
        .map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Reads CSV from any source. See [`read_series_path`].
pub fn read_series<R: Read>(source: R, has_header: bool) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut labels: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut n_cols: Option<usize> = None;

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| input_error(format!("row {line}: {e}")))?;
        if idx == 0 && has_header {
            labels = Some(record.iter().map(str::to_string).collect());
            n_cols = Some(record.len());
            continue;
        }
        if let Some(n) = n_cols {
            if record.len() != n {
                return Err(input_error(format!(
                    "row {line}: expected {n} fields, found {}",
                    record.len()
                )));
            }
        } else {
            n_cols = Some(record.len());
        }
        let mut row = Vec::with_capacity(record.len());
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                input_error(format!(
                    "row {line}, column {}: cannot parse '{cell}' as a number",
                    c + 1
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }

    let n = n_cols.ok_or_else(|| input_error("no rows in input".to_string()))?;
    if rows.is_empty() {
        return Err(input_error("no data rows in input".to_string()));
    }
    let data = DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]);
    let series = TimeSeries::new(data)?;
    match labels {
        Some(labels) => series.with_labels(labels),
        None => Ok(series),
    }
}

/// Writes a series as CSV, one row per time step, with a header line when
/// requested (stored labels, or `x1..xN`). Values use the shortest decimal
/// form that parses back to the same float, so output is reproducible and
/// lossless.
pub fn write_series<W: Write>(sink: W, series: &TimeSeries, header: bool) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let n = series.n_vars();
    if header {
        let labels: Vec<String> = match series.labels() {
            Some(labels) => labels.to_vec(),
            None => (1..=n).map(|i| format!("x{i}")).collect(),
        };
        writer
            .write_record(&labels)
            .map_err(|e| input_error(format!("cannot write CSV header: {e}")))?;
    }
    let data = series.data();
    let mut record = Vec::with_capacity(n);
    for r in 0..data.nrows() {
        record.clear();
        record.extend(data.row(r).iter().map(|v| v.to_string()));
        writer
            .write_record(&record)
            .map_err(|e| input_error(format!("cannot write CSV row {}: {e}", r + 1)))?;
    }
    writer
        .flush()
        .map_err(|e| input_error(format!("cannot flush CSV output: {e}")))?;
    Ok(())
}
