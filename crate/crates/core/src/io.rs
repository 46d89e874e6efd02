//! Delimited-text readers for series and externally produced forecasts.
//!
//! Series files carry one value column per feature and an optional `label`
//! column (0/1). Comment lines start with `#`; a `# split_index=N` comment
//! marks the end of the non-anomalous prefix.
//!
//! ```text
//! # split_index=200
//! value,label
//! 0.31,0
//! ```
//!
//! Forecast files have the header `issue_index,h1,...,hD`, one row per issue
//! index; empty cells are missing horizons.

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{AcasError, Result};
use crate::forecasting::{ForecastFrame, SeriesRecord};

/// A parsed series file, possibly multivariate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub labels: Option<Vec<bool>>,
    pub split_index: Option<usize>,
}

impl SeriesTable {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature(&self, i: usize) -> Result<SeriesRecord> {
        SeriesRecord::new(self.columns[i].clone(), self.labels.clone(), self.split_index)
    }
}

fn parse_error(line: u64, message: impl Into<String>) -> AcasError {
    AcasError::Parse {
        line,
        message: message.into(),
    }
}

fn record_line(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(err: csv::Error) -> AcasError {
    let line = err.position().map_or(0, |p| p.line());
    parse_error(line, err.to_string())
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(text.as_bytes())
}

fn parse_f64(cell: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = cell
        .parse()
        .map_err(|_| parse_error(line, format!("column `{column}`: cannot parse `{cell}` as a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("column `{column}`: non-finite value `{cell}`")));
    }
    Ok(v)
}

fn metadata(text: &str) -> Result<Option<usize>> {
    let mut split = None;
    for (i, raw) in text.lines().enumerate() {
        let Some(comment) = raw.trim_start().strip_prefix('#') else {
            continue;
        };
        if let Some((key, value)) = comment.split_once('=') {
            if key.trim() == "split_index" {
                let n = value
                    .trim()
                    .parse()
                    .map_err(|_| parse_error(i as u64 + 1, format!("bad split_index `{}`", value.trim())))?;
                split = Some(n);
            }
        }
    }
    Ok(split)
}

/// Parses a series file.
pub fn parse_series(text: &str) -> Result<SeriesTable> {
    let split_index = metadata(text)?;
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let label_col = headers.iter().position(|h| h.eq_ignore_ascii_case("label"));
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| Some(c) != label_col).collect();
    if feature_cols.is_empty() {
        return Err(parse_error(1, "series file has no value column"));
    }
    let names = feature_cols.iter().map(|&c| headers[c].to_string()).collect();
    let mut columns = vec![Vec::new(); feature_cols.len()];
    let mut labels = label_col.map(|_| Vec::new());

    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        for (col, &c) in columns.iter_mut().zip(&feature_cols) {
            col.push(parse_f64(&record[c], line, &headers[c])?);
        }
        if let (Some(c), Some(l)) = (label_col, labels.as_mut()) {
            l.push(match &record[c] {
                "0" => false,
                "1" => true,
                other => return Err(parse_error(line, format!("label must be 0 or 1, got `{other}`"))),
            });
        }
    }
    let table = SeriesTable {
        names,
        columns,
        labels,
        split_index,
    };
    if let Some(s) = split_index {
        if s > table.len() {
            return Err(parse_error(0, format!("split_index {s} beyond {} rows", table.len())));
        }
    }
    Ok(table)
}

/// Parses a forecast file into frames in file order.
pub fn parse_forecasts(text: &str) -> Result<Vec<ForecastFrame>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.get(0) != Some("issue_index") {
        return Err(parse_error(1, "forecast header must start with `issue_index`"));
    }
    for (d, h) in headers.iter().enumerate().skip(1) {
        if h != format!("h{d}") {
            return Err(parse_error(1, format!("expected column `h{d}`, found `{h}`")));
        }
    }
    let horizons = headers.len() - 1;
    if horizons == 0 {
        return Err(parse_error(1, "forecast file declares no horizons"));
    }
    let mut frames = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let issue: usize = record[0]
            .parse()
            .map_err(|_| parse_error(line, format!("bad issue_index `{}`", &record[0])))?;
        let values = (1..=horizons)
            .map(|d| {
                let cell = &record[d];
                if cell.is_empty() {
                    Ok(None)
                } else {
                    parse_f64(cell, line, &headers[d]).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        frames.push(ForecastFrame::new(issue, values)?);
    }
    Ok(frames)
}
