//! Multivariate delimited-text series: rows are time, columns components.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::output::num;

/// How a delimited text file is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelimitedFormat {
    pub delimiter: u8,
    pub header: bool,
    /// Cells spelled like this are missing values.
    pub missing: Vec<String>,
    pub comment: Option<u8>,
}

impl Default for DelimitedFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header: true,
            missing: ["", "NA", "NaN", "nan"].map(String::from).to_vec(),
            comment: Some(b'#'),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedSeries {
    pub labels: Vec<String>,
    /// Complete rows, row-major.
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// One entry per data row of the source; `true` where a component was
    /// missing and the row was dropped.
    pub missing: Vec<bool>,
}

impl IngestedSeries {
    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = labels.len();
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Malformed {
                line: i as u64 + 1,
                msg: format!("expected {cols} values, got {}", rows[i].len()),
            });
        }
        Ok(Self {
            labels,
            data: rows.iter().flatten().copied().collect(),
            rows: rows.len(),
            cols,
            missing: vec![false; rows.len()],
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn dropped(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    /// At least `2 n` complete rows, the least a block size `n` can use.
    pub fn require_block_size(&self, n: usize) -> Result<()> {
        if self.rows < 2 * n {
            return Err(evtobs_core::Error::InsufficientData {
                what: "complete rows for the block size",
                got: self.rows,
                need: 2 * n,
            }
            .into());
        }
        Ok(())
    }
}

pub fn ingest(path: &Path, fmt: &DelimitedFormat) -> Result<IngestedSeries> {
    let f = File::open(path).map_err(io_err(path))?;
    ingest_reader(f, fmt)
}

pub fn ingest_reader<R: Read>(input: R, fmt: &DelimitedFormat) -> Result<IngestedSeries> {
    let mut rd = csv::ReaderBuilder::new()
        .delimiter(fmt.delimiter)
        .has_headers(fmt.header)
        .comment(fmt.comment)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut labels: Vec<String> = if fmt.header {
        rd.headers()?.iter().map(String::from).collect()
    } else {
        Vec::new()
    };
    let mut data = Vec::new();
    let mut missing = Vec::new();
    let mut rows = 0;
    let mut record = csv::StringRecord::new();
    loop {
        match rd.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(Error::Malformed {
                    line,
                    msg: e.to_string(),
                });
            }
        }
        let line = record.position().map_or(0, |p| p.line());
        if labels.is_empty() {
            labels = (0..record.len()).map(|j| format!("c{j}")).collect();
        }
        let mut values = Vec::with_capacity(record.len());
        let mut complete = true;
        for (j, cell) in record.iter().enumerate() {
            if fmt.missing.iter().any(|m| m == cell) {
                complete = false;
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::Malformed {
                        line,
                        msg: format!("column {:?}: {cell:?} is not a finite number", labels[j]),
                    })
                }
            }
        }
        missing.push(!complete);
        if complete {
            data.extend(values);
            rows += 1;
        }
    }
    Ok(IngestedSeries {
        cols: labels.len(),
        labels,
        data,
        rows,
        missing,
    })
}

/// Writes complete rows with a header; ingesting the file gives the series
/// back exactly.
pub fn write_series(path: &Path, series: &IngestedSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&series.labels)?;
    for i in 0..series.rows {
        w.write_record(series.row(i).iter().map(|v| num(*v)))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}
