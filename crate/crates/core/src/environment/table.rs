use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// A header-labelled CSV table kept as strings; numeric interpretation is
/// left to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file).map_err(|e| match e {
            Error::Csv { source, .. } => Error::Csv {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let wrap = |source| Error::Csv {
            path: "<reader>".into(),
            source,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(wrap)?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(wrap)?;
            rows.push(record.iter().map(str::to_owned).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("column `{name}` not found")))
    }

    /// Parses a cell as a 64-bit float; blanks and NA-style markers are
    /// treated as missing.
    pub fn numeric(cell: &str) -> Option<f64> {
        match cell {
            "" | "NA" | "na" | "N/A" | "NaN" | "nan" | "null" | "NULL" => None,
            s => s.parse::<f64>().ok().filter(|v| v.is_finite()),
        }
    }

    /// Columns other than `exclude` whose every non-missing cell is numeric.
    pub fn numeric_columns(&self, exclude: &[&str]) -> Vec<String> {
        self.headers
            .iter()
            .enumerate()
            .filter(|(_, h)| !exclude.contains(&h.as_str()))
            .filter(|(j, _)| {
                self.rows.iter().all(|r| {
                    let cell = r.get(*j).map(String::as_str).unwrap_or("");
                    Self::numeric(cell).is_some() || is_missing(cell)
                })
            })
            .map(|(_, h)| h.clone())
            .collect()
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "N/A" | "NaN" | "nan" | "null" | "NULL")
}
