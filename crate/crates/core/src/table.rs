//! Numeric CSV tables with `#` provenance lines.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Comment prefix of the only line allowed to differ between identical runs.
pub const TIMESTAMP_PREFIX: &str = "# generated: ";

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    provenance: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.add_provenance(key, value);
        self
    }

    pub fn add_provenance(&mut self, key: impl Into<String>, value: impl Into<String>) {
        // keep each entry on one comment line
        let value = value.into().replace(['\n', '\r'], " ");
        self.provenance.push((key.into(), value));
    }

    /// Rejects rows of the wrong width and non-finite cells.
    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(k) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value {} in column '{}' (row {})",
                row[k],
                self.columns[k],
                self.rows.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn provenance(&self) -> &[(String, String)] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// CSV text. Cells carry 17 significant digits, so parsing them back is
    /// exact. The timestamp line is omitted when `timestamp` is `None`.
    pub fn render(&self, timestamp: Option<&str>) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("# version: {VERSION}\n"));
        if let Some(ts) = timestamp {
            out.push_str(TIMESTAMP_PREFIX);
            out.push_str(ts);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        // writes to a Vec cannot fail
        w.write_record(&self.columns).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))
                .expect("in-memory csv");
        }
        let body = w.into_inner().expect("in-memory csv");
        out.push_str(&String::from_utf8(body).expect("ascii csv"));
        out
    }

    /// Parse text produced by [`CsvTable::render`]. `version` and timestamp
    /// comments are dropped; other `# key: value` lines become provenance.
    pub fn parse(text: &str) -> Result<Self> {
        let mut provenance = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if line.starts_with(TIMESTAMP_PREFIX) {
                continue;
            }
            if let Some((k, v)) = line[1..].trim_start().split_once(": ") {
                if k != "version" {
                    provenance.push((k.to_string(), v.to_string()));
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let bad = |e: csv::Error| Error::invalid(format!("malformed csv: {e}"));
        let columns: Vec<String> = reader.headers().map_err(bad)?.iter().map(String::from).collect();
        let mut table = Self {
            columns,
            rows: Vec::new(),
            provenance,
        };
        for record in reader.records() {
            let record = record.map_err(bad)?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("not a number: '{cell}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            table.push_row(row)?;
        }
        Ok(table)
    }
}

/// Drop the timestamp comment so two renders can be compared byte for byte.
pub fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with(TIMESTAMP_PREFIX))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Seconds since the Unix epoch, as written on the timestamp line.
pub fn unix_timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix {secs}")
}

/// Write to `path`, or to standard output when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
