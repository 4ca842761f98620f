//! The CSV dialect shared with the plotting tools: comma separated, `.`
//! decimal point, `#` comment lines (header first), one header row, then data.
//! Empty cells mark values that are undefined or not representable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};

use crate::error::{CliError, CliResult};

/// Key/value provenance lines written before the column row.
#[derive(Debug, Clone, Default)]
pub struct Header {
    pub lines: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, timestamp: &str) -> Self {
        let mut h = Header::default();
        h.push(
            "generator",
            format!("qi-cd-eval {}", env!("CARGO_PKG_VERSION")),
        );
        h.push("command", command);
        h.push("timestamp", timestamp);
        h
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push((key.to_string(), value.into()));
    }
}

/// Header timestamp. Uses `SOURCE_DATE_EPOCH` when set, the current time when
/// `now` is requested, and the Unix epoch otherwise so that identical runs
/// produce identical bytes.
pub fn timestamp(now: bool) -> CliResult<String> {
    let dt: DateTime<Utc> = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => {
            let secs: i64 = s.trim().parse().map_err(|_| {
                CliError::validation(format!("SOURCE_DATE_EPOCH `{s}` is not an integer"))
            })?;
            DateTime::from_timestamp(secs, 0).ok_or_else(|| {
                CliError::validation(format!("SOURCE_DATE_EPOCH {secs} out of range"))
            })?
        }
        Err(_) if now => Utc::now(),
        Err(_) => DateTime::UNIX_EPOCH,
    };
    Ok(dt.to_rfc3339_opts(SecondsFormat::Secs, true))
}

/// Shortest round-trip representation; never NaN.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x:e}")
    }
}

pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
    columns: usize,
    rows: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &Header, columns: &[String]) -> CliResult<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = CsvWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            columns: columns.len(),
            rows: 0,
        };
        for (k, v) in &header.lines {
            w.line(&format!("# {k}: {v}"))?;
        }
        w.line(&columns.join(","))?;
        w.flush()?;
        Ok(w)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&mut self, cells: &[String]) -> CliResult<()> {
        assert_eq!(
            cells.len(),
            self.columns,
            "row width does not match header in {}",
            self.path.display()
        );
        self.rows += 1;
        self.line(&cells.join(","))
    }

    pub fn comment(&mut self, key: &str, value: &str) -> CliResult<()> {
        self.line(&format!("# {key}: {value}"))
    }

    pub fn flush(&mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }

    fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.out, "{s}").map_err(|e| CliError::io(&self.path, e))
    }
}
